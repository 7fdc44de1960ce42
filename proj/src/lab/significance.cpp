#include <algorithm>
#include <set>

#include "core/errors.hpp"
#include "lab/lab.hpp"

namespace velinv::lab {

namespace {

const PopulationResult* find(const std::vector<PopulationResult>& pops, int shots, bool fourier, bool reg) {
  for (const auto& p : pops) {
    if (p.config.shots == shots && p.config.use_fourier == fourier && p.config.use_reg == reg) return &p;
  }
  return nullptr;
}

AnovaRow compare(const PopulationResult* off, const PopulationResult* on, int shots, bool fixed, double alpha) {
  AnovaRow row;
  row.shots = shots;
  row.fixed_flag = fixed;
  if (!off || !on) {
    row.skipped = "population missing";
    return row;
  }
  row.mean_off = off->mean;
  row.mean_on = on->mean;
  if (!off->valid || !on->valid) {
    row.skipped = !off->valid ? off->config.label() + ": " + off->invalid_reason
                              : on->config.label() + ": " + on->invalid_reason;
    return row;
  }
  try {
    row.result = stats::anova_oneway({off->test_ssims, on->test_ssims});
    row.significant = row.result.p_value < alpha;
  } catch (const Error& e) {
    row.skipped = e.what();
  }
  return row;
}

}  // namespace

SignificanceReport significance_pipeline(const std::vector<PopulationResult>& pops, double alpha) {
  SignificanceReport rep;
  rep.alpha = alpha;
  std::set<int> shot_counts;
  for (const auto& p : pops) shot_counts.insert(p.config.shots);

  for (const auto& p : pops) {
    ShapiroRow row;
    row.config = p.config;
    row.n = p.test_ssims.size();
    if (!p.valid) {
      row.skipped = p.invalid_reason;
    } else if (row.n > 50) {
      row.skipped = "population larger than 50";
    } else {
      try {
        row.result = stats::shapiro_wilk(p.test_ssims);
        row.normal = row.result.p_value >= alpha;
      } catch (const Error& e) {
        row.skipped = e.what();
      }
    }
    rep.shapiro.push_back(row);
  }

  for (int shots : shot_counts) {
    LeveneRow row;
    row.shots = shots;
    std::vector<std::vector<double>> groups;
    for (const auto& p : pops) {
      if (p.config.shots == shots && p.valid) groups.push_back(p.test_ssims);
    }
    row.populations = groups.size();
    if (groups.size() < 2) {
      row.skipped = "fewer than two valid populations";
    } else {
      try {
        row.result = stats::levene(groups);
        row.equal_variance = row.result.p_value >= alpha;
      } catch (const Error& e) {
        row.skipped = e.what();
      }
    }
    rep.levene.push_back(row);
  }

  for (int shots : shot_counts) {
    for (bool reg : {false, true}) {
      rep.anova_fourier.push_back(
          compare(find(pops, shots, false, reg), find(pops, shots, true, reg), shots, reg, alpha));
    }
    for (bool fourier : {false, true}) {
      rep.anova_reg.push_back(
          compare(find(pops, shots, fourier, false), find(pops, shots, fourier, true), shots, fourier, alpha));
    }
  }
  // Drop comparisons where neither side exists (e.g. a partial matrix).
  const auto absent = [](const AnovaRow& r) { return r.skipped == "population missing"; };
  std::erase_if(rep.anova_fourier, absent);
  std::erase_if(rep.anova_reg, absent);
  return rep;
}

}  // namespace velinv::lab
