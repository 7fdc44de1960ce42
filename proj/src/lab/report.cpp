#include <cstdio>
#include <fstream>
#include <map>

#include "core/container.hpp"
#include "core/errors.hpp"
#include "lab/lab.hpp"
#include "render/render.hpp"

namespace velinv::lab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string flag(bool b) { return b ? "on" : "off"; }
std::string yes_no(bool b) { return b ? "yes" : "no"; }

// Quotes a free-text field so commas in error messages stay inside one cell.
std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_text(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("write failed for " + path.string());
  }
  fs::rename(tmp, path);
}

json test_json(const stats::TestResult& r) {
  return {{"statistic", r.statistic}, {"p_value", r.p_value}, {"df1", r.df1}, {"df2", r.df2}};
}

json anova_json(const AnovaRow& r, const char* fixed_name) {
  json j = {{"shots", r.shots}, {fixed_name, r.fixed_flag}, {"mean_off", r.mean_off}, {"mean_on", r.mean_on}};
  if (r.skipped.empty()) {
    j["test"] = test_json(r.result);
    j["significant"] = r.significant;
  } else {
    j["skipped"] = r.skipped;
  }
  return j;
}

std::string anova_csv(const std::vector<AnovaRow>& rows, const char* fixed_name) {
  std::string s = std::string("shots,") + fixed_name + ",mean_off,mean_on,F,p_value,significant,skipped\n";
  for (const auto& r : rows) {
    s += std::to_string(r.shots) + "," + flag(r.fixed_flag) + "," + num(r.mean_off) + "," + num(r.mean_on) + ",";
    if (r.skipped.empty()) {
      s += num(r.result.statistic) + "," + num(r.result.p_value) + "," + yes_no(r.significant) + ",\n";
    } else {
      s += ",,," + quoted(r.skipped) + "\n";
    }
  }
  return s;
}

}  // namespace

json summary_json(const AblationReport& rep) {
  json pops = json::array();
  for (const auto& p : rep.populations) {
    json inst = json::array();
    for (const auto& i : p.instances) {
      inst.push_back({{"index", i.index},
                      {"seed", i.seed},
                      {"valid", i.valid},
                      {"test_ssim", i.test_ssim},
                      {"test_mse", i.test_mse},
                      {"selected_epoch", i.selected_epoch},
                      {"checkpoint", i.checkpoint},
                      {"error", i.error}});
    }
    pops.push_back({{"config", to_json(p.config)},
                    {"test_ssims", p.test_ssims},
                    {"mean_ssim", p.mean},
                    {"std_ssim", p.std},
                    {"valid", p.valid},
                    {"invalid_reason", p.invalid_reason},
                    {"instances", inst}});
  }
  json ens = json::array();
  for (const auto& e : rep.ensembles) {
    ens.push_back({{"config", to_json(e.config)},
                   {"members", e.members},
                   {"ensemble_ssim", e.ensemble_ssim},
                   {"ensemble_mse", e.ensemble_mse},
                   {"mean_member_mse", e.mean_member_mse},
                   {"mean_member_ssim", e.mean_member_ssim}});
  }
  const auto& sig = rep.significance;
  json shapiro = json::array();
  for (const auto& r : sig.shapiro) {
    json j = {{"config", to_json(r.config)}, {"n", r.n}};
    if (r.skipped.empty()) {
      j["W"] = r.result.statistic;
      j["p_value"] = r.result.p_value;
      j["normal"] = r.normal;
    } else {
      j["skipped"] = r.skipped;
    }
    shapiro.push_back(j);
  }
  json levene = json::array();
  for (const auto& r : sig.levene) {
    json j = {{"shots", r.shots}, {"populations", r.populations}};
    if (r.skipped.empty()) {
      j["test"] = test_json(r.result);
      j["equal_variance"] = r.equal_variance;
    } else {
      j["skipped"] = r.skipped;
    }
    levene.push_back(j);
  }
  json af = json::array(), ar = json::array();
  for (const auto& r : sig.anova_fourier) af.push_back(anova_json(r, "regularization"));
  for (const auto& r : sig.anova_reg) ar.push_back(anova_json(r, "fourier"));
  return {{"master_seed", rep.master_seed},
          {"alpha", sig.alpha},
          {"settings", rep.settings},
          {"populations", pops},
          {"ensembles", ens},
          {"shapiro", shapiro},
          {"levene", levene},
          {"anova_fourier", af},
          {"anova_reg", ar}};
}

void emit_report(const AblationReport& rep, const fs::path& out_dir) {
  if (rep.populations.empty()) throw ConfigError("nothing to report");
  fs::create_directories(out_dir);

  std::string t1 = "shots,fourier,regularization,mean_ssim,std_ssim\n";
  for (const auto& p : rep.populations) {
    t1 += std::to_string(p.config.shots) + "," + flag(p.config.use_fourier) + "," + flag(p.config.use_reg) + "," +
          num(p.mean) + "," + num(p.std) + "\n";
  }
  write_text(out_dir / "table1.csv", t1);

  std::string sh = "shots,fourier,regularization,n,W,p_value,normal,skipped\n";
  for (const auto& r : rep.significance.shapiro) {
    sh += std::to_string(r.config.shots) + "," + flag(r.config.use_fourier) + "," + flag(r.config.use_reg) + "," +
          std::to_string(r.n) + ",";
    sh += r.skipped.empty() ? num(r.result.statistic) + "," + num(r.result.p_value) + "," + yes_no(r.normal) + ",\n"
                            : ",,," + quoted(r.skipped) + "\n";
  }
  write_text(out_dir / "shapiro.csv", sh);

  std::string lv = "shots,populations,W,p_value,df1,df2,equal_variance,skipped\n";
  for (const auto& r : rep.significance.levene) {
    lv += std::to_string(r.shots) + "," + std::to_string(r.populations) + ",";
    lv += r.skipped.empty() ? num(r.result.statistic) + "," + num(r.result.p_value) + "," + num(r.result.df1) + "," +
                                  num(r.result.df2) + "," + yes_no(r.equal_variance) + ",\n"
                            : ",,,,," + quoted(r.skipped) + "\n";
  }
  write_text(out_dir / "levene.csv", lv);

  write_text(out_dir / "anova_fourier.csv", anova_csv(rep.significance.anova_fourier, "regularization"));
  write_text(out_dir / "anova_reg.csv", anova_csv(rep.significance.anova_reg, "fourier"));

  std::string en = "shots,fourier,regularization,members,ensemble_ssim,ensemble_mse,mean_member_mse,mean_member_ssim\n";
  for (const auto& e : rep.ensembles) {
    en += std::to_string(e.config.shots) + "," + flag(e.config.use_fourier) + "," + flag(e.config.use_reg) + "," +
          std::to_string(e.members.size()) + "," + num(e.ensemble_ssim) + "," + num(e.ensemble_mse) + "," +
          num(e.mean_member_mse) + "," + num(e.mean_member_ssim) + "\n";
  }
  write_text(out_dir / "ensembles.csv", en);

  write_json(out_dir / "summary.json", summary_json(rep));

  std::map<int, std::vector<std::vector<double>>> by_shots;
  for (const auto& p : rep.populations) by_shots[p.config.shots].push_back(p.test_ssims);
  for (const auto& [shots, series] : by_shots) {
    double lo = 1.0, hi = 0.0;
    for (const auto& s : series) {
      for (double v : s) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (lo > hi) {
      lo = 0.0;
      hi = 1.0;
    }
    render::render_histogram(out_dir / ("hist_shots" + std::to_string(shots) + ".png"), series, 20, lo, hi);
  }
}

}  // namespace velinv::lab
