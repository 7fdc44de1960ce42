// Acceptance runner: one PASS/FAIL line per criterion.
//   velinv_acceptance --fast          criteria 1-6 (seconds)
//   velinv_acceptance --desk --work D criteria 7-10 (desk preset; hours on one core)
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "core/errors.hpp"
#include "forward/solver.hpp"
#include "net/adam.hpp"
#include "net/loss.hpp"
#include "net/unet.hpp"
#include "oracles.hpp"
#include "stats/stats.hpp"
#include "support.hpp"
#include "velinv/velinv.h"

using namespace velinv;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int g_failures = 0;

void report(int id, bool pass, const std::string& detail, bool gating = true) {
  const char* tag = !gating ? "INFO" : (pass ? "PASS" : "FAIL");
  if (gating && !pass) ++g_failures;
  std::printf("[%s] criterion %d: %s\n", tag, id, detail.c_str());
  std::fflush(stdout);
}

std::string f(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs one criterion; an escaping exception is a failure, not a crash.
void guarded(int id, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

// ---------------------------------------------------------------- 1-6

void criterion1() {
  const auto g = testing::desk_grid();
  const auto vm = testing::constant_model(g, 3000.0f);
  auto acq = forward::AcquisitionSpec::equidistant(g.nx, 1, 1.2, 0.01);
  const int src_col = 20, offset = 20;
  acq.emitter_columns = {src_col};
  const auto t0 = std::chrono::steady_clock::now();
  const auto r =
      forward::simulate_shot(vm, build_material_fields(vm), forward::SourceSpec::with_frequency(src_col, 6.0), acq);
  const double secs = seconds_since(t0);
  const double expected = offset * g.dx / 3000.0 / 0.01;
  std::vector<double> trace(r.gather.data.cols());
  for (std::size_t k = 0; k < trace.size(); ++k) trace[k] = r.gather.data(src_col + offset, k);
  const double pick = oracle::peak_position(oracle::envelope(trace)) - (1.2 / 6.0) / 0.01;
  const double moveout = testing::xcorr_lag(r.gather.data, src_col + offset, src_col + 2 * offset);
  const bool ok = std::fabs(pick - expected) <= 2.0 && std::fabs(moveout - expected) <= 2.0 && secs <= 5.0;
  report(1, ok,
         f("direct arrival at %d cells: envelope pick %.2f, moveout %d->%d %.2f, d/c %.2f samples (tol 2); "
           "%.2f s/shot (<= 5)",
           offset, pick, offset, 2 * offset, moveout, expected, secs));
}

void criterion2() {
  const auto g = testing::desk_grid();
  const int col = 48, iface = 20, n = 160;
  const double c1 = 3000.0;
  const double expected = (2.0 * iface - forward::kSourceRow - forward::kReceiverRow - 1) * g.dy / c1 / 0.01;
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail = f("2h/c1 %.2f samples;", expected);
  for (float c2 : {4500.0f, 2000.0f}) {
    const double dt = forward::solver_dt(g, std::max<double>(c1, c2), 0.5, 0.01);
    const auto ref = testing::probe_run(testing::constant_model(g, 3000.0f), dt, col, iface - 1, n, 6.0);
    const auto two = testing::probe_run(testing::two_layer_model(g, 3000.0f, c2, iface), dt, col, iface - 1, n, 6.0);
    std::vector<double> refl(n);
    for (int k = 0; k < n; ++k) refl[static_cast<std::size_t>(k)] = two.surface_vy[k] - ref.surface_vy[k];
    const double pick = oracle::peak_position(oracle::envelope(refl)) - 20.0;
    double best = 0.0;
    for (int lag = 0; lag < n; ++lag) {
      double acc = 0.0;
      for (int k = 0; k + lag < n; ++k) acc += ref.interior_p[k] * refl[static_cast<std::size_t>(k + lag)];
      if (std::fabs(acc) > std::fabs(best)) best = acc;
    }
    const double R = (c2 - c1) / (c2 + c1);
    // Upgoing vy = -R p_inc / Z.
    const bool sign_ok = best * R < 0.0;
    const bool time_ok = std::fabs(pick - expected) <= 2.0;
    ok = ok && sign_ok && time_ok;
    detail += f(" R=%+.2f: pick %.2f, polarity %s;", R, pick, sign_ok ? "ok" : "WRONG");
  }
  const double secs = seconds_since(t0);
  ok = ok && secs <= 10.0;
  report(2, ok, detail + f(" %.2f s (<= 10)", secs));
}

void criterion3() {
  const auto g = testing::desk_grid();
  const auto vm = testing::two_layer_model(g, 3000.0f, 4200.0f, 30);
  forward::SolverOptions opt;
  opt.top = forward::TopBoundary::Absorbing;
  const auto t0 = std::chrono::steady_clock::now();
  forward::Simulator sim(g, build_material_fields(vm), forward::solver_dt(g, 4200.0, 0.5, 0.01), opt, 0.5);
  const double t_off = 0.4;
  double peak = 0.0, prev = 0.0, worst = 0.0;
  int increases = 0;
  while (sim.time() < 2.0) {
    sim.step();
    if (sim.time() <= t_off) sim.inject_pressure(32, 48, 1e6 * forward::ricker(sim.time() - 0.2, 6.0));
    const double e = sim.energy();
    peak = std::max(peak, e);
    if (sim.time() > t_off) {
      if (prev > 0.0 && e > prev) {
        ++increases;
        worst = std::max(worst, e / prev - 1.0);
      }
      prev = e;
    }
  }
  const double secs = seconds_since(t0);
  const double final_ratio = sim.energy() / peak;
  report(3, increases == 0 && final_ratio <= 0.02 && secs <= 10.0,
         f("absorbing on all sides, source off after %.1f s: %d increasing steps (max rel %.2g), "
           "final/peak energy %.2g (<= 0.02); %.2f s (<= 10)",
           t_off, increases, worst, final_ratio, secs));
}

net::NetworkWeights toy_weights(std::uint64_t seed) {
  auto w = net::init_weights({2, 4, 2}, seed);
  std::mt19937_64 rng(seed + 100);
  std::uniform_real_distribution<float> u(-0.1f, 0.1f);
  for (const auto& L : w.layers) {
    for (int k = 0; k < L.cout; ++k) w.params[L.bias_offset + static_cast<std::size_t>(k)] = u(rng);
  }
  return w;
}

void criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t seed = 7;
  const auto w = toy_weights(seed);
  Tensor3 x(2, 8, 8);
  Array2f target(8, 8);
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (float& v : x.data) v = u(rng);
  for (float& v : target.values()) v = u(rng);
  const auto wide = oracle::gradient_check(w, x, target, 1e-3, 100, seed, true, 1e-4);
  const auto narrow = oracle::gradient_check(w, x, target, 1e-3, 100, seed, false, 1e-3);
  const double max_wide = oracle::max_rel_error(wide);
  std::vector<double> errs;
  for (const auto& s : narrow) errs.push_back(s.rel_error);
  std::sort(errs.begin(), errs.end());
  const double secs = seconds_since(t0);
  report(4, max_wide <= 1e-3 && secs <= 60.0,
         f("depth-2 net, 8x8 input, 100 random parameters: max rel error %.2e in double precision (<= 1e-3); "
           "float32 differences (informational) p95 %.1e, max %.1e; %.2f s (<= 60)",
           max_wide, errs[errs.size() * 95 / 100], errs.back(), secs));
}

void criterion5() {
  Array2d ramp(8, 8);
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t c = 0; c < 8; ++c) ramp(r, c) = static_cast<double>(c);
  }
  const auto [gx, gy] = net::sobel_filter(ramp);
  bool sobel_ok = true;
  for (double v : gx.values()) sobel_ok = sobel_ok && v == 8.0;
  for (double v : gy.values()) sobel_ok = sobel_ok && v == 0.0;

  const auto img = testing::random_image(32, 32, 3);
  const double s = stats::ssim(img, img);

  net::TrainConfig tc;
  tc.lr = 1e-4;
  std::vector<float> w{0.0f};
  auto st = net::AdamState::zeros(1);
  net::adam_step(w, std::vector<float>{0.37f}, st, 1, tc);
  const double step = std::fabs(static_cast<double>(w[0]));
  report(5, sobel_ok && std::fabs(s - 1.0) <= 1e-12 && std::fabs(step - tc.lr) <= 1e-6,
         f("sobel ramp gx %s 8; ssim(x,x)-1 = %.1e (<= 1e-12); adam first step %.6e vs lr %.1e (tol 1e-6)",
           sobel_ok ? "==" : "!=", s - 1.0, step, tc.lr));
}

void criterion6() {
  bool ok = true;
  double worst_t = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    std::mt19937_64 rng(500 + s);
    std::normal_distribution<double> n0(0.0, 1.0), n1(0.4 * static_cast<double>(s % 3), 1.2);
    std::vector<double> a(8 + s % 4), b(10);
    for (double& v : a) v = n0(rng);
    for (double& v : b) v = n1(rng);
    worst_t = std::max(worst_t, std::fabs(stats::anova_oneway({a, b}).p_value - oracle::pooled_t_test_p(a, b)));
  }
  ok = ok && worst_t <= 1e-9;

  double worst_f = 0.0;
  for (double d : {1.0, 2.0, 5.0, 12.0, 40.0}) worst_f = std::max(worst_f, std::fabs(stats::f_cdf(1.0, d, d) - 0.5));
  ok = ok && worst_f <= 1e-10;

  const std::vector<std::vector<double>> groups = {
      {8.2, 9.1, 7.7, 8.8, 9.4}, {10.1, 12.3, 9.8, 11.5, 13.0}, {7.0, 6.1, 8.4, 7.7, 5.9}};
  const double lev = std::fabs(stats::levene(groups).statistic - oracle::levene_direct(groups));
  ok = ok && lev <= 1e-9;

  // Reference values from a published Shapiro-Wilk implementation (scipy.stats.shapiro).
  struct Ref {
    std::vector<double> x;
    double p;
  };
  const std::vector<Ref> refs = {
      {{-1.335177736118937, -0.9084578685373851, -0.6045853465832371, -0.3487556955170447, -0.11418529432142838,
        0.11418529432142838, 0.3487556955170447, 0.6045853465832371, 0.9084578685373851, 1.335177736118937},
       0.9988865901771233},
      {{0, 0, 0, 0, 0, 100, 100, 100, 100, 100}, 0.0002539627375607894},
      {{2.1, 3.4, 1.9, 5.6, 4.4, 3.3, 2.8, 3.9, 4.1, 3.0, 6.2, 2.2}, 0.4698250253907422},
  };
  double worst_sw = 0.0;
  for (const auto& r : refs) worst_sw = std::max(worst_sw, std::fabs(stats::shapiro_wilk(r.x).p_value - r.p));
  ok = ok && worst_sw <= 1e-3;
  report(6, ok,
         f("anova vs pooled t max |dp| %.1e (<= 1e-9); f_cdf(1,d,d) max |d| %.1e (<= 1e-10); levene vs direct %.1e "
           "(<= 1e-9); shapiro p max |d| %.1e (<= 1e-3)",
           worst_t, worst_f, lev, worst_sw));
}

// ---------------------------------------------------------------- 7-10

struct Api {
  static void check(velinv_status s, const char* what) {
    if (s != VELINV_OK) throw std::runtime_error(std::string(what) + ": " + velinv_last_error());
  }
  static json take(velinv_text* t) {
    const json j = json::parse(velinv_text_get(t));
    velinv_text_destroy(t);
    return j;
  }
};

struct ConfigHandle {
  velinv_config* c = nullptr;
  ~ConfigHandle() { velinv_config_destroy(c); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void collect_p_values(const json& j, std::vector<double>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      if (k == "p_value" && v.is_number()) out.push_back(v.get<double>());
      collect_p_values(v, out);
    }
  } else if (j.is_array()) {
    for (const auto& v : j) collect_p_values(v, out);
  }
}

void desk_criteria(const fs::path& work) {
  ConfigHandle cfg;
  Api::check(velinv_config_create("desk", &cfg.c), "config");
  Api::check(velinv_config_set(cfg.c, "paths.data", (work / "data").string().c_str()), "config");
  Api::check(velinv_config_set(cfg.c, "paths.work", (work / "run").string().c_str()), "config");
  Api::check(velinv_config_validate(cfg.c), "config");
  velinv_text* out = nullptr;

  guarded(7, [&] {
    // Raw channels only: at this size the spectra of the spike-dominated
    // gathers rescale to near-constant planes and slow learning down.
    ConfigHandle single;
    Api::check(velinv_config_create("desk", &single.c), "config");
    Api::check(velinv_config_set(single.c, "paths.data", (work / "data").string().c_str()), "config");
    Api::check(velinv_config_set(single.c, "paths.work", (work / "run").string().c_str()), "config");
    Api::check(velinv_config_set(single.c, "features.fourier", "false"), "config");
    Api::check(velinv_config_validate(single.c), "config");
    const auto t0 = std::chrono::steady_clock::now();
    Api::check(velinv_gen(single.c, &out), "gen");
    const json gen = Api::take(out);
    const auto trained = work / "run" / "acceptance_trained.wts";
    const auto untrained = work / "run" / "acceptance_untrained.wts";
    Api::check(velinv_train(single.c, trained.string().c_str(), 0, &out), "train");
    (void)Api::take(out);
    Api::check(velinv_train(single.c, untrained.string().c_str(), 1, &out), "train --untrained");
    (void)Api::take(out);
    Api::check(velinv_eval(single.c, trained.string().c_str(), "test", nullptr, &out), "eval");
    const json ev_t = Api::take(out);
    Api::check(velinv_eval(single.c, untrained.string().c_str(), "test", nullptr, &out), "eval");
    const json ev_u = Api::take(out);
    const double secs = seconds_since(t0);
    const double s_t = ev_t.at("mean_ssim"), s_u = ev_u.at("mean_ssim");
    const double s_b = ev_t.at("baselines").at("train_mean").at("mean_ssim");
    report(7, s_t > s_u && s_t > s_b && secs <= 45 * 60.0,
           f("desk, raw channels, %d samples (%d test): trained SSIM %.4f > untrained %.4f and > train-mean baseline %.4f; "
             "gen+train+eval %.1f min on %u hardware thread(s) (<= 45)",
             gen.at("samples").get<int>(), ev_t.at("n").get<int>(), s_t, s_u, s_b, secs / 60.0,
             std::thread::hardware_concurrency()));
  });

  const fs::path run = work / "run";
  const fs::path rep = run / "report";
  json summary;
  bool ablated = false;
  guarded(8, [&] {
    const auto t0 = std::chrono::steady_clock::now();
    Api::check(velinv_ablate(cfg.c, &out), "ablate");
    (void)Api::take(out);
    ablated = true;
    summary = json::parse(slurp(rep / "summary.json"));
    const auto& ens = summary.at("ensembles");
    int violations = 0;
    std::size_t min_members = 1000;
    double worst = -1e300;
    for (const auto& e : ens) {
      const double em = e.at("ensemble_mse"), mm = e.at("mean_member_mse");
      violations += em > mm;
      worst = std::max(worst, em - mm);
      min_members = std::min(min_members, e.at("members").size());
    }
    report(8, violations == 0 && !ens.empty() && min_members >= 3,
           f("%zu ensembles (>= %zu members each): ensemble MSE <= mean member MSE in all, "
             "max(ens - member) %.3e; ablation %.1f min",
             ens.size(), min_members, worst, seconds_since(t0) / 60.0));
  });

  guarded(9, [&] {
    if (!ablated) throw std::runtime_error("ablation did not complete");
    const std::vector<std::string> files = {"table1.csv",   "shapiro.csv",   "levene.csv",
                                            "anova_fourier.csv", "anova_reg.csv", "ensembles.csv",
                                            "summary.json", "hist_shots1.png", "hist_shots3.png"};
    std::vector<std::string> missing;
    for (const auto& name : files) {
      if (!fs::exists(rep / name)) missing.push_back(name);
    }
    const std::string t1 = slurp(rep / "table1.csv");
    const long rows = std::count(t1.begin(), t1.end(), '\n') - 1;
    std::vector<double> ps;
    collect_p_values(summary, ps);
    const bool ps_ok =
        !ps.empty() && std::all_of(ps.begin(), ps.end(), [](double p) { return p >= 0.0 && p <= 1.0; });

    // Reproduction: drop the first instance of every population and rerun.
    std::map<fs::path, std::string> before;
    for (const auto& name : files) before[rep / name] = slurp(rep / name);
    int retrained = 0;
    for (const auto& pop : fs::directory_iterator(run / "populations")) {
      const fs::path ck = pop.path() / "inst0.wts";
      before[ck] = slurp(ck);
      for (const char* stale : {"inst0.wts", "inst0.json", "inst0_curves.csv", "population.json"}) {
        fs::remove(pop.path() / stale);
      }
      ++retrained;
    }
    velinv_text* again = nullptr;
    Api::check(velinv_ablate(cfg.c, &again), "ablate (rerun)");
    (void)Api::take(again);
    std::vector<std::string> differ;
    for (const auto& [path, bytes] : before) {
      if (slurp(path) != bytes) differ.push_back(fs::relative(path, run).string());
    }
    std::string diff_list;
    for (const auto& d : differ) diff_list += " " + d;
    report(9, missing.empty() && rows == 8 && ps_ok && differ.empty(),
           f("%zu/%zu report files, %ld population rows (== 8), %zu p-values all in [0,1]: %s; "
             "retrained %d instances: %s%s",
             files.size() - missing.size(), files.size(), rows, ps.size(), ps_ok ? "yes" : "no", retrained,
             differ.empty() ? "all checkpoints and report files bit-identical" : "differences in",
             diff_list.c_str()));
  });

  guarded(10, [&] {
    if (summary.is_null()) throw std::runtime_error("no ablation summary");
    std::string detail;
    int holds = 0, total = 0;
    for (const auto& row : summary.at("anova_fourier")) {
      const double off = row.at("mean_off"), on = row.at("mean_on");
      ++total;
      holds += on >= off;
      detail += f(" s%d/reg %s: %.4f vs %.4f", row.at("shots").get<int>(),
                  row.at("regularization").get<bool>() ? "on" : "off", on, off);
      detail += row.contains("test") ? f(" (p=%.3g);", row.at("test").at("p_value").get<double>())
                                     : std::string(" (skipped);");
    }
    report(10, true, f("fourier >= no-fourier in %d/%d comparisons (non-gating):", holds, total) + detail, false);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"velinv acceptance runner"};
  bool fast = false, desk = false;
  std::string work = "acceptance_work";
  app.add_flag("--fast", fast, "Criteria 1-6");
  app.add_flag("--desk", desk, "Criteria 7-10 (desk preset, long)");
  app.add_option("--work", work, "Working directory for the desk run (resumable)");
  CLI11_PARSE(app, argc, argv);
  if (!fast && !desk) fast = desk = true;

  if (fast) {
    guarded(1, criterion1);
    guarded(2, criterion2);
    guarded(3, criterion3);
    guarded(4, criterion4);
    guarded(5, criterion5);
    guarded(6, criterion6);
  }
  if (desk) {
    fs::create_directories(work);
    desk_criteria(work);
  }
  std::printf("%s: %d gating failure(s)\n", g_failures == 0 ? "ACCEPTED" : "REJECTED", g_failures);
  return g_failures == 0 ? 0 : 1;
}
