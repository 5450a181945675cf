// Acceptance run: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "zerostat/commands.hpp"
#include "zerostat/parallel.hpp"
#include "zerostat/random.hpp"
#include "zerostat/stats.hpp"

using namespace zerostat;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char *f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ChartPoint random_point(SampleStream &rng) {
  const double u = 2.0 * rng.uniform() - 1.0, phi = 2.0 * kPi * rng.uniform();
  if (u >= 1.0) return ChartPoint::infinity();
  return ChartPoint::finite(std::polar(std::sqrt((1.0 + u) / (1.0 - u)), phi));
}

int g_workers = 1;
fs::path g_out;

// 1. K_p = p + 1 for the unperturbed sequence.
Outcome unperturbed_kernel() {
  double worst = 0.0;
  SampleStream rng(101);
  for (int p : {2, 8, 32, 64}) {
    const auto basis = assemble(p, MetricSequence{});
    for (int i = 0; i < 100; ++i)
      worst = std::max(worst, std::abs(kernel_function(basis, random_point(rng)) / (p + 1) - 1.0));
  }
  return {worst <= 1e-9, fmt("max relative error %.3g over 400 points (tolerance 1e-9)", worst)};
}

// 2. First-order asymptotics.
Outcome first_order() {
  const std::vector<int> degrees = {16, 32, 64, 128, 256};
  std::vector<BergmanBasis> pert, flat;
  for (int p : degrees) {
    pert.push_back(assemble(p, MetricSequence(default_perturbation()), 0, g_workers));
    flat.push_back(assemble(p, MetricSequence{}, 0, g_workers));
  }
  const auto r = first_order_report(pert, diagnostic_grid(), g_workers);
  const auto u = first_order_report(flat, diagnostic_grid(), g_workers);
  bool in_band = true;
  std::ostringstream devs;
  for (const auto &row : r.rows) {
    const double band = r.fitted_d_prime * std::pow(row.eta, 2.0 / 3.0);
    in_band = in_band && row.max_ratio <= 1.0 + band && row.min_ratio >= 1.0 - band;
    devs << (devs.tellp() ? " " : "") << fmt("%.4g", row.max_deviation);
  }
  double closed = 0.0;
  for (const auto &row : u.rows) closed = std::max(closed, std::abs(row.max_deviation - 1.0 / row.p));
  const bool ok = in_band && r.strictly_decreasing && closed <= 1e-9;
  return {ok, fmt("D'=%.4g, deviations [%s], in band %d, strictly decreasing %d, unperturbed |dev - 1/p| %.3g",
                  r.fitted_d_prime, devs.str().c_str(), in_band, r.strictly_decreasing, closed)};
}

// 3. Integral of K_p equals the dimension.
Outcome dimensional_density() {
  double worst = 0.0;
  int cases = 0;
  for (const auto &shape : perturbation_shapes()) {
    PerturbationSpec spec = default_perturbation();
    spec.shape = shape;
    if (shape == "none") spec = PerturbationSpec{};
    for (int p : {16, 32, 64, 128, 256}) {
      const auto basis = assemble(p, MetricSequence(spec), 0, g_workers);
      worst = std::max(worst, density_check(basis, build_grid(p + 16), g_workers));
      ++cases;
    }
  }
  return {worst <= 1e-8, fmt("max |integral K_p - (p+1)| = %.3g over %d (p, perturbation) cases (tolerance 1e-8)",
                             worst, cases)};
}

// 4. Off-diagonal decay.
Outcome offdiagonal() {
  OffDiagonalOptions opt;
  opt.workers = g_workers;
  bool ok = true;
  std::ostringstream s;
  for (int p : {64, 128, 256}) {
    const auto r = offdiagonal_fit(assemble(p, MetricSequence(default_perturbation()), 0, g_workers),
                                   default_fit_centers(), opt);
    const auto f = offdiagonal_fit(assemble(p, MetricSequence{}, 0, g_workers), default_fit_centers(), opt);
    ok = ok && r.b_fit > 0.0 && r.violations == 0 && f.b_fit > 0.0 && f.violations == 0 &&
         f.cos_bound_violations == 0;
    s << fmt("p=%d B=%.4g viol=%d cos-viol=%d; ", p, r.b_fit, r.violations, f.cos_bound_violations);
  }
  return {ok, s.str()};
}

// 5. Near-diagonal Gaussian limit.
Outcome near_diagonal() {
  const auto uv = default_uv_grid(2.0);
  const ChartPoint x = ChartPoint::finite({0.3, 0.1});
  std::vector<double> dev;
  for (int p : {64, 128, 256})
    dev.push_back(near_diagonal_profile(assemble(p, MetricSequence(default_perturbation()), 0, g_workers), x, uv)
                      .max_deviation);
  const bool decreasing = dev[1] < dev[0] && dev[2] < dev[1];
  return {decreasing && dev[2] <= 0.05,
          fmt("max |R_p - 1| = %.4g, %.4g, %.4g for p = 64, 128, 256; decreasing %d; band 0.05 at p = 256",
              dev[0], dev[1], dev[2], decreasing)};
}

// 6. Covariance identity against the Gram-solve kernel.
Outcome covariance_identity() {
  double worst = 0.0;
  SampleStream rng(606);
  for (int p : {16, 64, 128, 256}) {
    const auto basis = assemble(p, MetricSequence(default_perturbation()), 0, g_workers);
    std::vector<std::pair<ChartPoint, ChartPoint>> pairs;
    for (int i = 0; i < 1000; ++i) pairs.push_back({random_point(rng), random_point(rng)});
    try {
      for (const auto &c : covariance(basis, pairs)) worst = std::max(worst, c.mismatch);
    } catch (const std::runtime_error &e) {
      return {false, e.what()};
    }
  }
  return {worst <= 1e-10, fmt("max ||C_p| - K^_p| = %.3g over 1000 pairs per p (tolerance 1e-10)", worst)};
}

// 7. Sodin-Tsirelson conditions.
Outcome sodin_tsirelson() {
  const auto gx = build_grid(kSupGridLevel);
  double closed = 0.0;
  for (int p = 1; p <= 64; ++p) {
    const auto basis = assemble(p, MetricSequence{}, 0, g_workers);
    closed = std::max(closed, std::abs(st_condition_ii(basis, gx, build_grid(default_st_level(p)), g_workers) -
                                       2.0 / (p + 2)));
  }
  std::vector<double> pert;
  for (int p : {8, 16, 32, 64, 128}) {
    const auto basis = assemble(p, MetricSequence(default_perturbation()), 0, g_workers);
    pert.push_back(st_condition_ii(basis, gx, build_grid(default_st_level(p)), g_workers));
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < pert.size(); ++i) decreasing = decreasing && pert[i] < pert[i - 1];
  const auto phi = test_form("default");
  double worst_ratio = 1e300;
  for (int p : {16, 64, 256}) {
    const auto r = st_conditions(assemble(p, MetricSequence(default_perturbation()), 0, g_workers), phi, g_workers);
    worst_ratio = std::min(worst_ratio, r.ratio_nu1 / r.psi_norm2);
  }
  const bool ok = closed <= 1e-8 && decreasing && pert.back() < 0.02 && worst_ratio >= 0.1;
  return {ok, fmt("unperturbed |(ii) - 2/(p+2)| = %.3g for p <= 64; perturbed (ii) at p = 128: %.4g, decreasing %d; "
                  "min (i) quotient / int psi^2 = %.4g",
                  closed, pert.back(), decreasing, worst_ratio)};
}

// 8. Poincare-Lelong against the root sum.
Outcome poincare_lelong() {
  const int p = 64;
  const auto basis = assemble(p, MetricSequence(default_perturbation()), 0, g_workers);
  const auto phi = test_form("default");
  const PoincareLelong pl(basis, phi, build_grid(default_pl_level(p)));
  std::vector<double> rel(50, 0.0);
  std::vector<int> count_ok(50, 1);
  parallel_for(50, g_workers, [&](std::size_t i) {
    const auto s = sample(basis, 808, i);
    const auto zs = find_roots(s);
    if (!zs.degenerate && (static_cast<int>(zs.roots.size()) != p || !zs.usable)) count_ok[i] = 0;
    if (!zs.usable) return;
    const double root_sum = linear_statistic(zs, phi);
    rel[i] = std::abs(pl(s) - root_sum) / (1.0 + std::abs(root_sum));
  });
  const double worst = *std::max_element(rel.begin(), rel.end());
  const bool counts = std::all_of(count_ok.begin(), count_ok.end(), [](int v) { return v == 1; });
  return {worst <= 1e-4 && counts,
          fmt("max relative discrepancy %.3g on 50 sections at p = 64 (tolerance 1e-4); zero counts exact %d", worst,
              counts)};
}

// 9. Central limit theorem.
Outcome clt() {
  const auto phi = test_form("default");
  const MetricSequence m(default_perturbation());
  const auto b128 = assemble(128, m, 0, g_workers);
  const auto run = run_clt(b128, phi, 2000, 909, g_workers);
  const auto &s = run.summary;
  const bool bands = std::abs(s.skewness) <= 0.15 && std::abs(s.excess_kurtosis) <= 0.3 && s.ks_distance <= 0.05;

  std::vector<double> mean_ks;
  for (int p : {32, 64, 128}) {
    const auto basis = p == 128 ? b128 : assemble(p, m, 0, g_workers);
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) total += run_clt(basis, phi, 2000, 9000 + seed, g_workers).summary.ks_distance;
    mean_ks.push_back(total / 5.0);
  }
  const bool trend = mean_ks[1] <= mean_ks[0] && mean_ks[2] <= mean_ks[1];
  return {bands && trend && !run.tainted,
          fmt("p = 128, M = 2000: skewness %.4g, excess kurtosis %.4g, KS %.4g, rejected %d; mean KS over 5 seeds "
              "%.4g, %.4g, %.4g for p = 32, 64, 128",
              s.skewness, s.excess_kurtosis, s.ks_distance, s.rejected_samples, mean_ks[0], mean_ks[1], mean_ks[2])};
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 10. Byte-identical CSV across reruns and worker counts.
Outcome determinism() {
  RunConfig c;
  c.degrees = {16, 32};
  c.samples = 200;
  c.master_seed = 1010;
  int compared = 0;
  for (const std::string cmd : {"kernel", "decay", "clt", "st-check", "pl-check"}) {
    RunConfig cfg = c;
    if (cmd == "pl-check") cfg.samples = 20;
    const auto a = g_out / "determinism" / "run1", b = g_out / "determinism" / "run2",
               d = g_out / "determinism" / "workers4";
    const auto ra = run_command(cmd, cfg, 1, a);
    run_command(cmd, cfg, 1, b);
    run_command(cmd, cfg, 4, d);
    for (const auto &name : ra.outputs) {
      if (name.ends_with("_record.json")) continue;
      const auto ref = slurp(a / name);
      if (ref.empty() || ref != slurp(b / name) || ref != slurp(d / name))
        return {false, "outputs differ for " + cmd + ": " + name};
      ++compared;
    }
  }
  return {true, fmt("%d output files byte-identical across two runs and worker counts 1 and 4", compared)};
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"acceptance criteria"};
  std::string out = "acceptance_out";
  std::vector<int> only, expect_fail;
  g_workers = static_cast<int>(std::clamp(std::thread::hardware_concurrency(), 1u, 8u));
  app.add_option("--out", out, "scratch directory");
  app.add_option("--workers", g_workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--only", only, "run only these criteria");
  app.add_option("--expect-fail", expect_fail, "criteria known to be unattainable; their FAIL does not set the exit status");
  CLI11_PARSE(app, argc, argv);
  g_out = out;
  fs::create_directories(g_out);

  const std::vector<std::pair<const char *, std::function<Outcome()>>> criteria = {
      {"unperturbed kernel oracle", unperturbed_kernel},
      {"first-order asymptotics", first_order},
      {"dimensional density", dimensional_density},
      {"off-diagonal decay", offdiagonal},
      {"near-diagonal Gaussian limit", near_diagonal},
      {"covariance identity", covariance_identity},
      {"Sodin-Tsirelson conditions", sodin_tsirelson},
      {"Poincare-Lelong cross-oracle", poincare_lelong},
      {"central limit theorem", clt},
      {"determinism", determinism},
  };
  const std::set<int> selected(only.begin(), only.end()), expected(expect_fail.begin(), expect_fail.end());
  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool known = expected.count(id) > 0;
    if (!o.passed && !known) ++unexpected;
    std::cout << (o.passed ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first
              << ")" << (!o.passed && known ? " [expected failure]" : "") << ": " << o.detail
              << fmt(" [%.1fs]", sec) << std::endl;
  }
  return unexpected == 0 ? 0 : 1;
}
