#include "doctest.h"

#include <cmath>

#include "zerostat/random.hpp"
#include "zerostat/stats.hpp"

using namespace zerostat;

namespace {

// Funk-Hecke eigenvalues of ((1 + x.y) / 2)^p on degree-l harmonics, l <= 2:
// integral over s in [0, 1] of s^p P_l(2s - 1).
double funk_hecke(int p, int l) {
  const double q = p;
  if (l == 0) return 1.0 / (q + 1);
  if (l == 1) return 2.0 / (q + 2) - 1.0 / (q + 1);
  return 6.0 / (q + 3) - 6.0 / (q + 2) + 1.0 / (q + 1);
}

double psi_norm2(const TestForm &t, const QuadratureGrid &g) {
  double s = 0.0;
  for (const auto &n : g.nodes) s += n.weight * std::pow(t.psi(n.point), 2);
  return s;
}

} // namespace

TEST_CASE("summary statistics") {
  const std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
  const auto s = summarize(v);
  CHECK(s.M == 4);
  CHECK(s.mean == doctest::Approx(2.5));
  CHECK(s.variance == doctest::Approx(1.25));
  CHECK(std::abs(s.skewness) < 1e-15);
  CHECK(s.excess_kurtosis == doctest::Approx(2.5625 / 1.5625 - 3.0));

  SampleStream rng(17);
  std::vector<double> g;
  for (int i = 0; i < 5000; ++i) g.push_back(3.0 + 2.0 * std::sqrt(2.0) * rng.complex_gaussian().real());
  const auto z = standardize(g);
  double m = 0.0, m2 = 0.0;
  for (double x : z) m += x, m2 += x * x;
  CHECK(std::abs(m / z.size()) < 1e-12);
  CHECK(std::abs(m2 / z.size() - 1.0) < 1e-12);
  const auto sg = summarize(g);
  CHECK(sg.ks_distance < 1.95 / std::sqrt(5000.0));
  CHECK(std::abs(sg.skewness) < 0.15);
  CHECK(std::abs(sg.excess_kurtosis) < 0.3);

  const std::vector<double> zero = {0.0};
  CHECK(ks_distance_normal(zero) == doctest::Approx(0.5));
}

TEST_CASE("condition (ii)") {
  const auto gx = build_grid(kSupGridLevel);
  for (int p : {2, 5, 8, 16, 33, 64}) {
    const auto basis = assemble(p, MetricSequence{});
    const double v = st_condition_ii(basis, gx, build_grid(default_st_level(p)));
    CHECK(std::abs(v - 2.0 / (p + 2)) <= 1e-8);
    // Rotational symmetry: a different set of centers gives the same value.
    CHECK(std::abs(st_condition_ii(basis, build_grid(3), build_grid(default_st_level(p))) - v) <= 1e-8);
  }
  const MetricSequence m(default_perturbation());
  double prev = 1.0;
  for (int p : {8, 32, 128}) {
    const auto basis = assemble(p, m);
    const double v = st_condition_ii(basis, gx, build_grid(default_st_level(p)), 4);
    CHECK(v > 0.0);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("condition (i)") {
  for (const char *name : {"height", "p2"}) {
    const auto t = test_form(name);
    const int l = std::string(name) == "height" ? 1 : 2;
    for (int p : {2, 10, 24}) {
      const auto basis = assemble(p, MetricSequence{});
      const auto g = build_grid(p + 8);
      const double expect = funk_hecke(p, l) * psi_norm2(t, g);
      CHECK(st_double_integral(basis, t, g) == doctest::Approx(expect).epsilon(1e-10));
      CHECK(st_double_integral_direct(basis, t, g) == doctest::Approx(expect).epsilon(1e-10));
    }
  }

  const MetricSequence m(default_perturbation());
  const auto t = test_form("default");
  for (int p : {8, 16, 32}) {
    const auto r = st_conditions(assemble(p, m), t);
    CHECK(std::abs(r.double_integral - r.oracle_double_integral) <= 1e-6 * r.oracle_double_integral);
    CHECK(r.ratio_nu1 > 0.1 * r.psi_norm2);
    CHECK(r.near_far_split == doctest::Approx(std::log(p) / std::sqrt(p)));
  }
  const auto big = st_conditions(assemble(64, m), t, 4);
  CHECK(big.oracle_double_integral < 0.0);
  CHECK(big.sup_integral > 0.0);
  CHECK(big.sup_integral <= 1.0);
  CHECK_THROWS(st_conditions(assemble(8, m), test_form("one")));
  CHECK_THROWS(st_double_integral_direct(assemble(40, m), t, build_grid(48)));
}

TEST_CASE("clt run") {
  const MetricSequence m(default_perturbation());
  const auto basis = assemble(16, m);
  const auto t = test_form("default");
  CHECK_THROWS(run_clt(basis, t, 50, 1));
  CHECK_THROWS(run_clt(basis, test_form("one"), 200, 1));

  const auto a = run_clt(basis, t, 400, 12, 1), b = run_clt(basis, t, 400, 12, 4);
  CHECK(a.summary.rejected_samples == 0);
  CHECK_FALSE(a.tainted);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].value == b.records[i].value);
    CHECK(a.records[i].zero_count == 16);
  }
  double s = 0.0, s2 = 0.0;
  for (double x : a.standardized) s += x, s2 += x * x;
  CHECK(std::abs(s / a.standardized.size()) < 1e-12);
  CHECK(std::abs(s2 / a.standardized.size() - 1.0) < 1e-12);

  const double se = std::sqrt(a.summary.variance / a.summary.M);
  const double e = expected_statistic(basis, t, build_grid(48)).total;
  CHECK(std::abs(a.summary.mean - e) < 4 * se);

  // Rejection accounting with an impossible residual threshold.
  RootOptions strict;
  strict.residual_threshold = 0.0;
  const auto bad = run_clt(basis, t, 100, 3, 2, strict);
  CHECK(bad.summary.rejected_samples > 1);
  CHECK(bad.tainted);
}

TEST_CASE("variance trend") {
  const MetricSequence m(default_perturbation());
  std::vector<BergmanBasis> bases;
  for (int p : {8, 32}) bases.push_back(assemble(p, m));
  const auto rows = variance_trend(bases, test_form("default"), 600, 5, 4);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].variance < rows[0].variance);
  for (const auto &r : rows) {
    CHECK(r.variance > 0.0);
    CHECK(std::abs(r.mean - r.expected_mean) < 4 * std::sqrt(r.variance / 600));
  }

  const auto t = test_form("default");
  const auto pert = run_clt(assemble(128, m), t, 300, 9, 4);
  const auto flat = run_clt(assemble(128, MetricSequence{}), t, 300, 9, 4);
  const double ratio = pert.summary.variance / flat.summary.variance;
  CHECK(ratio < 2.0);
  CHECK(ratio > 0.5);
}
