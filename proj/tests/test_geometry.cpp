#include "doctest.h"

#include <cmath>

#include "zerostat/geometry.hpp"
#include "zerostat/jet.hpp"

using namespace zerostat;

namespace {

double beta_value(int j, int p) {
  return std::exp(std::lgamma(j + 1.0) + std::lgamma(p - j + 1.0) - std::lgamma(p + 2.0));
}

// Weight in the first chart from its definition, for finite differences.
double phi_at(const MetricSequence &m, int p, double x, double y) {
  return m.weight(p, ChartPoint::finite({x, y}));
}

} // namespace

TEST_CASE("volume density") {
  CHECK(volume_density(ChartPoint::finite(0.0)) == doctest::Approx(1.0 / kPi).epsilon(1e-15));
  CHECK_THROWS(volume_density(ChartPoint::infinity()));

  // Radial integral of 2 pi r rho(r) on [0, inf) via r = tan(t), t in [0, pi/2).
  std::vector<double> t, w;
  gauss_legendre(64, 0.0, kPi / 2, t, w);
  double total = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = std::tan(t[i]), dr = 1.0 / (std::cos(t[i]) * std::cos(t[i]));
    total += w[i] * 2.0 * kPi * r * volume_density(ChartPoint::finite(r)) * dr;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-13));

  const cplx z(0.7, -1.9);
  const double jac = std::norm(1.0 / (z * z));
  CHECK(volume_density(ChartPoint::finite(1.0 / z)) * jac ==
        doctest::Approx(volume_density(ChartPoint::finite(z))).epsilon(1e-13));
}

TEST_CASE("geodesic angle") {
  const auto o = ChartPoint::finite(0.0);
  CHECK(geodesic_angle(o, o) == 0.0);
  CHECK(geodesic_angle(o, ChartPoint::infinity()) == doctest::Approx(kPi).epsilon(1e-15));
  CHECK(geodesic_angle(o, ChartPoint::finite(1.0)) == doctest::Approx(kPi / 2).epsilon(1e-15));

  const auto a = ChartPoint::finite({0.3, 0.2}), b = ChartPoint::finite({-2.0, 1.0}),
             c = ChartPoint::finite({0.1, -0.6});
  CHECK(geodesic_angle(a, b) == doctest::Approx(geodesic_angle(b, a)));
  CHECK(geodesic_angle(a, c) <= geodesic_angle(a, b) + geodesic_angle(b, c) + 1e-15);

  for (double theta : {0.1, 1.0, 2.5})
    for (double alpha : {0.0, 2.0})
      CHECK(geodesic_angle(a, offset_point(a, theta, alpha)) == doctest::Approx(theta).epsilon(1e-12));
  CHECK(geodesic_angle(ChartPoint::infinity(), offset_point(ChartPoint::infinity(), 0.4, 1.0)) ==
        doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("second chart and sphere point") {
  const auto x = ChartPoint::finite({1.5, -0.5});
  const auto w = second_chart(x);
  CHECK(std::abs(w.z - 1.0 / x.z) < 1e-15);
  CHECK(second_chart(ChartPoint::finite(0.0)).at_infinity);
  const Vec3 n = sphere_point(x);
  CHECK(n[0] * n[0] + n[1] * n[1] + n[2] * n[2] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(sphere_point(ChartPoint::infinity())[2] == -1.0);
}

TEST_CASE("grid normalization and exactness") {
  CHECK_THROWS(build_grid(0));
  CHECK_THROWS(build_grid(100000));
  const auto g = build_grid(12);
  CHECK(g.total_weight() == doctest::Approx(1.0).epsilon(1e-12));
  double cos_int = 0.0;
  for (const auto &n : g.nodes) cos_int += n.weight * sphere_point(n.point)[2];
  CHECK(std::abs(cos_int) < 1e-12);

  for (int p : {2, 7, 10}) {
    const auto grid = build_grid(p + 2);
    for (int j = 0; j <= p; ++j)
      for (int k = 0; k <= p; ++k) {
        cplx acc = 0.0;
        for (const auto &n : grid.nodes) {
          const cplx z = n.point.z;
          acc += n.weight * std::pow(z, j) * std::pow(std::conj(z), k) /
                 std::pow(1.0 + std::norm(z), p);
        }
        const double expect = j == k ? beta_value(j, p) : 0.0;
        CHECK(std::abs(acc - expect) <= 1e-12 * beta_value(p / 2, p));
      }
  }
}

TEST_CASE("weights") {
  const MetricSequence fs;
  CHECK(fs.weight(5, ChartPoint::finite(0.0)) == 0.0);
  CHECK(fs.weight(2, ChartPoint::finite(1.0)) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  const MetricSequence c(PerturbationSpec{0.5, 0.0, "const"});
  const auto x = ChartPoint::finite({0.4, 1.1});
  CHECK(c.weight(9, x) == doctest::Approx(fs.weight(9, x) + 0.5).epsilon(1e-15));

  CHECK_THROWS(MetricSequence(PerturbationSpec{0.5, 1.2, "default"}));
  CHECK_THROWS(MetricSequence(PerturbationSpec{-1.0, 0.5, "default"}));
  CHECK_THROWS(MetricSequence(PerturbationSpec{0.5, 0.5, "bogus"}));

  // Chart transport: phi(w) = phi(z) - p log|z| for the frame w^p.
  const MetricSequence m(default_perturbation());
  const cplx z(1.7, 0.6);
  CHECK(m.chart_weight(11, 1.0 / z, 1) ==
        doctest::Approx(m.weight(11, ChartPoint::finite(z)) - 11 * std::log(std::abs(z))).epsilon(1e-12));
}

TEST_CASE("curvature density against finite differences") {
  const MetricSequence m(default_perturbation());
  const int p = 20;
  for (cplx z : {cplx(0.2, 0.1), cplx(-0.7, 0.5), cplx(1.3, -0.4)}) {
    const double h = 1e-4, x = z.real(), y = z.imag();
    const double lap = (phi_at(m, p, x + h, y) + phi_at(m, p, x - h, y) + phi_at(m, p, x, y + h) +
                        phi_at(m, p, x, y - h) - 4.0 * phi_at(m, p, x, y)) /
                       (h * h);
    const double density = lap * std::pow(1.0 + std::norm(z), 2) / 2.0;
    CHECK(m.curvature_density(p, ChartPoint::finite(z)) == doctest::Approx(density).epsilon(1e-6));
  }
}

TEST_CASE("jets match finite differences") {
  const double x0 = 0.3, y0 = -0.2;
  auto f = [](auto x, auto y) { return log(1.0 + x * x + y * y) * (x * y) + x * x * x; };
  auto fd = [&](double x, double y) { return std::log(1.0 + x * x + y * y) * (x * y) + x * x * x; };
  const Jet3 j = f(Jet3::variable(x0, 0), Jet3::variable(y0, 1));
  const double h = 1e-3;
  CHECK(j.value() == doctest::Approx(fd(x0, y0)).epsilon(1e-15));
  CHECK(j.derivative(1, 0) == doctest::Approx((fd(x0 + h, y0) - fd(x0 - h, y0)) / (2 * h)).epsilon(1e-6));
  CHECK(j.derivative(1, 1) ==
        doctest::Approx((fd(x0 + h, y0 + h) - fd(x0 + h, y0 - h) - fd(x0 - h, y0 + h) +
                         fd(x0 - h, y0 - h)) / (4 * h * h)).epsilon(1e-6));
  CHECK(j.derivative(3, 0) ==
        doctest::Approx((fd(x0 + 2 * h, y0) - 2 * fd(x0 + h, y0) + 2 * fd(x0 - h, y0) -
                         fd(x0 - 2 * h, y0)) / (2 * h * h * h)).epsilon(1e-5));
  const Jet3 r = reciprocal(Jet3::variable(2.0, 0));
  CHECK(r.derivative(2, 0) == doctest::Approx(2.0 / 8.0));
  CHECK(r.derivative(3, 0) == doctest::Approx(-6.0 / 16.0));
}

TEST_CASE("diophantine report") {
  const std::vector<int> degrees = {8, 16, 32, 64, 128, 256};
  const auto &grid = diagnostic_grid();

  const auto fs = diophantine_report(degrees, MetricSequence{}, grid);
  for (const auto &r : fs.rows) {
    CHECK(r.sup_deviation == 0.0);
    CHECK(r.band_ok);
  }
  CHECK_FALSE(fs.fitted_exponent.has_value());

  const auto rep = diophantine_report(degrees, MetricSequence(default_perturbation()), grid);
  REQUIRE(rep.fitted_exponent.has_value());
  CHECK(*rep.fitted_exponent == doctest::Approx(0.5).epsilon(1e-9));
  REQUIRE(rep.p0.has_value());
  for (const auto &r : rep.rows)
    if (r.p >= *rep.p0) CHECK(r.band_ok);
  CHECK(rep.eta_decreasing);

  const MetricSequence steep(PerturbationSpec{40.0, 1.0, "zonal"});
  const std::vector<int> one = {4};
  CHECK_THROWS_AS(diophantine_report(one, steep, grid), std::runtime_error);
}

TEST_CASE("weight decomposition") {
  const int p = 64;
  const auto fs = decompose_weight(p, ChartPoint::finite(0.0), MetricSequence{});
  CHECK(fs.lambda == doctest::Approx(kPi * p / 2).epsilon(1e-12));
  for (const auto &t : fs.t_coeffs) CHECK(std::abs(t) < 1e-12);
  CHECK(fs.lambda_in_band);

  const MetricSequence c(PerturbationSpec{0.5, 0.0, "const"});
  const auto x = ChartPoint::finite({0.3, -0.8});
  const auto a = decompose_weight(p, x, MetricSequence{});
  const auto b = decompose_weight(p, x, c);
  CHECK(b.lambda == doctest::Approx(a.lambda).epsilon(1e-12));
  CHECK(std::abs(b.t_coeffs[0] - a.t_coeffs[0] - 0.5) < 1e-12);
  CHECK(std::abs(b.t_coeffs[1] - a.t_coeffs[1]) < 1e-12);
  CHECK(std::abs(b.t_coeffs[2] - a.t_coeffs[2]) < 1e-12);

  const MetricSequence m(default_perturbation());
  double prev = 1.0;
  for (int q : {16, 64, 256, 1024}) {
    for (auto pt : {ChartPoint::finite(0.0), ChartPoint::finite({0.9, 0.4}), ChartPoint::infinity()}) {
      const auto d = decompose_weight(q, pt, m);
      CHECK(d.lambda_in_band);
    }
    const auto d = decompose_weight(q, ChartPoint::finite({0.9, 0.4}), m);
    const double gap = std::abs(d.lambda / (kPi * q) - 0.5);
    CHECK(gap < prev);
    prev = gap;
  }

  // The Kahler point map moves by |xi| / sqrt(h) in the chart.
  const auto k = kahler_point(fs, 0.1);
  CHECK(std::abs(k.z - 0.1 * std::sqrt(kPi)) < 1e-14);
}
