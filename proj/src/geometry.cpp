#include "zerostat/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "zerostat/jet.hpp"

namespace zerostat {

ChartPoint second_chart(const ChartPoint &x) {
  if (x.at_infinity) return ChartPoint::finite(0.0);
  if (x.z == cplx(0.0)) return ChartPoint::infinity();
  return ChartPoint::finite(1.0 / x.z);
}

namespace {

double reciprocal(double v) { return 1.0 / v; }

// Sphere point from a chart coordinate; chart 1 is w = 1/z.
template <class T> void chart_sphere_point(const T &x, const T &y, int chart, T n[3]) {
  const T rho = x * x + y * y;
  const T inv = reciprocal(T(1.0) + rho);
  n[0] = (2.0 * x) * inv;
  n[1] = (chart == 0 ? 2.0 : -2.0) * y * inv;
  n[2] = chart == 0 ? (1.0 - rho) * inv : (rho - 1.0) * inv;
}

} // namespace

Vec3 sphere_point(const ChartPoint &x) {
  if (x.at_infinity) return {0.0, 0.0, -1.0};
  const double a = std::norm(x.z);
  if (a <= 1.0) {
    double n[3];
    chart_sphere_point(x.z.real(), x.z.imag(), 0, n);
    return {n[0], n[1], n[2]};
  }
  const cplx w = 1.0 / x.z;
  double n[3];
  chart_sphere_point(w.real(), w.imag(), 1, n);
  return {n[0], n[1], n[2]};
}

double volume_density(const ChartPoint &x) {
  if (x.at_infinity)
    throw std::invalid_argument("volume_density: point at infinity needs the second chart");
  const double s = 1.0 + std::norm(x.z);
  return 1.0 / (kPi * s * s);
}

double geodesic_angle(const ChartPoint &x, const ChartPoint &y) {
  const Vec3 a = sphere_point(x), b = sphere_point(y);
  const Vec3 cr = {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
                   a[0] * b[1] - a[1] * b[0]};
  const double s = std::sqrt(cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2]);
  const double c = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  return std::atan2(s, c);
}

ChartPoint offset_point(const ChartPoint &x, double theta, double alpha) {
  if (theta >= kPi) {
    // Antipode of x.
    if (x.at_infinity) return ChartPoint::finite(0.0);
    if (x.z == cplx(0.0)) return ChartPoint::infinity();
    return ChartPoint::finite(-1.0 / std::conj(x.z));
  }
  const cplx z0 = std::polar(std::tan(0.5 * theta), alpha);
  if (x.at_infinity) {
    if (z0 == cplx(0.0)) return ChartPoint::infinity();
    return ChartPoint::finite(1.0 / z0);
  }
  const cplx den = 1.0 - std::conj(x.z) * z0;
  if (den == cplx(0.0)) return ChartPoint::infinity();
  return ChartPoint::finite((z0 + x.z) / den);
}

// ---------------------------------------------------------------- perturbations

std::vector<std::string> perturbation_shapes() { return {"none", "const", "zonal", "default"}; }

HarmonicPolynomial PerturbationSpec::bump() const {
  HarmonicPolynomial g;
  if (shape == "none") return g;
  if (shape == "const") {
    g.constant = 1.0;
    return g;
  }
  if (shape == "zonal") {
    g.linear = {0.0, 0.0, 1.0};
    return g;
  }
  if (shape == "default") {
    g = zonal_p2(0.05);
    g.linear = {0.1, 0.0, 0.25};
    return g;
  }
  throw std::invalid_argument("unknown perturbation shape '" + shape + "'");
}

bool PerturbationSpec::trivial() const { return shape == "none" || amplitude_c == 0.0; }

PerturbationSpec default_perturbation() { return {0.5, 0.5, "default"}; }

MetricSequence::MetricSequence(PerturbationSpec spec) : spec_(std::move(spec)) {
  if (!(spec_.amplitude_c >= 0.0))
    throw std::invalid_argument("perturbation amplitude must be >= 0");
  if (!(spec_.exponent_beta >= 0.0 && spec_.exponent_beta <= 1.0))
    throw std::invalid_argument("perturbation exponent beta must lie in [0, 1]");
  bump_ = spec_.bump();
  bump_.validate();
}

double MetricSequence::perturbation_scale(int p) const {
  if (spec_.trivial()) return 0.0;
  return spec_.amplitude_c * std::pow(static_cast<double>(p), spec_.exponent_beta);
}

double MetricSequence::perturbation_value(int p, const ChartPoint &x) const {
  const double s = perturbation_scale(p);
  if (s == 0.0) return 0.0;
  return s * bump_(sphere_point(x));
}

double MetricSequence::weight(int p, const ChartPoint &x) const {
  if (x.at_infinity) throw std::invalid_argument("weight: point at infinity");
  return 0.5 * p * std::log1p(std::norm(x.z)) + perturbation_value(p, x);
}

double MetricSequence::chart_weight(int p, cplx coordinate, int chart) const {
  double n[3];
  chart_sphere_point(coordinate.real(), coordinate.imag(), chart, n);
  const double s = perturbation_scale(p);
  return 0.5 * p * std::log1p(std::norm(coordinate)) +
         (s == 0.0 ? 0.0 : s * bump_.eval(n[0], n[1], n[2]));
}

double MetricSequence::curvature_density(int p, const ChartPoint &x) const {
  const double s = perturbation_scale(p);
  return p + (s == 0.0 ? 0.0 : 2.0 * s * bump_.laplacian(sphere_point(x)));
}

namespace {

struct ChartJets {
  Jet3 fs; // log(1 + |zeta|^2)
  Jet3 g;  // bump in the same chart
};

ChartJets chart_jets(const HarmonicPolynomial &bump, cplx zeta, int chart) {
  const Jet3 x = Jet3::variable(zeta.real(), 0);
  const Jet3 y = Jet3::variable(zeta.imag(), 1);
  Jet3 n[3];
  chart_sphere_point(x, y, chart, n);
  ChartJets j;
  j.fs = log(Jet3(1.0) + x * x + y * y);
  j.g = bump.eval(n[0], n[1], n[2]);
  return j;
}

// (chart, coordinate) with |coordinate| <= 1.
std::pair<int, cplx> unit_chart(const ChartPoint &x) {
  if (x.at_infinity) return {1, cplx(0.0)};
  if (std::norm(x.z) <= 1.0) return {0, x.z};
  return {1, 1.0 / x.z};
}

} // namespace

double MetricSequence::h3_norm(int p, const QuadratureGrid &grid) const {
  const double fs_scale = 0.5 * p;
  const double s = perturbation_scale(p);
  double best = 0.0;
  for (const auto &node : grid.nodes) {
    const auto [chart, zeta] = unit_chart(node.point);
    const ChartJets j = chart_jets(bump_, zeta, chart);
    for (int order = 0; order <= 3; ++order)
      for (int a = 0; a <= order; ++a) {
        const int b = order - a;
        const double d = fs_scale * j.fs.derivative(a, b) + s * j.g.derivative(a, b);
        best = std::max(best, std::abs(d));
      }
  }
  return best;
}

const QuadratureGrid &diagnostic_grid() {
  static const QuadratureGrid grid = build_grid(kDiagnosticGridLevel);
  return grid;
}

double MetricSequence::h3_norm(int p) const { return h3_norm(p, diagnostic_grid()); }

double MetricSequence::eta(int p) const { return std::cbrt(h3_norm(p)) / std::sqrt(A(p)); }

DiophantineReport diophantine_report(std::span<const int> degrees, const MetricSequence &m,
                                     const QuadratureGrid &grid) {
  DiophantineReport report;
  for (int p : degrees) {
    if (p < 1) throw std::invalid_argument("diophantine_report: p must be >= 1");
    DiophantineRow row;
    row.p = p;
    row.min_curvature = std::numeric_limits<double>::infinity();
    row.band_ok = true;
    for (const auto &node : grid.nodes) {
      const double c1 = m.curvature_density(p, node.point);
      row.min_curvature = std::min(row.min_curvature, c1);
      const double ratio = c1 / m.A(p);
      row.sup_deviation = std::max(row.sup_deviation, std::abs(ratio - 1.0));
      if (ratio < 0.75 || ratio > 1.25) row.band_ok = false;
    }
    if (!(row.min_curvature > 0.0))
      throw std::runtime_error("non-positive curvature of h_p at p = " + std::to_string(p));
    row.h3_norm = m.h3_norm(p);
    row.eta = std::cbrt(row.h3_norm) / std::sqrt(m.A(p));
    report.rows.push_back(row);
  }

  std::vector<double> lx, ly;
  for (const auto &r : report.rows)
    if (r.sup_deviation > 1e-300) {
      lx.push_back(std::log(static_cast<double>(r.p)));
      ly.push_back(std::log(r.sup_deviation));
    }
  if (lx.size() >= 2) {
    const double n = static_cast<double>(lx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
    mx /= n, my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (sxx > 0) report.fitted_exponent = -sxy / sxx;
  }

  for (std::size_t i = report.rows.size(); i-- > 0;) {
    if (!report.rows[i].band_ok) break;
    report.p0 = report.rows[i].p;
  }

  report.eta_decreasing = true;
  const DiophantineRow *prev = nullptr;
  for (const auto &r : report.rows) {
    if (r.p <= 8) continue;
    if (prev && !(r.eta < prev->eta)) report.eta_decreasing = false;
    prev = &r;
  }
  return report;
}

WeightDecomposition decompose_weight(int p, const ChartPoint &x, const MetricSequence &m) {
  if (p < 1) throw std::invalid_argument("decompose_weight: p must be >= 1");
  WeightDecomposition d;
  d.center = x;
  const auto [chart, zeta] = unit_chart(x);
  d.chart = chart;
  d.center_coordinate = zeta;

  const double s = m.perturbation_scale(p);
  const ChartJets j = chart_jets(m.bump(), zeta, chart);
  auto deriv = [&](int a, int b) {
    return 0.5 * p * j.fs.derivative(a, b) + s * j.g.derivative(a, b);
  };
  const double phi0 = deriv(0, 0);
  const cplx phi_z = 0.5 * cplx(deriv(1, 0), -deriv(0, 1));
  const cplx phi_zz = 0.25 * cplx(deriv(2, 0) - deriv(0, 2), -2.0 * deriv(1, 1));
  const double phi_zzbar = 0.25 * (deriv(2, 0) + deriv(0, 2));

  const double one = 1.0 + std::norm(zeta);
  d.conformal_factor = 1.0 / (kPi * one * one);
  const double sqrt_h = std::sqrt(d.conformal_factor);
  d.t_coeffs = {cplx(phi0), 2.0 * phi_z / sqrt_h, phi_zz / d.conformal_factor};
  d.lambda = phi_zzbar / d.conformal_factor;
  d.polydisk_radius = 1.0 / std::sqrt(m.A(p));
  d.h3_norm = m.h3_norm(p);
  d.envelope_bound = std::sqrt(2.0) / 3.0 * std::pow(d.conformal_factor, -1.5);
  const double a = m.A(p);
  d.lambda_in_band = d.lambda >= 3.0 * kPi * a / 8.0 && d.lambda <= 5.0 * kPi * a / 8.0;

  constexpr int kAngles = 16;
  for (double frac : {0.25, 0.5, 0.75, 1.0}) {
    const double r = frac * d.polydisk_radius;
    for (int k = 0; k < kAngles; ++k) {
      const cplx xi = std::polar(r, 2.0 * kPi * k / kAngles);
      const cplx t = d.t_coeffs[0] + xi * (d.t_coeffs[1] + xi * d.t_coeffs[2]);
      const double exact = m.chart_weight(p, zeta + xi / sqrt_h, chart);
      const double rem = exact - t.real() - d.lambda * r * r;
      d.max_remainder = std::max(d.max_remainder, std::abs(rem));
      d.remainder_bound = std::max(d.remainder_bound, std::abs(rem) / (d.h3_norm * r * r * r));
    }
  }
  if (d.remainder_bound > 10.0 * d.envelope_bound)
    throw std::runtime_error("decompose_weight: remainder exceeds the cubic envelope at p = " +
                             std::to_string(p));
  return d;
}

ChartPoint kahler_point(const WeightDecomposition &d, cplx xi) {
  const cplx zeta = d.center_coordinate + xi / std::sqrt(d.conformal_factor);
  if (d.chart == 0) return ChartPoint::finite(zeta);
  if (zeta == cplx(0.0)) return ChartPoint::infinity();
  return ChartPoint::finite(1.0 / zeta);
}

} // namespace zerostat
