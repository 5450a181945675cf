#include "zerostat/zeros.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "zerostat/parallel.hpp"
#include "zerostat/random.hpp"

namespace zerostat {

std::vector<std::string> test_form_names() { return {"one", "height", "p2", "default"}; }

TestForm test_form(const std::string &name) {
  TestForm t;
  t.name = name;
  if (name == "one") {
    t.phi.constant = 1.0;
  } else if (name == "height") {
    t.phi.linear = {0.0, 0.0, 1.0};
  } else if (name == "p2") {
    t.phi = zonal_p2(1.0);
  } else if (name == "default") {
    t.phi = zonal_p2(0.5);
    t.phi.linear = {0.3, 0.0, 0.5};
  } else {
    throw std::invalid_argument("unknown test form '" + name + "'");
  }
  return t;
}

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Eval {
  cplx f;       // polynomial value in the chart of evaluation
  cplx ratio;   // f / f' in the z coordinate
  double scale; // sum |d_k| |zeta|^k in the same chart
};

// Value, Newton ratio and magnitude scale of sum d_k z^k. For |z| > 1 the
// reversed polynomial in w = 1/z is used.
Eval evaluate_poly(const cplx *d, int n, cplx z) {
  Eval e;
  if (std::norm(z) <= 1.0) {
    cplx f = d[n], fp = 0.0;
    double s = std::abs(d[n]);
    const double az = std::abs(z);
    for (int k = n - 1; k >= 0; --k) {
      fp = fp * z + f;
      f = f * z + d[k];
      s = s * az + std::abs(d[k]);
    }
    e.f = f;
    e.ratio = f / fp;
    e.scale = s;
    return e;
  }
  const cplx w = 1.0 / z;
  const double aw = std::abs(w);
  cplx g = d[0], gp = 0.0;
  double s = std::abs(d[0]);
  for (int k = 1; k <= n; ++k) {
    gp = gp * w + g;
    g = g * w + d[k];
    s = s * aw + std::abs(d[k]);
  }
  e.f = g;
  e.ratio = z * g / (static_cast<double>(n) * g - w * gp);
  e.scale = s;
  return e;
}

// Starting points from the upper convex hull of (k, log |d_k|).
std::vector<cplx> newton_polygon_starts(const cplx *d, int n, double rotation) {
  std::vector<int> hull;
  for (int k = 0; k <= n; ++k) {
    if (d[k] == cplx(0.0)) continue;
    const double yk = std::log(std::abs(d[k]));
    while (hull.size() >= 2) {
      const int a = hull[hull.size() - 2], b = hull.back();
      const double ya = std::log(std::abs(d[a])), yb = std::log(std::abs(d[b]));
      // Drop b when it lies on or below the chord from a to k.
      if ((yb - ya) * (k - a) <= (yk - ya) * (b - a)) hull.pop_back();
      else break;
    }
    hull.push_back(k);
  }
  std::vector<cplx> z;
  z.reserve(n);
  for (std::size_t i = 0; i + 1 < hull.size(); ++i) {
    const int a = hull[i], b = hull[i + 1], m = b - a;
    const double radius = std::exp((std::log(std::abs(d[a])) - std::log(std::abs(d[b]))) / m);
    for (int j = 0; j < m; ++j)
      z.push_back(std::polar(radius, 2.0 * kPi * j / m + 2.0 * kPi * i / n + rotation));
  }
  return z;
}

// One Aberth run; returns true when every root meets the stopping rule.
bool aberth(const cplx *d, int n, std::vector<cplx> &z, int max_iterations, int &iterations) {
  std::vector<char> done(n, 0);
  int remaining = n;
  for (int it = 0; it < max_iterations && remaining > 0; ++it) {
    ++iterations;
    for (int i = 0; i < n; ++i) {
      if (done[i]) continue;
      const Eval e = evaluate_poly(d, n, z[i]);
      if (std::abs(e.f) <= 4.0 * n * kEps * e.scale) {
        done[i] = 1;
        --remaining;
        continue;
      }
      cplx sum = 0.0;
      for (int j = 0; j < n; ++j)
        if (j != i) sum += 1.0 / (z[i] - z[j]);
      const cplx corr = e.ratio / (1.0 - e.ratio * sum);
      if (!std::isfinite(corr.real()) || !std::isfinite(corr.imag())) continue;
      z[i] -= corr;
      if (std::abs(e.ratio) <= kEps * std::abs(z[i])) {
        done[i] = 1;
        --remaining;
      }
    }
  }
  return remaining == 0;
}

double residual_of(const cplx *d, int n, cplx z) {
  const Eval e = evaluate_poly(d, n, z);
  return e.scale > 0.0 ? std::abs(e.f) / e.scale : 0.0;
}

} // namespace

double root_residual(const Coefficients &c, const ChartPoint &z) {
  const int n = static_cast<int>(c.size()) - 1;
  if (z.at_infinity) return std::abs(c[n]) / c.cwiseAbs().sum();
  return residual_of(c.data(), n, z.z);
}

ZeroSet find_roots(const Coefficients &c, const RootOptions &options) {
  const int p = static_cast<int>(c.size()) - 1;
  if (p < 0) throw std::invalid_argument("find_roots: empty coefficient vector");
  // Magnitudes relative to sqrt(C(p, k)), the typical size of c_k.
  std::vector<double> rel(p + 1);
  for (int k = 0; k <= p; ++k) {
    const double lb = std::lgamma(p + 1.0) - std::lgamma(k + 1.0) - std::lgamma(p - k + 1.0);
    rel[k] = std::abs(c[k]) * std::exp(-0.5 * lb);
  }
  const double maxabs = *std::max_element(rel.begin(), rel.end());
  if (!(maxabs > 0.0)) throw std::invalid_argument("find_roots: zero polynomial");

  ZeroSet zs;
  int top = p;
  while (top > 0 && rel[top] < options.infinity_threshold * maxabs) --top;
  zs.at_infinity = p - top;
  zs.degenerate = zs.at_infinity > 0;
  int low = 0;
  while (low < top && c[low] == cplx(0.0)) ++low;
  for (int k = 0; k < low; ++k) zs.roots.push_back(ChartPoint::finite(0.0));

  const int n = top - low;
  std::vector<cplx> found;
  if (n > 0) {
    const cplx *d = c.data() + low;
    SampleStream rng(options.restart_seed);
    double rotation = 0.4;
    for (int attempt = 0; attempt <= options.restarts; ++attempt) {
      found = newton_polygon_starts(d, n, rotation);
      if (attempt > 0)
        for (auto &z : found) z *= 1.0 + 0.1 * (rng.uniform() - 0.5);
      zs.converged = aberth(d, n, found, options.max_iterations, zs.iterations);
      if (zs.converged) break;
      rotation = 2.0 * kPi * rng.uniform();
    }
    for (auto &z : found)
      for (int it = 0; it < 2; ++it) {
        const Eval e = evaluate_poly(d, n, z);
        const cplx next = z - e.ratio;
        if (std::isfinite(next.real()) && std::isfinite(next.imag()) &&
            residual_of(d, n, next) < residual_of(d, n, z))
          z = next;
      }
    for (const auto &z : found) {
      zs.residual = std::max(zs.residual, residual_of(c.data(), p, z));
      zs.roots.push_back(ChartPoint::finite(z));
    }
  } else {
    zs.converged = true;
  }
  for (int k = 0; k < zs.at_infinity; ++k) zs.roots.push_back(ChartPoint::infinity());
  zs.usable = zs.converged && zs.residual <= options.residual_threshold;
  return zs;
}

ZeroSet find_roots(const RandomSection &s, const RootOptions &options) {
  return find_roots(s.coefficients, options);
}

std::vector<cplx> companion_roots(const Coefficients &c) {
  const int n = static_cast<int>(c.size()) - 1;
  if (n < 1 || n > 64) throw std::invalid_argument("companion_roots: degree must be in [1, 64]");
  if (c[n] == cplx(0.0)) throw std::invalid_argument("companion_roots: vanishing leading coefficient");
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 1; i < n; ++i) m(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) m(i, n - 1) = -c[i] / c[n];

  // Parlett-Reinsch balancing with powers of two.
  for (bool changed = true; changed;) {
    changed = false;
    for (int i = 0; i < n; ++i) {
      double r = 0.0, s = 0.0;
      for (int j = 0; j < n; ++j)
        if (j != i) r += std::abs(m(i, j)), s += std::abs(m(j, i));
      if (r == 0.0 || s == 0.0) continue;
      double f = 1.0;
      const double total = r + s;
      while (s < r / 2.0) s *= 2.0, r /= 2.0, f *= 2.0;
      while (s > r * 2.0) s /= 2.0, r *= 2.0, f /= 2.0;
      if (r + s < 0.95 * total) {
        changed = true;
        m.row(i) /= f;
        m.col(i) *= f;
      }
    }
  }
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m, false);
  const auto &ev = es.eigenvalues();
  return std::vector<cplx>(ev.data(), ev.data() + ev.size());
}

double linear_statistic(const ZeroSet &zs, const TestForm &phi) {
  if (!zs.usable) throw std::invalid_argument("linear_statistic: zero set flagged unusable");
  double sum = 0.0;
  for (const auto &r : zs.roots) sum += phi.value(r);
  return sum;
}

// ---------------------------------------------------------- Poincare-Lelong

int default_pl_level(int p) { return std::max(10 * p + 32, 400); }

PoincareLelong::PoincareLelong(const BergmanBasis &basis, const TestForm &phi,
                               const QuadratureGrid &grid)
    : p_(basis.degree()) {
  const auto &m = basis.metric();
  nodes_.reserve(grid.size());
  for (const auto &n : grid.nodes) {
    const ChartPoint &x = n.point;
    Node node;
    node.second_chart = std::norm(x.z) > 1.0;
    node.coordinate = node.second_chart ? 1.0 / x.z : x.z;
    node.log_weight = -0.5 * p_ * std::log1p(std::norm(node.coordinate)) - m.perturbation_value(p_, x);
    node.weight_psi = n.weight * phi.psi(x);
    nodes_.push_back(node);
    curvature_term_ += n.weight * m.curvature_density(p_, x) * phi.value(x);
  }
}

double PoincareLelong::operator()(const RandomSection &s) const {
  if (s.p != p_) throw std::invalid_argument("PoincareLelong: degree mismatch");
  const cplx *c = s.coefficients.data();
  double total = 0.0;
  for (const auto &node : nodes_) {
    if (node.weight_psi == 0.0) continue;
    cplx v;
    if (!node.second_chart) {
      v = c[p_];
      for (int k = p_ - 1; k >= 0; --k) v = v * node.coordinate + c[k];
    } else {
      v = c[0];
      for (int k = 1; k <= p_; ++k) v = v * node.coordinate + c[k];
    }
    const double a = std::abs(v);
    const double log_abs = a > 0.0 ? std::log(a) : std::log(std::numeric_limits<double>::min());
    total += node.weight_psi * (log_abs + node.log_weight);
  }
  return total + curvature_term_;
}

double pl_statistic(const RandomSection &s, const TestForm &phi, const BergmanBasis &basis,
                    const QuadratureGrid &grid) {
  return PoincareLelong(basis, phi, grid)(s);
}

// ------------------------------------------------------------ expected zeros

namespace {

// Weighted derivative vector matching weighted_monomials(x) up to a common
// unit factor, in the chart where the coordinate has modulus <= 1.
Eigen::VectorXcd weighted_derivatives(const BergmanBasis &basis, const ChartPoint &x,
                                      const Eigen::VectorXcd &a, double &chart_modulus2) {
  const int p = basis.degree();
  Eigen::VectorXcd da = Eigen::VectorXcd::Zero(p + 1);
  if (p == 0) {
    chart_modulus2 = x.at_infinity ? 0.0 : std::min(std::norm(x.z), 1.0 / std::norm(x.z));
    return da;
  }
  const double psi = basis.metric().perturbation_value(p, x);
  if (x.at_infinity) {
    chart_modulus2 = 0.0;
    da[p - 1] = basis.monomial_scale(p - 1) * std::exp(-psi);
    return da;
  }
  const double r2 = std::norm(x.z);
  if (r2 == 0.0) {
    chart_modulus2 = 0.0;
    da[1] = basis.monomial_scale(1) * std::exp(-psi);
    return da;
  }
  if (r2 <= 1.0) {
    chart_modulus2 = r2;
    for (int k = 1; k <= p; ++k) da[k] = static_cast<double>(k) * a[k] / x.z;
  } else {
    const cplx w = 1.0 / x.z;
    chart_modulus2 = std::norm(w);
    for (int k = 0; k < p; ++k) da[k] = static_cast<double>(p - k) * a[k] / w;
  }
  return da;
}

double density_from(const Eigen::VectorXcd &v, const Eigen::VectorXcd &dv, double chart_modulus2) {
  const double n0 = v.squaredNorm(), n1 = dv.squaredNorm();
  const double mixed = std::norm(v.dot(dv));
  const double one = 1.0 + chart_modulus2;
  return (n1 * n0 - mixed) / (n0 * n0) * one * one;
}

} // namespace

double expected_zero_density(const BergmanBasis &basis, const ChartPoint &x) {
  const Eigen::VectorXcd a = basis.weighted_monomials(x);
  double m2 = 0.0;
  const Eigen::VectorXcd da = weighted_derivatives(basis, x, a, m2);
  const auto t = basis.scaled_transform().triangularView<Eigen::Lower>();
  const Eigen::VectorXcd v = t * a, dv = t * da;
  return density_from(v, dv, m2);
}

ExpectedStatistic expected_statistic(const BergmanBasis &basis, const TestForm &phi,
                                     const QuadratureGrid &grid, int workers) {
  constexpr std::size_t kChunk = 512;
  const std::size_t n_chunks = (grid.size() + kChunk - 1) / kChunk;
  const int p = basis.degree();
  const int d = basis.dimension();
  std::vector<double> partial(n_chunks, 0.0), partial_curv(n_chunks, 0.0);
  parallel_for(n_chunks, workers, [&](std::size_t ch) {
    const std::size_t begin = ch * kChunk, end = std::min(grid.size(), begin + kChunk);
    const Eigen::Index cols = static_cast<Eigen::Index>(end - begin);
    Eigen::MatrixXcd a(d, cols), da(d, cols);
    std::vector<double> m2(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      const auto col = static_cast<Eigen::Index>(i - begin);
      a.col(col) = basis.weighted_monomials(grid.nodes[i].point);
      da.col(col) = weighted_derivatives(basis, grid.nodes[i].point, a.col(col), m2[i - begin]);
    }
    const auto t = basis.scaled_transform().triangularView<Eigen::Lower>();
    const Eigen::MatrixXcd v = t * a, dv = t * da;
    double sum = 0.0, curv = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const auto col = static_cast<Eigen::Index>(i - begin);
      const auto &node = grid.nodes[i];
      const double f = phi.value(node.point);
      sum += node.weight * f * density_from(v.col(col), dv.col(col), m2[i - begin]);
      curv += node.weight * f * basis.metric().curvature_density(p, node.point);
    }
    partial[ch] = sum;
    partial_curv[ch] = curv;
  });
  ExpectedStatistic e;
  for (std::size_t ch = 0; ch < n_chunks; ++ch) {
    e.total += partial[ch];
    e.curvature += partial_curv[ch];
  }
  e.kernel_part = e.total - e.curvature;
  return e;
}

} // namespace zerostat
