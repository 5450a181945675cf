#include <cmath>
#include <stdexcept>

#include "zerostat/geometry.hpp"

namespace zerostat {

void gauss_legendre(int n, std::vector<double> &nodes, std::vector<double> &weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  if (n == 1) {
    weights[0] = 2.0;
    return;
  }
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi initial guess, then Newton on the three-term recurrence.
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

void gauss_legendre(int n, double a, double b, std::vector<double> &nodes,
                    std::vector<double> &weights) {
  gauss_legendre(n, nodes, weights);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    nodes[i] = mid + half * nodes[i];
    weights[i] *= half;
  }
}

double QuadratureGrid::total_weight() const {
  double s = 0.0;
  for (const auto &n : nodes) s += n.weight;
  return s;
}

QuadratureGrid build_grid(int level, std::size_t node_budget) {
  if (level < 1) throw std::invalid_argument("build_grid: level must be >= 1");
  const std::size_t n_rings = static_cast<std::size_t>(level) + 1;
  const std::size_t n_az = 2 * static_cast<std::size_t>(level) + 1;
  if (n_rings * n_az > node_budget)
    throw std::invalid_argument("build_grid: level " + std::to_string(level) +
                                " exceeds the node budget");
  QuadratureGrid g;
  g.level = level;
  g.n_azimuth = static_cast<int>(n_az);
  std::vector<double> u, w;
  gauss_legendre(static_cast<int>(n_rings), u, w);
  g.ring_u = u;
  g.ring_radius.resize(n_rings);
  g.ring_weight.resize(n_rings);
  g.nodes.reserve(n_rings * n_az);
  for (std::size_t i = 0; i < n_rings; ++i) {
    // |z|^2 = (1 - u) / (1 + u) under stereographic projection from the south pole.
    const double r = std::sqrt((1.0 - u[i]) / (1.0 + u[i]));
    g.ring_radius[i] = r;
    g.ring_weight[i] = 0.5 * w[i];
    const double node_weight = 0.5 * w[i] / static_cast<double>(n_az);
    for (std::size_t m = 0; m < n_az; ++m) {
      const double alpha = 2.0 * kPi * static_cast<double>(m) / static_cast<double>(n_az);
      g.nodes.push_back({ChartPoint::finite(std::polar(r, alpha)), node_weight});
    }
  }
  return g;
}

} // namespace zerostat
