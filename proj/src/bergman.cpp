#include "zerostat/bergman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "zerostat/parallel.hpp"
#include "zerostat/random.hpp"

namespace zerostat {

std::vector<double> log_monomial_scales(int p) {
  std::vector<double> s(static_cast<std::size_t>(p) + 1);
  const double base = std::lgamma(p + 2.0);
  for (int k = 0; k <= p; ++k)
    s[k] = 0.5 * (base - std::lgamma(k + 1.0) - std::lgamma(p - k + 1.0));
  return s;
}

namespace {

// log |a_k(x)| without the perturbation, and the phase step e^{i arg x}.
// Entries for which a_k vanishes get -infinity.
void log_magnitudes(int p, const std::vector<double> &log_scale, const ChartPoint &x,
                    double *out, cplx &phase_step) {
  const double neg_inf = -std::numeric_limits<double>::infinity();
  phase_step = 1.0;
  if (x.at_infinity) {
    for (int k = 0; k < p; ++k) out[k] = neg_inf;
    out[p] = log_scale[p];
    return;
  }
  const double r = std::abs(x.z);
  if (r == 0.0) {
    out[0] = log_scale[0];
    for (int k = 1; k <= p; ++k) out[k] = neg_inf;
    return;
  }
  phase_step = x.z / r;
  if (r <= 1.0) {
    const double lr = std::log(r), base = -0.5 * p * std::log1p(r * r);
    for (int k = 0; k <= p; ++k) out[k] = log_scale[k] + k * lr + base;
  } else {
    const double lw = -std::log(r), w = 1.0 / r;
    const double base = -0.5 * p * std::log1p(w * w);
    for (int k = 0; k <= p; ++k) out[k] = log_scale[k] + (p - k) * lw + base;
  }
}

void fill_weighted_monomials(int p, const std::vector<double> &log_scale, const MetricSequence &m,
                             const ChartPoint &x, std::vector<double> &scratch, cplx *out) {
  scratch.resize(static_cast<std::size_t>(p) + 1);
  cplx step;
  log_magnitudes(p, log_scale, x, scratch.data(), step);
  const double psi = m.perturbation_value(p, x);
  cplx phase = 1.0;
  for (int k = 0; k <= p; ++k) {
    out[k] = std::exp(scratch[k] - psi) * phase;
    phase *= step;
  }
}

Eigen::MatrixXcd weighted_monomial_block(int p, const std::vector<double> &log_scale,
                                         const MetricSequence &m,
                                         std::span<const ChartPoint> xs) {
  Eigen::MatrixXcd a(p + 1, static_cast<Eigen::Index>(xs.size()));
  std::vector<double> scratch;
  for (std::size_t n = 0; n < xs.size(); ++n)
    fill_weighted_monomials(p, log_scale, m, xs[n], scratch, a.col(static_cast<Eigen::Index>(n)).data());
  return a;
}

constexpr std::size_t kBlock = 1024;

Eigen::MatrixXcd gram_direct(int p, const MetricSequence &m, const QuadratureGrid &grid,
                             int workers) {
  const auto log_scale = log_monomial_scales(p);
  const std::size_t n_blocks = (grid.size() + kBlock - 1) / kBlock;
  std::vector<Eigen::MatrixXcd> partial(n_blocks);
  parallel_for(n_blocks, workers, [&](std::size_t b) {
    const std::size_t begin = b * kBlock, end = std::min(grid.size(), begin + kBlock);
    std::vector<ChartPoint> pts;
    pts.reserve(end - begin);
    Eigen::VectorXd w(static_cast<Eigen::Index>(end - begin));
    for (std::size_t n = begin; n < end; ++n) {
      pts.push_back(grid.nodes[n].point);
      w[static_cast<Eigen::Index>(n - begin)] = grid.nodes[n].weight;
    }
    const Eigen::MatrixXcd a = weighted_monomial_block(p, log_scale, m, pts);
    partial[b] = (a * w.asDiagonal()) * a.adjoint();
  });
  Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(p + 1, p + 1);
  for (const auto &blk : partial) g += blk;
  for (int j = 0; j <= p; ++j) {
    g(j, j) = g(j, j).real();
    for (int k = j + 1; k <= p; ++k) g(j, k) = std::conj(g(k, j));
  }
  return g;
}

Eigen::MatrixXcd gram_fourier(int p, const MetricSequence &m, const QuadratureGrid &grid,
                              int workers) {
  const std::size_t n_rings = grid.ring_radius.size();
  const int n_az = grid.n_azimuth;
  if (n_rings == 0 || grid.size() != n_rings * static_cast<std::size_t>(n_az))
    throw std::invalid_argument("Fourier Gram path needs a ring-structured grid");
  if (n_az < 2 * p + 1)
    throw std::invalid_argument("Fourier Gram path needs at least 2p + 1 azimuthal nodes");
  const int d = p + 1;
  const auto log_scale = log_monomial_scales(p);

  std::vector<cplx> twiddle(n_az);
  for (int m_ = 0; m_ < n_az; ++m_) twiddle[m_] = std::polar(1.0, -2.0 * kPi * m_ / n_az);

  // Per ring: radial factors a~_k(r) and modes H^(n), n = 0..p, of e^{-2 psi}.
  std::vector<double> radial(n_rings * d);
  std::vector<cplx> modes(n_rings * d);
  parallel_for(n_rings, workers, [&](std::size_t i) {
    cplx step;
    log_magnitudes(p, log_scale, ChartPoint::finite(grid.ring_radius[i]), &radial[i * d], step);
    for (int k = 0; k < d; ++k) radial[i * d + k] = std::exp(radial[i * d + k]);
    std::vector<double> h(n_az);
    for (int a = 0; a < n_az; ++a)
      h[a] = std::exp(-2.0 * m.perturbation_value(p, grid.nodes[i * n_az + a].point));
    for (int n = 0; n < d; ++n) {
      cplx acc = 0.0;
      for (int a = 0; a < n_az; ++a)
        acc += h[a] * twiddle[(static_cast<long long>(n) * a) % n_az];
      modes[i * d + n] = acc / static_cast<double>(n_az);
    }
  });

  Eigen::MatrixXcd g(d, d);
  parallel_for(static_cast<std::size_t>(d), workers, [&](std::size_t jj) {
    const int j = static_cast<int>(jj);
    std::vector<cplx> row(d - j, cplx(0.0));
    for (std::size_t i = 0; i < n_rings; ++i) {
      const double wa = grid.ring_weight[i] * radial[i * d + j];
      if (wa == 0.0) continue;
      for (int k = j; k < d; ++k) row[k - j] += wa * radial[i * d + k] * modes[i * d + (k - j)];
    }
    for (int k = j; k < d; ++k) g(j, k) = row[k - j];
  });
  for (int j = 0; j < d; ++j) {
    g(j, j) = g(j, j).real();
    for (int k = j + 1; k < d; ++k) g(k, j) = std::conj(g(j, k));
  }
  return g;
}

} // namespace

Eigen::MatrixXcd assemble_scaled_gram(int p, const MetricSequence &m, const QuadratureGrid &grid,
                                      GramPath path, int workers) {
  if (p < 0) throw std::invalid_argument("assemble: p must be >= 0");
  if (path == GramPath::Automatic)
    path = p <= kDirectGramMaxDegree ? GramPath::Direct : GramPath::Fourier;
  return path == GramPath::Direct ? gram_direct(p, m, grid, workers)
                                  : gram_fourier(p, m, grid, workers);
}

BergmanBasis::BergmanBasis(int p, MetricSequence metric, int grid_level,
                           Eigen::MatrixXcd scaled_gram, Eigen::MatrixXcd scaled_transform)
    : p_(p), metric_(std::move(metric)), grid_level_(grid_level),
      scaled_gram_(std::move(scaled_gram)), scaled_transform_(std::move(scaled_transform)),
      log_scale_(log_monomial_scales(p)) {}

BergmanBasis assemble(int p, const MetricSequence &m, const QuadratureGrid &grid, GramPath path,
                      int workers) {
  if (grid.level < p + 2)
    throw std::invalid_argument("assemble: grid level " + std::to_string(grid.level) +
                                " is below p + 2 = " + std::to_string(p + 2));
  Eigen::MatrixXcd g = assemble_scaled_gram(p, m, grid, path, workers);
  Eigen::LLT<Eigen::MatrixXcd> llt(g);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g, Eigen::EigenvaluesOnly);
    throw std::runtime_error("assemble: Cholesky failed at p = " + std::to_string(p) +
                             ", smallest Gram eigenvalue " +
                             std::to_string(es.eigenvalues().minCoeff()));
  }
  const Eigen::Index d = p + 1;
  Eigen::MatrixXcd t = llt.matrixL().solve(Eigen::MatrixXcd::Identity(d, d));
  t.triangularView<Eigen::StrictlyUpper>().setZero();
  return BergmanBasis(p, m, grid.level, std::move(g), std::move(t));
}

BergmanBasis assemble(int p, const MetricSequence &m, int level, int workers) {
  const QuadratureGrid grid = build_grid(level > 0 ? level : p + kGridMargin);
  return assemble(p, m, grid, GramPath::Automatic, workers);
}

Eigen::MatrixXcd BergmanBasis::gram() const {
  Eigen::MatrixXcd g = scaled_gram_;
  for (int j = 0; j <= p_; ++j)
    for (int k = 0; k <= p_; ++k) g(j, k) /= std::exp(log_scale_[j] + log_scale_[k]);
  return g;
}

Eigen::MatrixXcd BergmanBasis::transform() const {
  Eigen::MatrixXcd t = scaled_transform_;
  for (int k = 0; k <= p_; ++k) t.col(k) *= std::exp(log_scale_[k]);
  return t;
}

Eigen::VectorXcd BergmanBasis::weighted_monomials(const ChartPoint &x) const {
  Eigen::VectorXcd a(p_ + 1);
  std::vector<double> scratch;
  fill_weighted_monomials(p_, log_scale_, metric_, x, scratch, a.data());
  return a;
}

Eigen::VectorXcd BergmanBasis::weighted_values(const ChartPoint &x) const {
  return scaled_transform_.triangularView<Eigen::Lower>() * weighted_monomials(x);
}

Eigen::MatrixXcd BergmanBasis::weighted_values(std::span<const ChartPoint> xs) const {
  const Eigen::MatrixXcd a = weighted_monomial_block(p_, log_scale_, metric_, xs);
  return scaled_transform_.triangularView<Eigen::Lower>() * a;
}

double kernel_function(const BergmanBasis &basis, const ChartPoint &x) {
  return basis.weighted_values(x).squaredNorm();
}

KernelValue kernel_amplitude(const BergmanBasis &basis, const ChartPoint &x, const ChartPoint &y) {
  const Eigen::VectorXcd fx = basis.weighted_values(x);
  const Eigen::VectorXcd fy = basis.weighted_values(y);
  return {std::abs(fx.dot(fy)), x, y};
}

double normalized_kernel(const Eigen::VectorXcd &fx, const Eigen::VectorXcd &fy) {
  const double den = fx.norm() * fy.norm();
  if (!(den > 0.0)) throw std::domain_error("normalized_kernel: vanishing kernel function");
  const double v = std::min(1.0, std::abs(fx.dot(fy)) / den);
  return v < 1e-300 ? 0.0 : v;
}

double normalized_kernel(const BergmanBasis &basis, const ChartPoint &x, const ChartPoint &y) {
  return normalized_kernel(basis.weighted_values(x), basis.weighted_values(y));
}

double density_check(const BergmanBasis &basis, const QuadratureGrid &grid, int workers) {
  const Eigen::MatrixXcd g =
      assemble_scaled_gram(basis.degree(), basis.metric(), grid, GramPath::Automatic, workers);
  const auto &t = basis.scaled_transform();
  const Eigen::MatrixXcd k = t * g * t.adjoint();
  return std::abs(k.trace().real() - static_cast<double>(basis.dimension()));
}

VariationalReport variational_check(const BergmanBasis &basis, const ChartPoint &x, int trials,
                                    std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("variational_check: trials must be >= 1");
  const Eigen::VectorXcd f = basis.weighted_values(x);
  const double k = f.squaredNorm();
  VariationalReport r;
  r.trials = trials;
  SampleStream rng(seed);
  Eigen::VectorXcd b(f.size());
  for (int t = 0; t < trials; ++t) {
    for (Eigen::Index j = 0; j < b.size(); ++j) b[j] = rng.complex_gaussian();
    b /= b.norm();
    const double v = std::norm(b.cwiseProduct(f).sum());
    r.max_random_ratio = std::max(r.max_random_ratio, v / k);
  }
  for (Eigen::Index j = 0; j < f.size(); ++j)
    r.max_basis_ratio = std::max(r.max_basis_ratio, std::norm(f[j]) / k);
  const Eigen::VectorXcd extremal = f.conjugate() / std::sqrt(k);
  r.extremal_ratio = std::norm(extremal.cwiseProduct(f).sum()) / k;
  if (r.max_random_ratio > 1.0 + 1e-9 || r.max_basis_ratio > 1.0 + 1e-9)
    throw std::runtime_error("variational principle violated at p = " +
                             std::to_string(basis.degree()));
  if (std::abs(r.extremal_ratio - 1.0) > 1e-9)
    throw std::runtime_error("extremal section misses the kernel at p = " +
                             std::to_string(basis.degree()));
  return r;
}

FirstOrderReport first_order_report(std::span<const BergmanBasis> bases,
                                    const QuadratureGrid &grid, int workers) {
  FirstOrderReport rep;
  std::vector<ChartPoint> pts;
  pts.reserve(grid.size());
  for (const auto &n : grid.nodes) pts.push_back(n.point);
  for (const auto &basis : bases) {
    if (!rep.rows.empty() && basis.degree() <= rep.rows.back().p)
      throw std::invalid_argument("first_order_report: degrees must be ascending");
    FirstOrderRow row;
    row.p = basis.degree();
    row.A = basis.metric().A(row.p);
    row.eta = basis.metric().eta(row.p);
    const std::size_t n_blocks = (pts.size() + kBlock - 1) / kBlock;
    std::vector<double> kvals(pts.size());
    parallel_for(n_blocks, workers, [&](std::size_t b) {
      const std::size_t begin = b * kBlock, end = std::min(pts.size(), begin + kBlock);
      const Eigen::MatrixXcd f =
          basis.weighted_values(std::span<const ChartPoint>(pts.data() + begin, end - begin));
      for (std::size_t n = begin; n < end; ++n)
        kvals[n] = f.col(static_cast<Eigen::Index>(n - begin)).squaredNorm();
    });
    row.min_ratio = std::numeric_limits<double>::infinity();
    row.max_ratio = 0.0;
    for (double k : kvals) {
      const double ratio = k / row.A;
      row.min_ratio = std::min(row.min_ratio, ratio);
      row.max_ratio = std::max(row.max_ratio, ratio);
      row.max_deviation = std::max(row.max_deviation, std::abs(ratio - 1.0));
    }
    rep.rows.push_back(row);
  }
  for (const auto &row : rep.rows)
    if (row.eta > 0.0)
      rep.fitted_d_prime = std::max(rep.fitted_d_prime, row.max_deviation / std::pow(row.eta, 2.0 / 3.0));
  rep.strictly_decreasing = true;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    auto &row = rep.rows[i];
    const double half = rep.fitted_d_prime * std::pow(row.eta, 2.0 / 3.0);
    row.band_lo = 1.0 - half;
    row.band_hi = 1.0 + half;
    if (i > 0 && !(row.max_deviation < rep.rows[i - 1].max_deviation))
      rep.strictly_decreasing = false;
  }
  return rep;
}

// ------------------------------------------------------------- off-diagonal

std::vector<ChartPoint> default_fit_centers() {
  return {ChartPoint::finite(0.0),           ChartPoint::infinity(),
          ChartPoint::finite(1.0),           ChartPoint::finite(cplx(0.0, 0.7)),
          ChartPoint::finite(cplx(-0.4, -0.9)), ChartPoint::finite(2.5)};
}

namespace {

// Normalized kernels below this are not resolved by a double-precision inner
// product of the weighted basis vectors.
constexpr double kResolutionFloor = 1e-10;

struct FitPoint {
  double s;     // sqrt(A) theta
  double log_k; // log K^2
  double theta;
};

} // namespace

OffDiagonalRow offdiagonal_fit(const BergmanBasis &basis, std::span<const ChartPoint> centers,
                               const OffDiagonalOptions &options) {
  OffDiagonalRow row;
  row.p = basis.degree();
  const double a = basis.metric().A(row.p);
  const double sa = std::sqrt(a);
  row.theta_min = std::log(a) / sa;
  row.theta_max = 0.5 * kPi;
  if (!(row.theta_min < row.theta_max))
    throw std::invalid_argument("offdiagonal_fit: far region is empty at p = " +
                                std::to_string(row.p));
  const bool cos_check = basis.metric().unperturbed();
  if (cos_check) row.cos_bound_violations = 0;

  auto cos_violated = [&](double khat2, double theta) {
    return khat2 > std::exp(-row.p * theta * theta / 4.0) * (1.0 + 1e-9) +
                       kResolutionFloor * kResolutionFloor;
  };

  // Fit set: centers x offsets (theta_i, alpha_k).
  struct Pair {
    std::size_t center;
    double theta;
    double alpha;
  };
  std::vector<Pair> pairs;
  for (std::size_t c = 0; c < centers.size(); ++c)
    for (int i = 0; i < options.n_theta; ++i) {
      const double theta = options.n_theta == 1
                               ? row.theta_min
                               : row.theta_min + (row.theta_max - row.theta_min) * i /
                                                     (options.n_theta - 1);
      for (int k = 0; k < options.n_alpha; ++k)
        pairs.push_back({c, theta, 2.0 * kPi * (k + 0.5 * (i % 2)) / options.n_alpha});
    }
  std::vector<Eigen::VectorXcd> fc(centers.size());
  for (std::size_t c = 0; c < centers.size(); ++c) fc[c] = basis.weighted_values(centers[c]);
  std::vector<double> khat(pairs.size());
  parallel_for(pairs.size(), options.workers, [&](std::size_t i) {
    const auto &pr = pairs[i];
    const ChartPoint y = offset_point(centers[pr.center], pr.theta, pr.alpha);
    khat[i] = normalized_kernel(fc[pr.center], basis.weighted_values(y));
  });

  std::vector<FitPoint> fit;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (khat[i] < kResolutionFloor) {
      ++row.unresolved;
      continue;
    }
    const double k2 = khat[i] * khat[i];
    fit.push_back({sa * pairs[i].theta, std::log(k2), pairs[i].theta});
    if (cos_check && cos_violated(k2, pairs[i].theta)) ++row.cos_bound_violations;
  }
  row.points = static_cast<int>(fit.size());
  if (fit.size() < 2) return row;

  double ms = 0.0, my = 0.0;
  for (const auto &f : fit) ms += f.s, my += f.log_k;
  ms /= fit.size(), my /= fit.size();
  double sxy = 0.0, sxx = 0.0;
  for (const auto &f : fit) {
    sxy += (f.s - ms) * (f.log_k - my);
    sxx += (f.s - ms) * (f.s - ms);
  }
  row.b_fit = sxx > 0.0 ? -sxy / sxx : 0.0;
  double log_g = -std::numeric_limits<double>::infinity();
  for (const auto &f : fit) log_g = std::max(log_g, f.log_k + row.b_fit * f.s);
  row.g_fit = std::exp(log_g);
  for (const auto &f : fit)
    if (f.log_k > log_g - row.b_fit * f.s + 1e-12) ++row.violations;

  // Held-out pairs with random centers and offsets in the far region.
  SampleStream rng(options.validation_seed);
  std::vector<std::pair<ChartPoint, ChartPoint>> val;
  std::vector<double> val_theta;
  for (int i = 0; i < options.n_validation; ++i) {
    const double u = 2.0 * rng.uniform() - 1.0, phi = 2.0 * kPi * rng.uniform();
    const ChartPoint x =
        u <= -1.0 ? ChartPoint::infinity()
                  : ChartPoint::finite(std::polar(std::sqrt((1.0 - u) / (1.0 + u)), phi));
    const double theta = row.theta_min + (row.theta_max - row.theta_min) * rng.uniform();
    val.push_back({x, offset_point(x, theta, 2.0 * kPi * rng.uniform())});
    val_theta.push_back(theta);
  }
  std::vector<double> vk(val.size());
  parallel_for(val.size(), options.workers, [&](std::size_t i) {
    vk[i] = normalized_kernel(basis, val[i].first, val[i].second);
  });
  for (std::size_t i = 0; i < val.size(); ++i) {
    if (vk[i] < kResolutionFloor) continue;
    ++row.validation_points;
    const double k2 = vk[i] * vk[i];
    if (std::log(k2) > log_g - row.b_fit * sa * val_theta[i] + 1e-12) ++row.validation_violations;
    if (cos_check && cos_violated(k2, val_theta[i])) ++row.cos_bound_violations;
  }
  return row;
}

// ------------------------------------------------------------ near-diagonal

std::vector<cplx> default_uv_grid(double radius) {
  std::vector<cplx> pts;
  const double h = radius / 2.0;
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j) {
      const cplx u(i * h, j * h);
      if (std::abs(u) <= radius * (1.0 + 1e-12)) pts.push_back(u);
    }
  for (int k = 0; k < 8; ++k) {
    if (k % 2 == 0) continue; // axis points are already lattice points
    pts.push_back(std::polar(radius, kPi * k / 4.0));
  }
  return pts;
}

NearDiagonalProfile near_diagonal_profile(const BergmanBasis &basis, const ChartPoint &x,
                                          std::span<const cplx> uv_grid) {
  NearDiagonalProfile prof;
  prof.p = basis.degree();
  const double a = basis.metric().A(prof.p);
  const double sa = std::sqrt(a);
  const WeightDecomposition d = decompose_weight(prof.p, x, basis.metric());
  prof.lambda_over_A = d.lambda / a;

  std::vector<ChartPoint> first, second;
  for (const cplx &u : uv_grid) first.push_back(kahler_point(d, u / sa));
  for (const cplx &v : uv_grid) second.push_back(kahler_point(d, std::conj(v) / sa));
  const Eigen::MatrixXcd f1 = basis.weighted_values(first);
  const Eigen::MatrixXcd f2 = basis.weighted_values(second);
  const Eigen::MatrixXcd inner = f1.adjoint() * f2;

  for (std::size_t i = 0; i < uv_grid.size(); ++i)
    for (std::size_t j = 0; j < uv_grid.size(); ++j) {
      const cplx u = uv_grid[i], v = uv_grid[j];
      const double k2 = std::norm(inner(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      const double gauss = a * a * std::exp(-2.0 * prof.lambda_over_A * std::norm(u - std::conj(v)));
      const double ratio = k2 / gauss;
      prof.samples.push_back({u, v, ratio});
      prof.max_deviation = std::max(prof.max_deviation, std::abs(ratio - 1.0));
    }
  return prof;
}

} // namespace zerostat
