#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "zerostat/geometry.hpp"

namespace zerostat {

enum class GramPath { Automatic, Direct, Fourier };

/// Automatic path selection uses the direct node loop up to this degree.
inline constexpr int kDirectGramMaxDegree = 128;

/// Default assembly grid: level = p + kGridMargin.
inline constexpr int kGridMargin = 8;

/// Orthonormal basis of H^0(CP^1, L_p) built from monomials 1, z, ..., z^p.
///
/// Internally the monomials are rescaled to q_k z^k with
/// q_k = sqrt((p + 1) binom(p, k)), which are orthonormal for the
/// Fubini-Study metric. The scaled Gram matrix is then well conditioned for
/// every p, and S_j = sum_k T~_jk q_k z^k with T~ = chol(G~)^-1.
class BergmanBasis {
public:
  BergmanBasis(int p, MetricSequence metric, int grid_level, Eigen::MatrixXcd scaled_gram,
               Eigen::MatrixXcd scaled_transform);

  int degree() const { return p_; }
  int dimension() const { return p_ + 1; }
  int grid_level() const { return grid_level_; }
  const MetricSequence &metric() const { return metric_; }

  /// G~_jk = <q_j z^j, q_k z^k>_p.
  const Eigen::MatrixXcd &scaled_gram() const { return scaled_gram_; }
  /// Lower-triangular T~ with T~ G~ T~^H = I.
  const Eigen::MatrixXcd &scaled_transform() const { return scaled_transform_; }

  /// G_jk = <z^j, z^k>_p in raw monomials.
  Eigen::MatrixXcd gram() const;
  /// Raw T with S_j = sum_k T_jk z^k.
  Eigen::MatrixXcd transform() const;

  double monomial_scale(int k) const { return std::exp(log_scale_[k]); }
  double log_monomial_scale(int k) const { return log_scale_[k]; }

  /// a_k(x) = q_k x^k e^{-phi_p(x)} with the first-chart frame; for |x| > 1
  /// the factors are formed from w = 1/x so nothing overflows.
  Eigen::VectorXcd weighted_monomials(const ChartPoint &x) const;

  /// F_j(x) = S_j(x) e^{-phi_p(x)}; |F(x)|^2 = K_p(x).
  Eigen::VectorXcd weighted_values(const ChartPoint &x) const;
  /// Columns F(x_n) for a batch of points.
  Eigen::MatrixXcd weighted_values(std::span<const ChartPoint> xs) const;

private:
  int p_;
  MetricSequence metric_;
  int grid_level_;
  Eigen::MatrixXcd scaled_gram_;
  Eigen::MatrixXcd scaled_transform_;
  std::vector<double> log_scale_;
};

/// log q_k for degree p.
std::vector<double> log_monomial_scales(int p);

/// Scaled Gram matrix of degree p on `grid`. Fourier needs the ring layout
/// of build_grid. Summation order is fixed, so the result does not depend on
/// `workers`.
Eigen::MatrixXcd assemble_scaled_gram(int p, const MetricSequence &m, const QuadratureGrid &grid,
                                      GramPath path = GramPath::Automatic, int workers = 1);

/// Requires grid.level >= p + 2. Throws std::runtime_error with the smallest
/// eigenvalue of the Gram matrix when the Cholesky factorization fails.
BergmanBasis assemble(int p, const MetricSequence &m, const QuadratureGrid &grid,
                      GramPath path = GramPath::Automatic, int workers = 1);

/// assemble() on build_grid(p + kGridMargin) unless `level` is positive.
BergmanBasis assemble(int p, const MetricSequence &m, int level = 0, int workers = 1);

/// K_p(x) = sum_j |S_j(x)|^2 e^{-2 phi_p(x)}.
double kernel_function(const BergmanBasis &basis, const ChartPoint &x);

struct KernelValue {
  double amplitude = 0.0; // |K_p(x, y)|_{h_p,x (x) h_p,y^*}
  ChartPoint x;
  ChartPoint y;
};

KernelValue kernel_amplitude(const BergmanBasis &basis, const ChartPoint &x, const ChartPoint &y);

/// |K_p(x, y)| / sqrt(K_p(x) K_p(y)) in [0, 1]. Values below 1e-300 flush to 0.
double normalized_kernel(const BergmanBasis &basis, const ChartPoint &x, const ChartPoint &y);

/// Normalized kernel from precomputed weighted values.
double normalized_kernel(const Eigen::VectorXcd &fx, const Eigen::VectorXcd &fy);

/// |integral of K_p over `grid` - d_p|, computed as trace(T~ G~_grid T~^H) - d_p.
double density_check(const BergmanBasis &basis, const QuadratureGrid &grid, int workers = 1);

struct VariationalReport {
  double max_random_ratio = 0.0;   // max |S(x)|^2_h / K_p(x) over random unit sections
  double extremal_ratio = 0.0;     // same ratio for K_p(., x) / sqrt(K_p(x))
  double max_basis_ratio = 0.0;    // max over basis elements S_j
  int trials = 0;
};

/// Throws std::runtime_error when a random section exceeds K_p(x)(1 + 1e-9)
/// or the extremal section misses equality by more than 1e-9.
VariationalReport variational_check(const BergmanBasis &basis, const ChartPoint &x, int trials,
                                    std::uint64_t seed);

struct FirstOrderRow {
  int p = 0;
  double A = 0.0;
  double eta = 0.0;
  double max_deviation = 0.0; // max over nodes of |K_p / A_p - 1|
  double min_ratio = 0.0;     // min over nodes of K_p / A_p
  double max_ratio = 0.0;
  double band_lo = 0.0;       // 1 - D' eta^(2/3)
  double band_hi = 0.0;
};

struct FirstOrderReport {
  std::vector<FirstOrderRow> rows;
  double fitted_d_prime = 0.0; // smallest D' covering every row
  bool strictly_decreasing = false;
};

/// `bases` must be in ascending degree. Sup norms are taken over `grid`.
FirstOrderReport first_order_report(std::span<const BergmanBasis> bases,
                                    const QuadratureGrid &grid, int workers = 1);

struct OffDiagonalRow {
  int p = 0;
  double theta_min = 0.0; // log A_p / sqrt(A_p)
  double theta_max = 0.0;
  double g_fit = 0.0;
  double b_fit = 0.0;
  int points = 0;              // resolved points used in the fit
  int unresolved = 0;          // dropped: below the round-off floor of the inner product
  int violations = 0;          // fit-set points above G e^{-B sqrt(A) theta}
  int validation_points = 0;
  int validation_violations = 0;
  int cos_bound_violations = -1; // K^2 > e^{-p theta^2 / 4}; -1 when perturbed
};

struct OffDiagonalOptions {
  int n_theta = 24;
  int n_alpha = 8;
  int n_validation = 400;
  std::uint64_t validation_seed = 7;
  int workers = 1;
};

/// Fit centers used by default.
std::vector<ChartPoint> default_fit_centers();

/// Least-squares fit of log K^2 against -sqrt(A_p) theta on the far region
/// theta in [log A_p / sqrt(A_p), pi/2]. B is the negated slope; G is the
/// smallest constant making G e^{-B sqrt(A) theta} an upper envelope of the
/// fit set.
OffDiagonalRow offdiagonal_fit(const BergmanBasis &basis, std::span<const ChartPoint> centers,
                               const OffDiagonalOptions &options = {});

struct NearDiagonalSample {
  cplx u;
  cplx v;
  double ratio = 0.0;
};

struct NearDiagonalProfile {
  int p = 0;
  double lambda_over_A = 0.0;
  double max_deviation = 0.0; // max |R_p - 1|
  std::vector<NearDiagonalSample> samples;
};

/// Points u with |u| <= radius: lattice points of spacing radius/2 and
/// eight points on the circle of the given radius.
std::vector<cplx> default_uv_grid(double radius = 2.0);

/// R_p(u, v) = |K_p(x + u/sqrt A, x + conj(v)/sqrt A)|^2_h /
/// (A^2 exp(-2 (lambda/A) |u - conj(v)|^2)) in Kahler-normal coordinates at x.
NearDiagonalProfile near_diagonal_profile(const BergmanBasis &basis, const ChartPoint &x,
                                          std::span<const cplx> uv_grid);

} // namespace zerostat
