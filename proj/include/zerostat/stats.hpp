#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "zerostat/zeros.hpp"

namespace zerostat {

struct EnsembleSummary {
  int p = 0;
  int M = 0;               // accepted samples
  double mean = 0.0;
  double variance = 0.0;   // population variance of the accepted samples
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double ks_distance = 0.0; // standardized sample against N(0, 1)
  int rejected_samples = 0;
};

/// Moments and KS distance of `values`, standardized by their own mean and
/// population standard deviation.
EnsembleSummary summarize(std::span<const double> values);

/// (v - mean) / sd with the population standard deviation.
std::vector<double> standardize(std::span<const double> values);

/// sup |F_n - Phi| for the empirical CDF of `values`.
double ks_distance_normal(std::span<const double> values);

/// Sup over `grid_x` of the integral of K^_p(x, y) dV(y) on `grid_y`.
double st_condition_ii(const BergmanBasis &basis, const QuadratureGrid &grid_x,
                       const QuadratureGrid &grid_y, int workers = 1);

/// Level of the y-grid used by default: p + 8 + 256 / p.
int default_st_level(int p);
/// Level of the x-grid over which the sup is taken.
inline constexpr int kSupGridLevel = 8;

struct STConditionReport {
  int p = 0;
  double sup_integral = 0.0;    // condition (ii)
  double double_integral = 0.0; // integral of K^2 psi(x) psi(y)
  double ratio_nu1 = 0.0;       // double_integral / sup_integral
  double psi_norm2 = 0.0;       // integral of psi^2
  double near_far_split = 0.0;  // log A_p / sqrt(A_p)
  double oracle_double_integral = -1.0; // direct pairwise sum, p <= 32 only
};

/// Double integral of K^_p(x, y)^2 psi(x) psi(y) through the identity
/// ||M||_F^2 with M = integral of f f^H psi dV, f = F / |F|.
double st_double_integral(const BergmanBasis &basis, const TestForm &phi,
                          const QuadratureGrid &grid, int workers = 1);

/// Same integral as a direct sum over node pairs. Throws for p > 32.
double st_double_integral_direct(const BergmanBasis &basis, const TestForm &phi,
                                 const QuadratureGrid &grid, int workers = 1);

/// Conditions (i) and (ii). Throws std::invalid_argument for degenerate phi.
STConditionReport st_conditions(const BergmanBasis &basis, const TestForm &phi, int workers = 1);

struct SampleRecord {
  std::uint64_t index = 0;
  double value = 0.0;
  double residual = 0.0;
  bool degenerate = false;
  bool accepted = false;
  int zero_count = 0;
};

struct CltRun {
  EnsembleSummary summary;
  std::vector<SampleRecord> records;
  std::vector<double> standardized; // accepted samples in index order
  bool tainted = false;              // more than 1% rejected
};

/// Linear statistics of M sections with master seed `master_seed`.
/// Throws std::invalid_argument when M < 100 or psi vanishes identically.
CltRun run_clt(const BergmanBasis &basis, const TestForm &phi, int M, std::uint64_t master_seed,
               int workers = 1, const RootOptions &roots = {});

struct VarianceRow {
  int p = 0;
  double mean = 0.0;
  double expected_mean = 0.0;
  double variance = 0.0;
  double sup_integral = 0.0;
  double normalized_variance = 0.0; // variance / sup_integral
  bool tainted = false;
};

/// One row per basis, each from its own run_clt.
std::vector<VarianceRow> variance_trend(std::span<const BergmanBasis> bases, const TestForm &phi,
                                        int M, std::uint64_t master_seed, int workers = 1);

} // namespace zerostat
