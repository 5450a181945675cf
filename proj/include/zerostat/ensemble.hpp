#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "zerostat/bergman.hpp"

namespace zerostat {

struct SeedPath {
  std::uint64_t master = 0;
  std::uint64_t index = 0;
};

/// s = sum_j b_j S_j. `coefficients` holds c = T^T b in raw monomials and
/// `scaled_coefficients` the same section against q_k z^k.
struct RandomSection {
  int p = 0;
  Eigen::VectorXcd b;
  Eigen::VectorXcd coefficients;
  Eigen::VectorXcd scaled_coefficients;
  SeedPath seed;
};

/// Section with the given orthonormal-basis coefficients.
RandomSection make_section(const BergmanBasis &basis, Eigen::VectorXcd b, SeedPath seed = {});

/// b_j i.i.d. standard complex Gaussian drawn from derive_seed(master, index).
RandomSection sample(const BergmanBasis &basis, std::uint64_t master_seed, std::uint64_t index);

/// Sections 0..count-1 of a master seed; identical for every worker count.
std::vector<RandomSection> sample_ensemble(const BergmanBasis &basis, std::uint64_t master_seed,
                                           std::size_t count, int workers = 1);

/// |s(x)|_{h_p}.
double evaluate(const RandomSection &s, const BergmanBasis &basis, const ChartPoint &x);

/// log |s(x)|_{h_p}; -infinity at a zero.
double log_evaluate(const RandomSection &s, const BergmanBasis &basis, const ChartPoint &x);

/// |alpha_p(x)| = |s(x)|_{h_p} / sqrt(K_p(x)).
double normalized_process(const RandomSection &s, const BergmanBasis &basis, const ChartPoint &x);

struct CovarianceValue {
  cplx value{};
  bool modulus_matches_kernel = false;
  double mismatch = 0.0;
};

/// C_p(x, y) = sum_j f_j(x) conj(f_j(y)) with f = F / |F|. The modulus is
/// checked against the kernel obtained by solving with the Gram matrix
/// directly, a path independent of the orthonormalizing transform. Throws
/// std::runtime_error when the two differ by more than 1e-8.
CovarianceValue covariance(const BergmanBasis &basis, const ChartPoint &x, const ChartPoint &y);

/// Batched covariance with a single Gram factorization.
std::vector<CovarianceValue> covariance(const BergmanBasis &basis,
                                        std::span<const std::pair<ChartPoint, ChartPoint>> pairs);

/// Sidecar format, little-endian: per section uint64 master seed, uint64
/// index, uint64 length n, then n (real, imaginary) double pairs of b.
void write_sections(const std::filesystem::path &path, std::span<const RandomSection> sections);

struct StoredSection {
  SeedPath seed;
  Eigen::VectorXcd b;
};
std::vector<StoredSection> read_sections(const std::filesystem::path &path);

} // namespace zerostat
