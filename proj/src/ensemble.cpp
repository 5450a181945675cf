#include "zerostat/ensemble.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "zerostat/parallel.hpp"
#include "zerostat/random.hpp"

namespace zerostat {

RandomSection make_section(const BergmanBasis &basis, Eigen::VectorXcd b, SeedPath seed) {
  if (b.size() != basis.dimension())
    throw std::invalid_argument("make_section: coefficient vector has the wrong length");
  RandomSection s;
  s.p = basis.degree();
  s.scaled_coefficients = basis.scaled_transform().transpose() * b;
  s.coefficients = s.scaled_coefficients;
  for (int k = 0; k <= s.p; ++k) s.coefficients[k] *= basis.monomial_scale(k);
  s.b = std::move(b);
  s.seed = seed;
  return s;
}

RandomSection sample(const BergmanBasis &basis, std::uint64_t master_seed, std::uint64_t index) {
  SampleStream rng(derive_seed(master_seed, index));
  Eigen::VectorXcd b(basis.dimension());
  for (Eigen::Index j = 0; j < b.size(); ++j) b[j] = rng.complex_gaussian();
  return make_section(basis, std::move(b), {master_seed, index});
}

std::vector<RandomSection> sample_ensemble(const BergmanBasis &basis, std::uint64_t master_seed,
                                           std::size_t count, int workers) {
  std::vector<RandomSection> out(count);
  parallel_for(count, workers, [&](std::size_t i) { out[i] = sample(basis, master_seed, i); });
  return out;
}

double log_evaluate(const RandomSection &s, const BergmanBasis &basis, const ChartPoint &x) {
  const cplx v = s.scaled_coefficients.cwiseProduct(basis.weighted_monomials(x)).sum();
  const double a = std::abs(v);
  return a > 0.0 ? std::log(a) : -std::numeric_limits<double>::infinity();
}

double evaluate(const RandomSection &s, const BergmanBasis &basis, const ChartPoint &x) {
  return std::abs(s.scaled_coefficients.cwiseProduct(basis.weighted_monomials(x)).sum());
}

double normalized_process(const RandomSection &s, const BergmanBasis &basis, const ChartPoint &x) {
  const double k = kernel_function(basis, x);
  if (!(k > 0.0)) throw std::domain_error("normalized_process: K_p(x) vanishes");
  return evaluate(s, basis, x) / std::sqrt(k);
}

std::vector<CovarianceValue> covariance(const BergmanBasis &basis,
                                        std::span<const std::pair<ChartPoint, ChartPoint>> pairs) {
  const Eigen::LLT<Eigen::MatrixXcd> llt(basis.scaled_gram());
  std::vector<CovarianceValue> out;
  out.reserve(pairs.size());
  for (const auto &[x, y] : pairs) {
    const Eigen::VectorXcd fx = basis.weighted_values(x), fy = basis.weighted_values(y);
    const double nx = fx.norm(), ny = fy.norm();
    if (!(nx > 0.0 && ny > 0.0)) throw std::domain_error("covariance: K_p vanishes");
    CovarianceValue c;
    c.value = (fx / nx).cwiseProduct((fy / ny).conjugate()).sum();

    // K(x, y) = a(y)^H G~^-1 a(x) from the Gram matrix alone.
    const Eigen::VectorXcd ax = basis.weighted_monomials(x), ay = basis.weighted_monomials(y);
    const double kxy = std::abs(ay.dot(llt.solve(ax)));
    const double kxx = std::abs(ax.dot(llt.solve(ax))), kyy = std::abs(ay.dot(llt.solve(ay)));
    c.mismatch = std::abs(std::abs(c.value) - kxy / std::sqrt(kxx * kyy));
    c.modulus_matches_kernel = c.mismatch <= 1e-8;
    if (!c.modulus_matches_kernel)
      throw std::runtime_error("covariance modulus differs from the normalized kernel by " +
                               std::to_string(c.mismatch));
    out.push_back(c);
  }
  return out;
}

CovarianceValue covariance(const BergmanBasis &basis, const ChartPoint &x, const ChartPoint &y) {
  const std::pair<ChartPoint, ChartPoint> one[1] = {{x, y}};
  return covariance(basis, one).front();
}

// ------------------------------------------------------------------ sidecar

namespace {

template <class T> T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

template <class T> void put(std::ofstream &out, T v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <class T> T get(std::ifstream &in) {
  T v;
  in.read(reinterpret_cast<char *>(&v), sizeof(T));
  if (!in) throw std::runtime_error("read_sections: truncated sidecar file");
  return to_little(v);
}

} // namespace

void write_sections(const std::filesystem::path &path, std::span<const RandomSection> sections) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  for (const auto &s : sections) {
    put<std::uint64_t>(out, s.seed.master);
    put<std::uint64_t>(out, s.seed.index);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(s.b.size()));
    for (Eigen::Index j = 0; j < s.b.size(); ++j) {
      put<double>(out, s.b[j].real());
      put<double>(out, s.b[j].imag());
    }
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<StoredSection> read_sections(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<StoredSection> out;
  while (in.peek() != std::char_traits<char>::eof()) {
    StoredSection s;
    s.seed.master = get<std::uint64_t>(in);
    s.seed.index = get<std::uint64_t>(in);
    const auto n = get<std::uint64_t>(in);
    if (n > (1u << 20)) throw std::runtime_error("read_sections: implausible section length");
    s.b.resize(static_cast<Eigen::Index>(n));
    for (std::uint64_t j = 0; j < n; ++j) {
      const double re = get<double>(in);
      const double im = get<double>(in);
      s.b[static_cast<Eigen::Index>(j)] = {re, im};
    }
    out.push_back(std::move(s));
  }
  return out;
}

} // namespace zerostat
