#include "zerostat/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "zerostat/parallel.hpp"

namespace zerostat {

std::vector<double> standardize(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double m2 = 0.0;
  for (double v : values) m2 += (v - mean) * (v - mean);
  const double sd = std::sqrt(m2 / n);
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(sd > 0.0 ? (v - mean) / sd : 0.0);
  return out;
}

double ks_distance_normal(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = 0.5 * std::erfc(-v[i] / std::sqrt(2.0));
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

EnsembleSummary summarize(std::span<const double> values) {
  EnsembleSummary s;
  s.M = static_cast<int>(values.size());
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  for (double v : values) s.mean += v;
  s.mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double d = v - s.mean, d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n, m3 /= n, m4 /= n;
  s.variance = m2;
  if (m2 > 0.0) {
    s.skewness = m3 / std::pow(m2, 1.5);
    s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    s.ks_distance = ks_distance_normal(standardize(values));
  }
  return s;
}

// ------------------------------------------------------- Sodin-Tsirelson

namespace {

constexpr std::size_t kChunk = 2048;

// Columns f(x) = F(x) / |F(x)| for nodes [begin, end).
Eigen::MatrixXcd unit_values(const BergmanBasis &basis, const QuadratureGrid &grid,
                             std::size_t begin, std::size_t end) {
  std::vector<ChartPoint> pts;
  pts.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) pts.push_back(grid.nodes[i].point);
  Eigen::MatrixXcd f = basis.weighted_values(pts);
  for (Eigen::Index c = 0; c < f.cols(); ++c) {
    const double n = f.col(c).norm();
    if (!(n > 0.0)) throw std::domain_error("vanishing kernel function on the grid");
    f.col(c) /= n;
  }
  return f;
}

std::size_t chunk_count(const QuadratureGrid &grid) { return (grid.size() + kChunk - 1) / kChunk; }

} // namespace

// Low odd degrees have kernels that are only finitely smooth at the antipode.
int default_st_level(int p) { return p + kGridMargin + 256 / std::max(p, 1); }

double st_condition_ii(const BergmanBasis &basis, const QuadratureGrid &grid_x,
                       const QuadratureGrid &grid_y, int workers) {
  const Eigen::MatrixXcd fx = unit_values(basis, grid_x, 0, grid_x.size());
  const std::size_t n_chunks = chunk_count(grid_y);
  std::vector<Eigen::VectorXd> partial(n_chunks);
  parallel_for(n_chunks, workers, [&](std::size_t ch) {
    const std::size_t begin = ch * kChunk, end = std::min(grid_y.size(), begin + kChunk);
    const Eigen::MatrixXcd fy = unit_values(basis, grid_y, begin, end);
    const Eigen::MatrixXd k = (fx.adjoint() * fy).cwiseAbs();
    Eigen::VectorXd w(static_cast<Eigen::Index>(end - begin));
    for (std::size_t i = begin; i < end; ++i) w[static_cast<Eigen::Index>(i - begin)] = grid_y.nodes[i].weight;
    partial[ch] = k * w;
  });
  Eigen::VectorXd total = Eigen::VectorXd::Zero(fx.cols());
  for (const auto &v : partial) total += v;
  return total.maxCoeff();
}

double st_double_integral(const BergmanBasis &basis, const TestForm &phi,
                          const QuadratureGrid &grid, int workers) {
  const std::size_t n_chunks = chunk_count(grid);
  std::vector<Eigen::MatrixXcd> partial(n_chunks);
  parallel_for(n_chunks, workers, [&](std::size_t ch) {
    const std::size_t begin = ch * kChunk, end = std::min(grid.size(), begin + kChunk);
    const Eigen::MatrixXcd f = unit_values(basis, grid, begin, end);
    Eigen::VectorXd w(f.cols());
    for (std::size_t i = begin; i < end; ++i)
      w[static_cast<Eigen::Index>(i - begin)] = grid.nodes[i].weight * phi.psi(grid.nodes[i].point);
    partial[ch] = f * w.asDiagonal() * f.adjoint();
  });
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(basis.dimension(), basis.dimension());
  for (const auto &blk : partial) m += blk;
  return m.squaredNorm();
}

double st_double_integral_direct(const BergmanBasis &basis, const TestForm &phi,
                                 const QuadratureGrid &grid, int workers) {
  if (basis.degree() > 32) throw std::invalid_argument("direct double integral is limited to p <= 32");
  const Eigen::MatrixXcd f = unit_values(basis, grid, 0, grid.size());
  Eigen::VectorXd w(f.cols());
  for (std::size_t i = 0; i < grid.size(); ++i)
    w[static_cast<Eigen::Index>(i)] = grid.nodes[i].weight * phi.psi(grid.nodes[i].point);
  const std::size_t n_chunks = chunk_count(grid);
  std::vector<double> partial(n_chunks, 0.0);
  parallel_for(n_chunks, workers, [&](std::size_t ch) {
    const std::size_t begin = ch * kChunk, end = std::min(grid.size(), begin + kChunk);
    const auto cols = static_cast<Eigen::Index>(end - begin);
    const Eigen::MatrixXd k2 =
        (f.middleCols(static_cast<Eigen::Index>(begin), cols).adjoint() * f).cwiseAbs2();
    partial[ch] = w.segment(static_cast<Eigen::Index>(begin), cols).dot(k2 * w);
  });
  double total = 0.0;
  for (double v : partial) total += v;
  return total;
}

STConditionReport st_conditions(const BergmanBasis &basis, const TestForm &phi, int workers) {
  if (phi.degenerate())
    throw std::invalid_argument("condition (i) needs a test form with dd^c phi not identically zero");
  const int p = basis.degree();
  STConditionReport r;
  r.p = p;
  const double a = basis.metric().A(p);
  r.near_far_split = std::log(a) / std::sqrt(a);
  r.sup_integral = st_condition_ii(basis, build_grid(kSupGridLevel), build_grid(default_st_level(p)), workers);
  // K^2 is smooth, so the assembly-level grid suffices for condition (i).
  const auto grid = build_grid(p + kGridMargin);
  r.double_integral = st_double_integral(basis, phi, grid, workers);
  if (p <= 32) r.oracle_double_integral = st_double_integral_direct(basis, phi, grid, workers);
  r.ratio_nu1 = r.double_integral / r.sup_integral;
  for (const auto &n : grid.nodes) r.psi_norm2 += n.weight * std::pow(phi.psi(n.point), 2);
  return r;
}

// ------------------------------------------------------------------- CLT

CltRun run_clt(const BergmanBasis &basis, const TestForm &phi, int M, std::uint64_t master_seed,
               int workers, const RootOptions &roots) {
  if (M < 100) throw std::invalid_argument("run_clt needs at least 100 samples");
  if (phi.degenerate())
    throw std::invalid_argument("run_clt: test form has dd^c phi = 0, the statistic is deterministic");
  const int p = basis.degree();
  CltRun run;
  run.records.resize(static_cast<std::size_t>(M));
  parallel_for(run.records.size(), workers, [&](std::size_t i) {
    SampleRecord &rec = run.records[i];
    rec.index = i;
    const auto zs = find_roots(sample(basis, master_seed, i), roots);
    rec.residual = zs.residual;
    rec.degenerate = zs.degenerate;
    rec.zero_count = static_cast<int>(zs.roots.size());
    rec.accepted = zs.usable && rec.zero_count == p;
    if (rec.accepted) rec.value = linear_statistic(zs, phi);
  });
  std::vector<double> values;
  values.reserve(run.records.size());
  int rejected = 0;
  for (const auto &rec : run.records) {
    if (rec.accepted) values.push_back(rec.value);
    else ++rejected;
  }
  run.summary = summarize(values);
  run.summary.p = p;
  run.summary.rejected_samples = rejected;
  run.standardized = standardize(values);
  run.tainted = rejected * 100 > M;
  return run;
}

std::vector<VarianceRow> variance_trend(std::span<const BergmanBasis> bases, const TestForm &phi,
                                        int M, std::uint64_t master_seed, int workers) {
  std::vector<VarianceRow> rows;
  for (const auto &basis : bases) {
    const int p = basis.degree();
    const auto run = run_clt(basis, phi, M, master_seed, workers);
    VarianceRow row;
    row.p = p;
    row.mean = run.summary.mean;
    row.variance = run.summary.variance;
    row.tainted = run.tainted;
    row.expected_mean = expected_statistic(basis, phi, build_grid(2 * p + 16), workers).total;
    row.sup_integral =
        st_condition_ii(basis, build_grid(kSupGridLevel), build_grid(default_st_level(p)), workers);
    row.normalized_variance = row.variance / row.sup_integral;
    rows.push_back(row);
  }
  return rows;
}

} // namespace zerostat
