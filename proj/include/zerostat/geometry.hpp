#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zerostat/harmonic.hpp"

namespace zerostat {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// A point of CP^1 in the affine chart z, or the point z = infinity.
struct ChartPoint {
  cplx z{};
  bool at_infinity = false;

  static ChartPoint finite(cplx value) { return {value, false}; }
  static ChartPoint infinity() { return {cplx{}, true}; }
};

/// Coordinate of `x` in the second chart w = 1/z (z = 0 maps to infinity).
ChartPoint second_chart(const ChartPoint &x);

/// Unit vector on S^2 under stereographic projection; z = 0 is the north
/// pole (0, 0, 1) and z = infinity the south pole.
Vec3 sphere_point(const ChartPoint &x);

/// Density of the unit-volume Fubini-Study form with respect to planar
/// Lebesgue measure, (1/pi) (1 + |z|^2)^-2. Throws for the point at
/// infinity; transition to the second chart first.
double volume_density(const ChartPoint &x);

/// Spherical angle between the stereographic preimages, in [0, pi]. This is
/// 2 sqrt(pi) times the Riemannian distance of the unit-volume metric.
double geodesic_angle(const ChartPoint &x, const ChartPoint &y);

/// The point at spherical angle `theta` and azimuth `alpha` from `x`, obtained
/// by the rotation z -> (z + x) / (1 - conj(x) z) that carries 0 to x.
ChartPoint offset_point(const ChartPoint &x, double theta, double alpha);

// ---------------------------------------------------------------- quadrature

struct QuadratureNode {
  ChartPoint point;
  double weight = 0.0;
};

/// Gauss-Legendre in u = cos(theta) crossed with a uniform azimuthal rule.
///
/// Nodes are stored ring by ring: node (i, m) sits at index i * n_azimuth + m
/// with radius ring_radius[i] and azimuth 2 pi m / n_azimuth. The ring layout
/// is what the Fourier Gram path relies on.
struct QuadratureGrid {
  int level = 0;
  int n_azimuth = 0;
  std::vector<double> ring_u;      // cos(theta_i)
  std::vector<double> ring_radius; // |z| on ring i
  std::vector<double> ring_weight; // total weight of ring i
  std::vector<QuadratureNode> nodes;

  std::size_t size() const { return nodes.size(); }
  double total_weight() const;
};

/// Largest node count build_grid accepts unless told otherwise.
inline constexpr std::size_t kDefaultGridNodeBudget = std::size_t{1} << 24;

/// level + 1 Gauss-Legendre rings and 2 level + 1 azimuthal points. Throws
/// std::invalid_argument for level < 1 or when the grid would exceed
/// `node_budget` nodes.
QuadratureGrid build_grid(int level, std::size_t node_budget = kDefaultGridNodeBudget);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double> &nodes, std::vector<double> &weights);

/// Gauss-Legendre rule mapped to [a, b].
void gauss_legendre(int n, double a, double b, std::vector<double> &nodes,
                    std::vector<double> &weights);

// ------------------------------------------------------------ metric sequence

/// Perturbation psi_p(z) = c p^beta g(z) added to the Fubini-Study weight.
struct PerturbationSpec {
  double amplitude_c = 0.0;
  double exponent_beta = 0.0;
  std::string shape = "none";

  /// g as a spherical-harmonic combination; throws for unknown shapes.
  HarmonicPolynomial bump() const;
  bool trivial() const;
};

/// Names accepted by PerturbationSpec::shape.
std::vector<std::string> perturbation_shapes();

/// Default perturbation: c = 0.5, beta = 0.5 with the "default" bump.
PerturbationSpec default_perturbation();

/// Sequence p -> (L_p, h_p) on CP^1 with weight
/// phi_p(z) = (p/2) log(1 + |z|^2) + c p^beta g(z) and A_p = p.
///
/// Weights are chart-relative: in the second chart w = 1/z the frame w^p is
/// used, so phi_p(w) = (p/2) log(1 + |w|^2) + c p^beta g.
class MetricSequence {
public:
  MetricSequence() = default;
  explicit MetricSequence(PerturbationSpec spec);

  const PerturbationSpec &perturbation() const { return spec_; }
  bool unperturbed() const { return spec_.trivial(); }

  double A(int p) const { return static_cast<double>(p); }
  /// c p^beta; zero for the unperturbed sequence.
  double perturbation_scale(int p) const;

  /// psi_p at x (chart independent).
  double perturbation_value(int p, const ChartPoint &x) const;

  /// phi_p in the first chart; throws for x at infinity.
  double weight(int p, const ChartPoint &x) const;
  /// phi_p in the chart that contains x with |coordinate| <= 1.
  double chart_weight(int p, cplx coordinate, int chart) const;

  /// Density of c_1(L_p, h_p) with respect to the unit-volume form omega:
  /// p + 2 c p^beta Delta_S g.
  double curvature_density(int p, const ChartPoint &x) const;

  /// Discretized ||h_p||_3: the largest absolute chart derivative of phi_p of
  /// order <= 3 over the nodes of `grid`, taken in whichever chart keeps the
  /// node inside the closed unit disk.
  double h3_norm(int p, const QuadratureGrid &grid) const;
  /// h3_norm on the built-in diagnostic grid.
  double h3_norm(int p) const;
  double eta(int p) const;

  const HarmonicPolynomial &bump() const { return bump_; }

private:
  PerturbationSpec spec_{};
  HarmonicPolynomial bump_{};
};

/// Level of the fixed grid used for sup-norm diagnostics.
inline constexpr int kDiagnosticGridLevel = 24;
const QuadratureGrid &diagnostic_grid();

struct DiophantineRow {
  int p = 0;
  double sup_deviation = 0.0; // || (1/A_p) c_1 - omega ||_inf over nodes
  double min_curvature = 0.0; // min of c_1 / omega
  double eta = 0.0;
  double h3_norm = 0.0;
  bool band_ok = false; // 3/4 <= c_1 / (A_p omega) <= 5/4 at every node
};

struct DiophantineReport {
  std::vector<DiophantineRow> rows;
  /// Slope a of log sup_deviation = const - a log p; empty when fewer than
  /// two rows have positive deviation.
  std::optional<double> fitted_exponent;
  /// Smallest configured p from which every later row is inside the band.
  std::optional<int> p0;
  bool eta_decreasing = false;
};

/// Throws std::runtime_error when the curvature is non-positive at any node.
DiophantineReport diophantine_report(std::span<const int> degrees, const MetricSequence &m,
                                     const QuadratureGrid &grid);

/// Local normal form of phi_p at a point.
///
/// In the Kahler-normal coordinate xi with z = x + xi / sqrt(h(x)) and
/// omega = (i/2) h dz ^ dz-bar, phi_p(x + xi / sqrt h) =
/// Re t(xi) + lambda |xi|^2 + remainder(xi) with t holomorphic of degree 2.
struct WeightDecomposition {
  ChartPoint center;
  int chart = 0;                   // chart in which the expansion is taken
  cplx center_coordinate{};        // coordinate of the center in that chart
  std::array<cplx, 3> t_coeffs{};  // t(xi) = t0 + t1 xi + t2 xi^2
  double lambda = 0.0;
  double conformal_factor = 0.0;   // h(x)
  double polydisk_radius = 0.0;    // R_p = 1 / sqrt(A_p)
  double h3_norm = 0.0;
  double remainder_bound = 0.0;    // fitted D' with |rem| <= D' ||h||_3 |xi|^3
  double envelope_bound = 0.0;     // Taylor envelope sqrt(2)/3 h^(-3/2)
  double max_remainder = 0.0;
  bool lambda_in_band = false;     // 3 pi A/8 <= lambda <= 5 pi A/8
};

/// Throws std::runtime_error when the fitted remainder coefficient exceeds
/// ten times the cubic Taylor envelope.
WeightDecomposition decompose_weight(int p, const ChartPoint &x, const MetricSequence &m);

/// Kahler-normal coordinate map of a decomposition: x + xi / sqrt(h(x)) in the
/// decomposition's chart, returned as a ChartPoint in the first chart.
ChartPoint kahler_point(const WeightDecomposition &d, cplx xi);

} // namespace zerostat
