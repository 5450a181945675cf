#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zerostat/ensemble.hpp"
#include "zerostat/harmonic.hpp"

namespace zerostat {

/// Test function phi on CP^1 and psi with dd^c phi = psi dV.
///
/// phi is a spherical-harmonic combination of degree <= 2, so psi = 2 Delta_S phi
/// is available in closed form.
struct TestForm {
  std::string name;
  HarmonicPolynomial phi;
  bool c3 = true;

  double value(const ChartPoint &x) const { return phi(sphere_point(x)); }
  double psi(const ChartPoint &x) const { return 2.0 * phi.laplacian(sphere_point(x)); }
  /// psi vanishes identically.
  bool degenerate() const { return phi.is_constant(); }
};

std::vector<std::string> test_form_names();
/// Throws std::invalid_argument for unknown names.
TestForm test_form(const std::string &name);

/// Polynomial coefficients c_0..c_p (ascending powers).
using Coefficients = Eigen::VectorXcd;

struct RootOptions {
  int max_iterations = 500;
  int restarts = 3;
  double infinity_threshold = 1e-13; // leading |c_k| / sqrt(C(p,k)) below this times the max deflates
  double residual_threshold = 1e-8;
  std::uint64_t restart_seed = 0x5EED;
};

struct ZeroSet {
  std::vector<ChartPoint> roots; // p entries, infinity included
  int at_infinity = 0;
  double residual = 0.0;         // max |f(z)| / sum |c_j| |z|^j over finite roots
  bool degenerate = false;       // leading coefficients deflated to infinity
  bool converged = false;
  bool usable = false;           // converged and residual within threshold
  int iterations = 0;
};

/// Aberth-Ehrlich iteration from Newton-polygon starting points, restarted
/// from rotated starts on stagnation, followed by Newton polishing.
ZeroSet find_roots(const Coefficients &c, const RootOptions &options = {});
ZeroSet find_roots(const RandomSection &s, const RootOptions &options = {});

/// Eigenvalues of the balanced companion matrix; p <= 64.
std::vector<cplx> companion_roots(const Coefficients &c);

/// Normalized residual |f(z)| / sum |c_j| |z|^j, evaluated in the chart
/// where |coordinate| <= 1.
double root_residual(const Coefficients &c, const ChartPoint &z);

/// sum of phi over the zeros with multiplicity. Throws for unusable sets.
double linear_statistic(const ZeroSet &zs, const TestForm &phi);

/// Root-free evaluation of the linear statistic by the Poincare-Lelong formula,
/// integral of log|s|_h psi dV plus integral of c_1 phi, on a fixed grid.
class PoincareLelong {
public:
  PoincareLelong(const BergmanBasis &basis, const TestForm &phi, const QuadratureGrid &grid);

  double operator()(const RandomSection &s) const;
  /// Integral of the curvature density against phi.
  double curvature_term() const { return curvature_term_; }

private:
  struct Node {
    cplx coordinate; // z when |z| <= 1, else w = 1/z
    bool second_chart;
    double weight_psi;  // quadrature weight times psi
    double log_weight;  // -phi_p in that chart
  };
  int p_;
  std::vector<Node> nodes_;
  double curvature_term_ = 0.0;
};

/// Grid level used by pl_statistic by default: max(10p + 32, 400).
int default_pl_level(int p);

double pl_statistic(const RandomSection &s, const TestForm &phi, const BergmanBasis &basis,
                    const QuadratureGrid &grid);

struct ExpectedStatistic {
  double total = 0.0;        // integral of phi against E[Z_s]
  double curvature = 0.0;    // integral of phi c_1(L_p, h_p)
  double kernel_part = 0.0;  // integral of phi dd^c log sqrt(K_p)
};

/// E<Z_s, phi> from the density (log sum |S_j|^2)_{z zbar} (1 + |z|^2)^2,
/// differentiated analytically through the basis.
ExpectedStatistic expected_statistic(const BergmanBasis &basis, const TestForm &phi,
                                     const QuadratureGrid &grid, int workers = 1);

/// Density of E[Z_s] with respect to dV at x.
double expected_zero_density(const BergmanBasis &basis, const ChartPoint &x);

} // namespace zerostat
