#include "zerostat/harmonic.hpp"

#include <cmath>
#include <stdexcept>

namespace zerostat {

bool HarmonicPolynomial::is_constant() const {
  for (int i = 0; i < 3; ++i) {
    if (linear[i] != 0.0) return false;
    for (int j = 0; j < 3; ++j)
      if (quadratic[i][j] != 0.0) return false;
  }
  return true;
}

void HarmonicPolynomial::validate() const {
  double trace = 0.0;
  for (int i = 0; i < 3; ++i) {
    trace += quadratic[i][i];
    for (int j = 0; j < 3; ++j)
      if (std::abs(quadratic[i][j] - quadratic[j][i]) > 1e-15)
        throw std::invalid_argument("harmonic quadratic part must be symmetric");
  }
  if (std::abs(trace) > 1e-14)
    throw std::invalid_argument("harmonic quadratic part must be traceless");
}

HarmonicPolynomial zonal_p2(double scale) {
  HarmonicPolynomial h;
  h.quadratic[0][0] = -0.5 * scale;
  h.quadratic[1][1] = -0.5 * scale;
  h.quadratic[2][2] = scale;
  return h;
}

} // namespace zerostat
