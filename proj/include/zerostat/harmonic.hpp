#pragma once

#include <array>
#include <string>

namespace zerostat {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

/// Real spherical-harmonic combination of degree <= 2 on the unit sphere,
/// written as g(n) = constant + linear . n + n^T quadratic n with a
/// symmetric traceless `quadratic` (the degree-2 harmonics).
struct HarmonicPolynomial {
  double constant = 0.0;
  Vec3 linear{};
  Mat3 quadratic{};

  template <class T> T eval(const T &nx, const T &ny, const T &nz) const {
    const T n[3] = {nx, ny, nz};
    T r = T(constant);
    for (int i = 0; i < 3; ++i) {
      if (linear[i] != 0.0) r += n[i] * linear[i];
      for (int j = 0; j < 3; ++j)
        if (quadratic[i][j] != 0.0) r += (n[i] * n[j]) * quadratic[i][j];
    }
    return r;
  }

  double operator()(const Vec3 &n) const { return eval(n[0], n[1], n[2]); }

  /// Laplace-Beltrami operator of the unit round sphere: degree-l parts are
  /// scaled by -l(l+1).
  double laplacian(const Vec3 &n) const {
    double lin = 0.0, quad = 0.0;
    for (int i = 0; i < 3; ++i) {
      lin += linear[i] * n[i];
      for (int j = 0; j < 3; ++j) quad += quadratic[i][j] * n[i] * n[j];
    }
    return -2.0 * lin - 6.0 * quad;
  }

  bool is_constant() const;
  /// Throws std::invalid_argument unless `quadratic` is symmetric and traceless.
  void validate() const;
};

/// (3 n_z^2 - 1) / 2 as a traceless quadratic form.
HarmonicPolynomial zonal_p2(double scale);

} // namespace zerostat
