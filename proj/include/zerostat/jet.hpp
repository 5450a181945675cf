#pragma once

#include <array>
#include <cmath>

namespace zerostat {

/// Truncated bivariate Taylor polynomial of total degree <= 3.
///
/// Forward-mode differentiation in the real chart coordinates (x, y): seed
/// the variables with Jet3::variable() and every partial derivative up to
/// order three falls out of ordinary arithmetic.
class Jet3 {
public:
  static constexpr int kTerms = 10;

  Jet3() = default;
  explicit Jet3(double constant) { c_[0] = constant; }

  /// x0 + dx (axis = 0) or y0 + dy (axis = 1).
  static Jet3 variable(double value, int axis) {
    Jet3 j(value);
    j.c_[axis == 0 ? 1 : 2] = 1.0;
    return j;
  }

  double value() const { return c_[0]; }

  /// Partial derivative d^(a+b) / dx^a dy^b, a + b <= 3.
  double derivative(int a, int b) const {
    return c_[index(a, b)] * factorial(a) * factorial(b);
  }

  Jet3 &operator+=(const Jet3 &o) {
    for (int i = 0; i < kTerms; ++i) c_[i] += o.c_[i];
    return *this;
  }
  Jet3 &operator-=(const Jet3 &o) {
    for (int i = 0; i < kTerms; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Jet3 &operator*=(double s) {
    for (auto &v : c_) v *= s;
    return *this;
  }

  friend Jet3 operator+(Jet3 a, const Jet3 &b) { return a += b; }
  friend Jet3 operator-(Jet3 a, const Jet3 &b) { return a -= b; }
  friend Jet3 operator-(Jet3 a) { return a *= -1.0; }
  friend Jet3 operator*(Jet3 a, double s) { return a *= s; }
  friend Jet3 operator*(double s, Jet3 a) { return a *= s; }
  friend Jet3 operator+(Jet3 a, double s) {
    a.c_[0] += s;
    return a;
  }
  friend Jet3 operator+(double s, Jet3 a) { return a + s; }
  friend Jet3 operator-(Jet3 a, double s) { return a + (-s); }
  friend Jet3 operator-(double s, const Jet3 &a) { return (-a) + s; }

  friend Jet3 operator*(const Jet3 &a, const Jet3 &b) {
    Jet3 r;
    for (int i = 0; i < kTerms; ++i) {
      if (a.c_[i] == 0.0) continue;
      for (int j = 0; j < kTerms; ++j) {
        const int da = kPowers[i][0] + kPowers[j][0];
        const int db = kPowers[i][1] + kPowers[j][1];
        if (da + db > 3) continue;
        r.c_[index(da, db)] += a.c_[i] * b.c_[j];
      }
    }
    return r;
  }

  friend Jet3 operator/(const Jet3 &a, const Jet3 &b) { return a * reciprocal(b); }

  friend Jet3 reciprocal(const Jet3 &f) {
    const double f0 = f.c_[0];
    Jet3 g = f;
    g.c_[0] = 0.0;
    g *= -1.0 / f0;
    // 1/f = (1/f0) * (1 + g + g^2 + g^3) with g = -(f - f0)/f0
    Jet3 g2 = g * g;
    Jet3 sum = Jet3(1.0) + g + g2 + g2 * g;
    return sum * (1.0 / f0);
  }

  friend Jet3 log(const Jet3 &f) {
    const double f0 = f.c_[0];
    Jet3 g = f;
    g.c_[0] = 0.0;
    g *= 1.0 / f0;
    Jet3 g2 = g * g;
    Jet3 r = g - g2 * 0.5 + g2 * g * (1.0 / 3.0);
    r.c_[0] = std::log(f0);
    return r;
  }

private:
  static constexpr int kPowers[kTerms][2] = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1},
                                             {0, 2}, {3, 0}, {2, 1}, {1, 2}, {0, 3}};
  static constexpr int index(int a, int b) {
    const int deg = a + b;
    const int offset = deg == 0 ? 0 : deg == 1 ? 1 : deg == 2 ? 3 : 6;
    return offset + b;
  }
  static constexpr double factorial(int n) { return n <= 1 ? 1.0 : n == 2 ? 2.0 : 6.0; }

  std::array<double, kTerms> c_{};
};

} // namespace zerostat
