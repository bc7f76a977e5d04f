#pragma once

#include <stdexcept>

namespace trunclap {

/// Gamma function for real x away from the poles (x != 0, -1, -2, ...).
/// Lanczos approximation (g = 7, 9 terms), arguments shifted into [1, 2] by
/// the recurrence, so the relative error stays below ~1e-14 on the ranges the
/// normalization constants need.
double gamma_fn(double x);

/// Surface measure |S^dim| of the unit sphere in R^{dim+1} (dim >= 0).
double sphere_measure(int dim);

/// Fractional order s restricted to (1/2, 1).
class FractionalOrder {
 public:
  explicit FractionalOrder(double s);
  double value() const { return s_; }
  /// Exponent alpha = 2s of the kernel tau^{-(1+alpha)}.
  double kernel_alpha() const { return 2.0 * s_; }

 private:
  double s_;
};

/// Normalization constants of the directional and k-plane operators:
/// C(k,s) = 4^s Gamma(k/2+s) / (pi^{k/2} |Gamma(-s)|), with C_s = C(1,s).
/// This is the standard fractional-Laplacian constant; it satisfies
/// C_s/(2(1-s)) -> 1 and C_{k,s}|S^{k-1}|/(4k(1-s)) -> 1 as s -> 1^-.
class NormalizationConstants {
 public:
  static NormalizationConstants standard(FractionalOrder s);

  double c1() const { return c1_; }
  double ck(int k) const;
  double s() const { return s_; }

 private:
  explicit NormalizationConstants(double s) : s_(s), c1_(0) {}
  double s_;
  double c1_;
};

}  // namespace trunclap
