#include "trunclap/special.hpp"

#include <cmath>
#include <limits>

namespace trunclap {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

// Lanczos g = 7 coefficients (Godfrey's set).
constexpr double kLanczos[9] = {
    0.99999999999980993,      676.5203681218851,     -1259.1392167224028,
    771.32342877765313,       -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,     9.9843695780195716e-6, 1.5056327351493116e-7};

// Valid for x in [1, 2]; callers shift into this range.
double lanczos_core(double x) {
  double a = kLanczos[0];
  for (int i = 1; i < 9; ++i) a += kLanczos[i] / (x - 1.0 + i);
  const double t = x + 6.5;
  return std::sqrt(2.0 * kPi) * std::pow(t, x - 0.5) * std::exp(-t) * a;
}

}  // namespace

double gamma_fn(double x) {
  if (x <= 0.0 && x == std::floor(x))
    throw std::domain_error("gamma_fn: pole at nonpositive integer");
  // Shift into [1, 2]: Gamma(x) = Gamma(x+1)/x downward, (x-1)Gamma(x-1) upward.
  double scale = 1.0;
  while (x < 1.0) {
    scale /= x;
    x += 1.0;
  }
  while (x > 2.0) {
    x -= 1.0;
    scale *= x;
  }
  return scale * lanczos_core(x);
}

double sphere_measure(int dim) {
  if (dim < 0) throw std::domain_error("sphere_measure: dim < 0");
  // |S^d| = 2 pi^{(d+1)/2} / Gamma((d+1)/2)
  const double half = 0.5 * (dim + 1);
  return 2.0 * std::pow(kPi, half) / gamma_fn(half);
}

FractionalOrder::FractionalOrder(double s) : s_(s) {
  if (!(s > 0.5) || !(s < 1.0))
    throw std::domain_error("FractionalOrder: s must lie in (1/2, 1)");
}

NormalizationConstants NormalizationConstants::standard(FractionalOrder s) {
  NormalizationConstants c(s.value());
  c.c1_ = c.ck(1);
  return c;
}

double NormalizationConstants::ck(int k) const {
  if (k < 1) throw std::domain_error("NormalizationConstants::ck: k < 1");
  // |Gamma(-s)| = Gamma(2-s) / (s (1-s)) for s in (0,1).
  const double abs_gamma_minus_s = gamma_fn(2.0 - s_) / (s_ * (1.0 - s_));
  return std::pow(4.0, s_) * gamma_fn(0.5 * k + s_) /
         (std::pow(kPi, 0.5 * k) * abs_gamma_minus_s);
}

}  // namespace trunclap
