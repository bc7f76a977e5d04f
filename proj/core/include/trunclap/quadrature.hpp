#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "trunclap/errors.hpp"
#include "trunclap/special.hpp"

namespace trunclap::quad {

struct QuadratureConfig {
  double abs_tol = 1e-10;
  double rel_tol = 1e-9;
  int max_subdivisions = 8000;
  /// Truncation point T of the semi-infinite range. 0 derives T from the
  /// integrand's declared tail envelope so the remainder stays below
  /// abs_tol/6; a positive value forces that T (the tail bound is still
  /// computed and reported).
  double tail_cut = 0.0;
  /// Radius delta of the origin region handled by the Taylor model. 0 picks
  /// it automatically (1/16, shrunk below any declared structure).
  double near_zero_cut = 0.0;

  QuadratureConfig tightened(double factor) const {
    QuadratureConfig c = *this;
    c.abs_tol *= factor;
    c.rel_tol *= factor;
    return c;
  }
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;  // excludes the tail bound, reported separately
  int subdivisions_used = 0;
  double tail_bound = 0.0;
  bool converged = false;
};

/// Throws NonConvergent unless r.converged.
const QuadratureResult& require_converged(const QuadratureResult& r,
                                          const char* what);

/// Declared bound |h(tau)| <= coeff * tau^growth for tau >= valid_from.
/// growth must stay below the kernel exponent alpha or the integral diverges.
struct TailEnvelope {
  double coeff = 0.0;
  double growth = 0.0;
  double valid_from = 1.0;

  static TailEnvelope bounded(double m, double from = 1.0) {
    return {m, 0.0, from};
  }
  static TailEnvelope power(double c, double p, double from = 1.0) {
    return {c, p, from};
  }
};

/// Interior point where |h| ~ c |tau - location|^{-exponent}. exponent < 1 is
/// required (integrable); exponent <= 0 marks a kink or logarithmic point that
/// only needs panel grading, not a blow-up bound.
///
/// `local`, when set, evaluates h(location + d) as a function of the signed
/// distance d. Near the singularity |tau - location| cannot be resolved below
/// one ulp of tau, while the distance coordinate can go arbitrarily small;
/// supplying `local` lets the integrator walk geometric panels down to
/// d ~ 1e-240 and certify essentially the whole singular mass.
struct InteriorSingularity {
  double location = 0.0;
  double exponent = 0.0;
  std::function<double(double)> local{};
};

/// Exact leading Taylor data of the (even) integrand at the origin:
/// h(tau) = a2 tau^2 + a4 tau^4 [+ a6 tau^6] + O(next even order).
struct OriginModel {
  double a2 = 0.0;
  double a4 = 0.0;
  double a6 = 0.0;
  bool has_a6 = false;
};

/// Integrand of integrate_second_difference. h must extend evenly through 0
/// (a smooth function of tau^2 near the origin) and vanish at least
/// quadratically there; that is exactly the structure of the symmetrized
/// second differences, which is why no principal value ever appears.
struct WeightedIntegrand {
  std::function<double(double)> h;
  TailEnvelope envelope;
  std::vector<InteriorSingularity> singularities{};
  std::vector<double> breakpoints{};
  std::optional<OriginModel> origin{};
  /// Absolute rounding scale of one h evaluation (typically a few ulps of the
  /// terms being differenced, e.g. 4|g(r)|). 0 = estimate from samples.
  double h_scale = 0.0;
};

/// Computes \int_0^\infty h(tau) tau^{-(1+alpha)} dtau with a certified error
/// estimate, alpha in (0, 2).
///
/// The range splits into three regimes:
///  - (0, delta]: integrated analytically from the origin Taylor model
///    (supplied, or recovered by Richardson extrapolation of h/tau^2), with a
///    measured next-order correction. This is what keeps the result accurate
///    as alpha -> 2, where the kernel concentrates all its mass at 0 and the
///    floating-point second difference drowns in cancellation.
///  - [delta, T]: adaptive Gauss-Kronrod 7-15 panels in log space, with
///    geometric ladders toward each declared singular point and a bounded
///    keep-out interval around it.
///  - (T, infty): bounded analytically from the declared tail envelope.
QuadratureResult integrate_second_difference(const WeightedIntegrand& h,
                                             double kernel_alpha,
                                             const QuadratureConfig& cfg = {});
QuadratureResult integrate_second_difference(const WeightedIntegrand& h,
                                             FractionalOrder s,
                                             const QuadratureConfig& cfg = {});

/// Adaptive GK 7-15 on a finite interval; singular points (interior or at the
/// endpoints) get geometric grading plus a measured keep-out bound.
QuadratureResult integrate_plain(
    const std::function<double(double)>& f, double a, double b,
    const std::vector<InteriorSingularity>& singular = {},
    const QuadratureConfig& cfg = {});

/// Radial-angular integrand for the k-plane reduction. The sin^{k-2} weight
/// and the rho^{-(1+2s)} kernel are applied by the integrator.
///
/// fold_theta = true: h2(rho, theta) is the already-folded pair
/// F(theta) + F(pi - theta) on (0, pi/2]. Folding in the caller keeps the
/// pairing numerically stable (the two chord lengths can be formed without
/// cancellation) and puts the integrand in second-difference form in rho.
/// fold_theta = false: h2 is integrated over (0, pi) as is; any odd-in-rho
/// part cancels only through the angular quadrature itself.
struct AngularIntegrand {
  std::function<double(double, double)> h2;
  bool fold_theta = true;
  TailEnvelope rho_envelope;
  std::vector<InteriorSingularity> rho_singularities{};
  /// Exponent of h2 at the singular theta endpoint (theta->0 folded,
  /// theta->pi unfolded) at the worst rho; the sin^{k-2} weight is accounted
  /// for internally.
  double theta_origin_exponent = 0.0;
  double h_scale = 0.0;
};

/// \int_0^\infty \int_0^\pi h2(rho,theta) sin^{k-2}(theta) dtheta
///     rho^{-(1+2s)} drho, k >= 2, via tensorized adaptive panels.
QuadratureResult integrate_angular(const AngularIntegrand& h2,
                                   FractionalOrder s, int k,
                                   const QuadratureConfig& cfg = {});

}  // namespace trunclap::quad
