#include "trunclap/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace trunclap::quad {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kPi = 3.14159265358979323846264338327950288;

// Gauss-Kronrod 7-15 nodes and weights (positive half; QUADPACK dqk15).
constexpr std::array<double, 8> kKronrodX = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kKronrodW = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss-7 weights attached to Kronrod nodes 1, 3, 5, 7.
constexpr std::array<double, 4> kGaussW = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct PanelEval {
  double value = 0.0;
  double error = 0.0;
};

template <typename F>
PanelEval gk15(const F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double kron = 0.0, gauss = 0.0;
  bool bad = false;
  for (int i = 0; i < 8; ++i) {
    const double dx = h * kKronrodX[i];
    double fv;
    if (i == 7) {
      fv = f(c);
      if (!std::isfinite(fv)) {
        bad = true;
        continue;
      }
      kron += kKronrodW[i] * fv;
      gauss += kGaussW[3] * fv;
    } else {
      const double f1 = f(c - dx);
      const double f2 = f(c + dx);
      fv = f1 + f2;
      if (!std::isfinite(fv)) {
        bad = true;
        continue;
      }
      kron += kKronrodW[i] * fv;
      if (i % 2 == 1) gauss += kGaussW[i / 2] * fv;
    }
  }
  PanelEval out;
  out.value = kron * h;
  if (bad) {
    out.error = std::abs(out.value) + 1.0;
    return out;
  }
  const double diff = std::abs(kron - gauss) * h;
  out.error = diff;
  if (diff > 0.0) {
    const double scale = std::abs(out.value) + diff;
    const double r = std::pow(200.0 * diff / scale, 1.5);
    if (r < 1.0) out.error = scale * r;
  }
  return out;
}

struct Panel {
  double a, b;
  double value, error;
};

struct PanelOrder {
  bool operator()(const Panel& x, const Panel& y) const {
    if (x.error != y.error) return x.error > y.error;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  }
};

struct PanelSum {
  double value = 0.0;
  double error = 0.0;
  int count = 0;
};

// Worst-first bisection over seeded panels, deterministic (ties broken by
// interval position, final sum in interval order, compensated).
template <typename F>
PanelSum adaptive_panels(const F& f, const std::vector<double>& seeds,
                         const std::function<double(double)>& target,
                         int max_panels) {
  PanelSum out;
  if (seeds.size() < 2) return out;
  std::multiset<Panel, PanelOrder> panels;
  double total_v = 0.0, total_e = 0.0;
  auto push = [&](double a, double b) {
    PanelEval pe = gk15(f, a, b);
    panels.insert(Panel{a, b, pe.value, pe.error});
    total_v += pe.value;
    total_e += pe.error;
  };
  for (size_t i = 0; i + 1 < seeds.size(); ++i) push(seeds[i], seeds[i + 1]);

  while (static_cast<int>(panels.size()) < max_panels) {
    if (total_e <= target(total_v)) break;
    auto it = panels.begin();
    if (it->error <= 0.0) break;
    if (it->b - it->a <= 1e-13 * (1.0 + std::abs(it->a))) break;
    Panel p = *it;
    panels.erase(it);
    total_v -= p.value;
    total_e -= p.error;
    const double m = 0.5 * (p.a + p.b);
    push(p.a, m);
    push(m, p.b);
  }

  std::vector<Panel> ordered(panels.begin(), panels.end());
  std::sort(ordered.begin(), ordered.end(),
            [](const Panel& x, const Panel& y) { return x.a < y.a; });
  double s = 0.0, comp = 0.0, err = 0.0;
  for (const Panel& p : ordered) {
    const double y = p.value - comp;
    const double t = s + y;
    comp = (t - s) - y;
    s = t;
    err += p.error;
  }
  out.value = s;
  out.error = err;
  out.count = static_cast<int>(ordered.size());
  return out;
}

std::array<double, 4> solve_poly(const std::array<double, 4>& q,
                                 const std::array<double, 4>& phi, int n) {
  std::array<std::array<double, 5>, 4> m{};
  for (int i = 0; i < n; ++i) {
    double p = 1.0;
    for (int j = 0; j < n; ++j) {
      m[i][j] = p;
      p *= q[i];
    }
    m[i][n] = phi[i];
  }
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    std::swap(m[col], m[piv]);
    for (int r = col + 1; r < n; ++r) {
      const double fac = m[r][col] / m[col][col];
      for (int j = col; j <= n; ++j) m[r][j] -= fac * m[col][j];
    }
  }
  std::array<double, 4> c{};
  for (int r = n - 1; r >= 0; --r) {
    double v = m[r][n];
    for (int j = r + 1; j < n; ++j) v -= m[r][j] * c[j];
    c[r] = v / m[r][r];
  }
  return c;
}

double tail_power_bound(const TailEnvelope& env, double alpha, double T) {
  if (env.coeff <= 0.0) return 0.0;
  const double cadj = env.coeff * std::pow(2.0, std::max(env.growth, 0.0));
  return cadj * std::pow(T, env.growth - alpha) / (alpha - env.growth);
}

struct OriginPiece {
  double value = 0.0;
  double error = 0.0;
  double delta = 0.0;
};

// Model of the (0, delta] region: exact coefficients when supplied, completed
// by measured higher orders; otherwise a Richardson fit of h/tau^2 at four
// geometric abscissae. The error combines a residual probe (truncation) with
// the rounding floor propagated through the fit.
OriginPiece origin_model_fixed(const WeightedIntegrand& hi, double alpha,
                               double delta, double noise) {
  OriginPiece out;
  out.delta = delta;
  std::array<double, 4> coef{};  // a2, a4, a6, a8
  auto model = [&](double t) {
    const double q = t * t;
    return (((coef[3] * q + coef[2]) * q + coef[1]) * q + coef[0]) * q;
  };

  double noise_term;
  if (hi.origin) {
    coef[0] = hi.origin->a2;
    coef[1] = hi.origin->a4;
    if (hi.origin->has_a6) {
      coef[2] = hi.origin->a6;
      const double x1 = 0.85 * delta;
      coef[3] = (hi.h(x1) - model(x1)) / std::pow(x1, 8);
      noise_term = 6.0 * noise * std::pow(delta, -alpha) / (8.0 - alpha);
    } else {
      const double x1 = 0.9 * delta, x2 = 0.6 * delta;
      const double r1 = hi.h(x1) - model(x1);
      const double r2 = hi.h(x2) - model(x2);
      const double q1 = x1 * x1, q2 = x2 * x2;
      const double q13 = q1 * q1 * q1, q23 = q2 * q2 * q2;
      const double det = q13 * q23 * (q2 - q1);
      coef[2] = (r1 * q23 * q2 - r2 * q13 * q1) / det;
      coef[3] = (r2 * q13 - r1 * q23) / det;
      noise_term = 80.0 * noise * std::pow(delta, -alpha) / (6.0 - alpha);
    }
  } else {
    std::array<double, 4> q{}, phi{};
    for (int j = 0; j < 4; ++j) {
      const double x = delta * std::pow(0.5, j);
      q[j] = x * x;
      phi[j] = hi.h(x) / (x * x);
    }
    coef = solve_poly(q, phi, 4);
    // Extrapolation-weight amplification of the per-sample noise/x^2 floor.
    noise_term = 6.0 * (noise / (q[3])) * std::pow(delta, 2.0 - alpha) /
                 (2.0 - alpha);
  }

  for (int m = 1; m <= 4; ++m) {
    const double p = 2.0 * m - alpha;
    out.value += coef[m - 1] * std::pow(delta, p) / p;
  }

  // Truncation probe at an abscissa not used by any fit above.
  const double xr = 0.71 * delta;
  const double resid = std::abs(hi.h(xr) - model(xr));
  const double signal = std::max(resid - noise, 0.0);
  const double q_next = 10.0;
  out.error = signal * std::pow(delta / xr, q_next) *
                  std::pow(delta, -alpha) / (q_next - alpha) +
              noise * std::pow(delta, -alpha) / (q_next - alpha) + noise_term;
  return out;
}

OriginPiece origin_model_piece(const WeightedIntegrand& hi, double alpha,
                               double delta0, double noise, double share) {
  OriginPiece best;
  best.error = std::numeric_limits<double>::infinity();
  double d = delta0;
  for (int i = 0; i < 9; ++i) {
    OriginPiece p = origin_model_fixed(hi, alpha, d, noise);
    if (p.error < best.error) best = p;
    if (best.error <= share) break;
    d *= 0.5;
  }
  return best;
}

double sample_h_scale(const WeightedIntegrand& hi, double delta, double T) {
  if (hi.h_scale > 0.0) return hi.h_scale;
  double m = 0.0;
  for (double t : {delta, 0.3, 1.5, std::min(8.0, 0.5 * T)})
    if (t > 0.0) m = std::max(m, std::abs(hi.h(t)));
  return std::max(m, 1e-12);
}

struct SingularZone {
  double lo, hi;          // excluded from the main panel region
  double value = 0.0;     // side-strip integrals (local evaluator path)
  double error = 0.0;     // strip panel error + keep-out mass
  int count = 0;
};

// Handles one declared singular point: with a local evaluator the two side
// strips are integrated in the distance coordinate down to a keep-out the
// declared exponent makes negligible; without one, the keep-out stops at the
// floating-point spacing of tau and its (honest) mass lands in the error.
SingularZone singular_zone(const WeightedIntegrand& hi, double alpha,
                           const InteriorSingularity& sp, double d0,
                           double share, int max_panels) {
  SingularZone z;
  const double p = sp.location;
  z.lo = p - d0;
  z.hi = p + d0;

  auto heval = [&](double d) {
    return sp.local ? sp.local(d) : hi.h(p + d);
  };

  // Measured strength |h| ~ c |d|^{-e}.
  double c = 0.0;
  for (double frac : {1e-2, 1e-3, 1e-4}) {
    const double d = frac * std::max(1.0, std::abs(p));
    if (d >= d0) continue;
    const double e = std::max(sp.exponent, 0.0);
    c = std::max(c, std::abs(heval(d)) * std::pow(d, e));
    c = std::max(c, std::abs(heval(-d)) * std::pow(d, e));
  }
  c = std::max(c, 1e-300);
  const double w = std::pow(p, -1.0 - alpha) * 1.25;  // kernel near p, padded

  double eps_cut;
  if (sp.exponent > 0.0) {
    const double one_me = 1.0 - sp.exponent;
    eps_cut = std::pow(share * one_me / (2.0 * c * w), 1.0 / one_me);
    eps_cut = std::min(eps_cut, 0.25 * d0);
    if (!sp.local)
      eps_cut = std::max(eps_cut, 8.0 * kEps * std::abs(p));
    eps_cut = std::max(eps_cut, 1e-240);
    z.error += 2.0 * c * w * std::pow(eps_cut, one_me) / one_me;
  } else {
    eps_cut = sp.local ? 1e-60 : std::max(1e-240, 8.0 * kEps * std::abs(p));
    const double near =
        std::abs(heval(2.0 * eps_cut)) + std::abs(heval(-2.0 * eps_cut));
    z.error += 2.0 * (near + 1e-300) * w * eps_cut * 8.0;
  }

  // Side strips in v = log|d|: int_eps^{d0} h(p +- d) kern(p +- d) dd.
  for (int side = -1; side <= 1; side += 2) {
    auto f_v = [&](double v) {
      const double d = std::exp(v);
      const double tau = p + side * d;
      return heval(side * d) * std::pow(tau, -1.0 - alpha) * d;
    };
    std::vector<double> seeds;
    const double vlo = std::log(eps_cut), vhi = std::log(d0);
    const int n0 = std::max(2, static_cast<int>((vhi - vlo) / 0.7));
    for (int j = 0; j <= n0; ++j)
      seeds.push_back(vlo + (vhi - vlo) * j / n0);
    auto tgt = [share](double) { return 0.45 * share; };
    PanelSum ps = adaptive_panels(f_v, seeds, tgt, max_panels);
    z.value += ps.value;
    z.error += ps.error;
    z.count += ps.count;
  }
  return z;
}

}  // namespace

const QuadratureResult& require_converged(const QuadratureResult& r,
                                          const char* what) {
  if (!r.converged)
    throw NonConvergent(std::string(what) +
                        ": quadrature failed to certify the tolerance");
  return r;
}

QuadratureResult integrate_second_difference(const WeightedIntegrand& hi,
                                             double alpha,
                                             const QuadratureConfig& cfg) {
  if (!(alpha > 0.0) || !(alpha < 2.0))
    throw std::domain_error("integrate_second_difference: alpha outside (0,2)");
  if (!hi.h) throw std::invalid_argument("integrate_second_difference: no h");
  if (hi.envelope.coeff > 0.0 && hi.envelope.growth >= alpha)
    throw DivergentTail(
        "integrate_second_difference: declared growth >= kernel exponent");
  for (const auto& sp : hi.singularities) {
    if (sp.exponent >= 1.0)
      throw DivergentSingularity(
          "integrate_second_difference: interior exponent >= 1");
    if (sp.location <= 0.0)
      throw std::invalid_argument("singular point must be positive");
  }

  QuadratureResult res;
  const double share = cfg.abs_tol / 8.0;

  // Origin-model radius, kept clear of any declared structure.
  double delta = cfg.near_zero_cut > 0.0 ? cfg.near_zero_cut : 1.0 / 16.0;
  for (const auto& sp : hi.singularities)
    delta = std::min(delta, 0.25 * sp.location);
  for (double b : hi.breakpoints)
    if (b > 0.0) delta = std::min(delta, 0.25 * b);

  // Truncation point from the envelope (or the caller's override).
  double last_structure = 2.0 * delta;
  for (const auto& sp : hi.singularities)
    last_structure = std::max(last_structure, sp.location);
  for (double b : hi.breakpoints) last_structure = std::max(last_structure, b);
  double T = std::max({2.0, hi.envelope.valid_from, 2.0 * last_structure,
                       8.0 * delta});
  if (hi.envelope.coeff > 0.0) {
    const double g = hi.envelope.growth;
    const double cadj = hi.envelope.coeff * std::pow(2.0, std::max(g, 0.0));
    T = std::max(T, std::pow(cadj / ((alpha - g) * share), 1.0 / (alpha - g)));
  }
  if (cfg.tail_cut > 0.0) T = cfg.tail_cut;
  T = std::max(T, 8.0 * delta);
  res.tail_bound = tail_power_bound(hi.envelope, alpha, std::max(T, 1.0));

  const double noise = 4.0 * kEps * sample_h_scale(hi, delta, T);

  const OriginPiece origin =
      origin_model_piece(hi, alpha, delta, noise, share);
  const double delta_used = origin.delta;

  // Singular zones with side strips / keep-outs.
  std::vector<SingularZone> zones;
  std::vector<InteriorSingularity> sorted_sing = hi.singularities;
  std::sort(sorted_sing.begin(), sorted_sing.end(),
            [](const auto& a, const auto& b) { return a.location < b.location; });
  double strips_value = 0.0, strips_error = 0.0;
  int strip_panels = 0;
  for (size_t i = 0; i < sorted_sing.size(); ++i) {
    const auto& sp = sorted_sing[i];
    if (sp.location <= delta_used || sp.location >= T) continue;
    double d0 = std::min(sp.location - delta_used, T - sp.location);
    if (i > 0) d0 = std::min(d0, 0.5 * (sp.location - sorted_sing[i - 1].location));
    if (i + 1 < sorted_sing.size())
      d0 = std::min(d0, 0.5 * (sorted_sing[i + 1].location - sp.location));
    for (double b : hi.breakpoints)
      if (b != sp.location)
        d0 = std::min(d0, 0.5 * std::abs(b - sp.location));
    d0 = std::max(d0, 32.0 * kEps * std::abs(sp.location));
    SingularZone z = singular_zone(hi, alpha, sp, d0, share,
                                   cfg.max_subdivisions / 4);
    strips_value += z.value;
    strips_error += z.error;
    strip_panels += z.count;
    zones.push_back(z);
  }

  // Main region seeds in u = log tau, skipping the singular zones.
  std::vector<double> edges{delta_used, T};
  for (double b : hi.breakpoints)
    if (b > delta_used && b < T) edges.push_back(b);
  for (const auto& z : zones) {
    edges.push_back(std::max(z.lo, delta_used));
    edges.push_back(std::min(z.hi, T));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  auto inside_zone = [&](double a, double b) {
    for (const auto& z : zones)
      if (a >= z.lo - 1e-300 && b <= z.hi + 1e-300) return true;
    return false;
  };

  std::vector<double> useeds;
  for (size_t i = 0; i + 1 < edges.size(); ++i) {
    const double a = edges[i], b = edges[i + 1];
    if (inside_zone(a, b)) continue;
    const double ua = std::log(a), ub = std::log(b);
    useeds.push_back(ua);
    const int extra = static_cast<int>((ub - ua) / 0.7);
    for (int j = 1; j <= extra; ++j)
      useeds.push_back(ua + (ub - ua) * j / (extra + 1));
    useeds.push_back(ub);
  }
  std::sort(useeds.begin(), useeds.end());
  useeds.erase(std::unique(useeds.begin(), useeds.end()), useeds.end());

  auto f_u = [&](double u) {
    const double t = std::exp(u);
    return hi.h(t) * std::exp(-alpha * u);
  };
  const double noise_region = noise * std::pow(delta_used, -alpha) / alpha;

  const double fixed_err =
      origin.error + strips_error + noise_region + res.tail_bound;
  const double base_value = origin.value + strips_value;
  auto target = [&](double running) {
    const double v = std::abs(base_value + running);
    const double budget = std::max(cfg.abs_tol, cfg.rel_tol * v);
    return std::max(0.2 * budget, budget - fixed_err);
  };
  PanelSum ps = adaptive_panels(f_u, useeds, target, cfg.max_subdivisions);

  res.value = base_value + ps.value;
  res.error_estimate = origin.error + strips_error + noise_region + ps.error;
  res.subdivisions_used = ps.count + strip_panels;
  const double tol = std::max(cfg.abs_tol, cfg.rel_tol * std::abs(res.value));
  res.converged = res.error_estimate + res.tail_bound <= tol;
  return res;
}

QuadratureResult integrate_second_difference(const WeightedIntegrand& h,
                                             FractionalOrder s,
                                             const QuadratureConfig& cfg) {
  return integrate_second_difference(h, s.kernel_alpha(), cfg);
}

QuadratureResult integrate_plain(
    const std::function<double(double)>& f, double a, double b,
    const std::vector<InteriorSingularity>& singular,
    const QuadratureConfig& cfg) {
  if (!(b > a)) throw std::invalid_argument("integrate_plain: b <= a");
  for (const auto& sp : singular)
    if (sp.exponent >= 1.0)
      throw DivergentSingularity("integrate_plain: exponent >= 1");

  QuadratureResult res;
  const double span = b - a;
  const double share = cfg.abs_tol / 8.0;
  double keepout = 0.0;
  double lo = a, hi_ = b;
  std::vector<double> splits;
  std::vector<const InteriorSingularity*> interior;

  for (const auto& sp : singular) {
    const bool at_lo = std::abs(sp.location - a) <= 1e-12 * span;
    const bool at_hi = std::abs(sp.location - b) <= 1e-12 * span;
    if (!at_lo && !at_hi) {
      if (sp.location > a && sp.location < b) interior.push_back(&sp);
      continue;
    }
    const double sgn = at_lo ? 1.0 : -1.0;
    auto feval = [&](double d) {
      return sp.local ? sp.local(sgn * d) : f(sp.location + sgn * d);
    };
    double c = 0.0;
    for (double frac : {1e-2, 1e-3, 1e-4})
      c = std::max(c, std::abs(feval(frac * span)) *
                          std::pow(frac * span, std::max(sp.exponent, 0.0)));
    c = std::max(c, 1e-300);
    double eps_cut;
    if (sp.exponent > 0.0) {
      const double one_me = 1.0 - sp.exponent;
      eps_cut = std::pow(share * one_me / c, 1.0 / one_me);
      eps_cut = std::min(eps_cut, 1e-3 * span);
      if (!sp.local)
        eps_cut = std::max(eps_cut, 8.0 * kEps * (std::abs(sp.location) + span));
      eps_cut = std::max(eps_cut, 1e-240);
      keepout += c * std::pow(eps_cut, one_me) / one_me;
    } else {
      eps_cut = std::max(1e-240, 1e-13 * span);
      keepout += (std::abs(feval(2.0 * eps_cut)) + 1e-300) * eps_cut * 8.0;
    }
    if (at_lo)
      lo = a + eps_cut;
    else
      hi_ = b - eps_cut;
    double d = eps_cut;
    while (d < 0.25 * span) {
      splits.push_back(at_lo ? a + d : b - d);
      d *= 2.0;
    }
  }

  // Interior singular points: geometric ladders with an ulp-level keep-out
  // (local evaluators are only wired up for the endpoint case, which is the
  // one the angular reductions produce).
  std::vector<std::pair<double, double>> gaps;
  for (const auto* spp : interior) {
    const auto& sp = *spp;
    double dist = std::min(sp.location - lo, hi_ - sp.location);
    for (const auto* o : interior)
      if (o != spp)
        dist = std::min(dist, std::abs(o->location - sp.location));
    const double d0 = 0.5 * dist;
    double c = 0.0;
    for (double frac : {1e-2, 1e-3})
      c = std::max(
          {c,
           std::abs(f(sp.location + frac * d0)) *
               std::pow(frac * d0, std::max(sp.exponent, 0.0)),
           std::abs(f(sp.location - frac * d0)) *
               std::pow(frac * d0, std::max(sp.exponent, 0.0))});
    c = std::max(c, 1e-300);
    double eps_cut;
    if (sp.exponent > 0.0) {
      const double one_me = 1.0 - sp.exponent;
      eps_cut = std::pow(share * one_me / (2.0 * c), 1.0 / one_me);
      eps_cut = std::min(eps_cut, 0.25 * d0);
      eps_cut =
          std::max({eps_cut, 8.0 * kEps * std::abs(sp.location), 1e-240});
      keepout += 2.0 * c * std::pow(eps_cut, one_me) / one_me;
    } else {
      eps_cut = std::max(1e-240, 8.0 * kEps * (std::abs(sp.location) + span));
      keepout += (std::abs(f(sp.location + 2 * eps_cut)) +
                  std::abs(f(sp.location - 2 * eps_cut)) + 1e-300) *
                 eps_cut * 8.0;
    }
    gaps.emplace_back(sp.location - eps_cut, sp.location + eps_cut);
    for (int side = -1; side <= 1; side += 2) {
      double d = eps_cut;
      while (d < d0) {
        splits.push_back(sp.location + side * d);
        d *= 2.0;
      }
      splits.push_back(sp.location + side * d0);
    }
  }

  std::vector<double> seeds{lo, hi_};
  for (double x : splits)
    if (x > lo && x < hi_) seeds.push_back(x);
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
  // Fill wide gaps.
  std::vector<double> filled;
  for (size_t i = 0; i + 1 < seeds.size(); ++i) {
    filled.push_back(seeds[i]);
    const double w = seeds[i + 1] - seeds[i];
    const int extra = static_cast<int>(w / (0.25 * (hi_ - lo)));
    for (int j = 1; j <= extra; ++j)
      filled.push_back(seeds[i] + w * j / (extra + 1));
  }
  filled.push_back(seeds.back());

  auto in_gap = [&](double x, double y) {
    for (const auto& g : gaps)
      if (x >= g.first - 1e-300 && y <= g.second + 1e-300) return true;
    return false;
  };
  // adaptive_panels integrates contiguous spans; rebuild skipping gaps.
  double fixed = keepout;
  double value = 0.0, error = 0.0;
  int count = 0;
  std::vector<double> segment;
  auto flush = [&]() {
    if (segment.size() >= 2) {
      auto target = [&](double running) {
        const double budget =
            std::max(cfg.abs_tol, cfg.rel_tol * std::abs(value + running));
        return std::max(0.2 * budget, budget - fixed - error);
      };
      PanelSum ps = adaptive_panels(f, segment, target,
                                    cfg.max_subdivisions - count);
      value += ps.value;
      error += ps.error;
      count += ps.count;
    }
    segment.clear();
  };
  for (size_t i = 0; i < filled.size(); ++i) {
    segment.push_back(filled[i]);
    if (i + 1 < filled.size() && in_gap(filled[i], filled[i + 1])) flush();
  }
  flush();

  res.value = value;
  res.error_estimate = error + fixed;
  res.subdivisions_used = count;
  res.converged = res.error_estimate <=
                  std::max(cfg.abs_tol, cfg.rel_tol * std::abs(res.value));
  return res;
}

QuadratureResult integrate_angular(const AngularIntegrand& ai,
                                   FractionalOrder s, int k,
                                   const QuadratureConfig& cfg) {
  if (k < 2) throw std::domain_error("integrate_angular: k < 2");
  if (!ai.h2) throw std::invalid_argument("integrate_angular: no h2");
  const double alpha = s.kernel_alpha();

  double delta_outer = cfg.near_zero_cut > 0.0 ? cfg.near_zero_cut : 1.0 / 16.0;
  for (const auto& sp : ai.rho_singularities)
    delta_outer = std::min(delta_outer, 0.25 * sp.location);
  // Budget for accumulated inner-quadrature errors across the outer range.
  const double inner_base =
      cfg.abs_tol * 0.05 * alpha * std::pow(delta_outer, alpha);

  const double net_exp = ai.theta_origin_exponent - (k - 2);

  std::function<double(double)> inner = [&, alpha, k](double rho) -> double {
    QuadratureConfig icfg;
    const double sc = rho / delta_outer;
    icfg.abs_tol = std::max(inner_base * std::min(1.0, sc * sc), 1e-300);
    icfg.rel_tol = 0.1 * cfg.rel_tol;
    icfg.max_subdivisions = 800;
    const double hi_theta = ai.fold_theta ? 0.5 * kPi : kPi;
    auto g = [&](double th) {
      return ai.h2(rho, th) * std::pow(std::sin(th), k - 2);
    };
    std::vector<InteriorSingularity> sing;
    if (ai.fold_theta)
      sing.push_back({0.0, std::max(net_exp, 0.0)});
    else
      sing.push_back({kPi, std::max(net_exp, 0.0)});
    return integrate_plain(g, 0.0, hi_theta, sing, icfg).value;
  };

  const double bk =
      std::sqrt(kPi) * gamma_fn(0.5 * (k - 1)) / gamma_fn(0.5 * k);
  WeightedIntegrand outer;
  outer.h = inner;
  outer.envelope = TailEnvelope{ai.rho_envelope.coeff * bk,
                                ai.rho_envelope.growth,
                                ai.rho_envelope.valid_from};
  outer.singularities = ai.rho_singularities;
  outer.h_scale = ai.h_scale > 0.0 ? ai.h_scale * bk : 0.0;

  QuadratureConfig ocfg = cfg;
  ocfg.abs_tol = 0.8 * cfg.abs_tol;
  ocfg.near_zero_cut = delta_outer;
  QuadratureResult res = integrate_second_difference(outer, alpha, ocfg);
  res.error_estimate += 0.1 * cfg.abs_tol;
  res.converged = res.error_estimate + res.tail_bound <=
                  std::max(cfg.abs_tol, cfg.rel_tol * std::abs(res.value));
  return res;
}

}  // namespace trunclap::quad
