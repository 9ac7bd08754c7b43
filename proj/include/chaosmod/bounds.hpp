#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "chaosmod/channel.hpp"
#include "chaosmod/common.hpp"
#include "chaosmod/statistics.hpp"

namespace chaosmod {

/// Error cost rho(e) = |e|^p with p >= 1. For this family the exponent map
/// is linear: rho(e^{-n c}) = e^{-n p c}, i.e. zeta(c) = p c.
struct PowerCost {
  double exponent = 2.0;

  explicit PowerCost(double p = 2.0) : exponent(p) {
    if (!(p >= 1.0))
      throw validation_error("cost exponent must be >= 1, got " +
                             std::to_string(p));
  }
  double rho(double e) const { return std::pow(std::abs(e), exponent); }
  double zeta(double c) const { return exponent * c; }
};

/// Standard Gaussian upper-tail probability P{N(0,1) > x}, computed as
/// erfc(x/sqrt(2))/2. Relative accuracy is that of std::erfc, better than
/// 1e-14 on [0, 8].
inline double gauss_upper_tail(double x) {
  return 0.5 * std::erfc(x * 0.7071067811865475244);
}

/// Unique w >= 0 solving w - ln(1+w) = 2 alpha, by bracketed bisection with a
/// Newton polish. The residual |w - ln(1+w) - 2 alpha| is at most 1e-12.
inline double solve_w(double alpha) {
  if (!(alpha >= 0.0))
    throw validation_error("outage exponent alpha must be >= 0");
  if (alpha == 0.0) return 0.0;
  const auto g = [alpha](double w) { return w - std::log1p(w) - 2.0 * alpha; };
  double lo = 0.0;
  double hi = 1.0;
  while (g(hi) < 0.0) {
    hi *= 2.0;
    if (hi > 1e12)
      throw numerical_error("solve_w: failed to bracket the root");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-16 * (1.0 + hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  double w = 0.5 * (lo + hi);
  for (int i = 0; i < 3; ++i) {
    const double deriv = w / (1.0 + w);
    if (deriv > 0.0) w -= g(w) / deriv;
    if (w < 0.0) w = 0.0;
  }
  return w;
}

/// Shaping loss of a uniform channel-input marginal against the Gaussian
/// one: (1/2) ln(2 pi e / 12) ~ 0.1765 nats.
inline double shaping_loss() {
  constexpr double two_pi_e = 2.0 * 3.14159265358979323846 * 2.718281828459045235;
  return 0.5 * std::log(two_pi_e / 12.0);
}

inline double capacity(double gamma) {
  if (!(gamma > 0.0)) throw validation_error("SNR gamma must be positive");
  return 0.5 * std::log1p(gamma);
}

/// Rate term R(alpha, gamma) = (1/2) ln(gamma / (1 + w(alpha))).
inline double rate_bound(double alpha, double gamma) {
  if (!(gamma > 0.0)) throw validation_error("SNR gamma must be positive");
  return 0.5 * std::log(gamma / (1.0 + solve_w(alpha)));
}

/// Leading-order weak-noise exponent E(alpha, gamma) = zeta[R(alpha, gamma)].
inline double weak_noise_exponent(double alpha, double gamma,
                                  const PowerCost& cost) {
  return cost.zeta(rate_bound(alpha, gamma));
}

/// Largest admissible alphabet size: max { r >= 2 : r < e^{C - mu} }, or 1
/// when no r >= 2 qualifies (no admissible modulator of this class).
inline std::int64_t alphabet_limit(double gamma) {
  const double cap = std::exp(capacity(gamma) - shaping_loss());
  if (!(cap > 2.0)) return 1;
  if (cap > 9.0e18) return std::int64_t{1} << 62;
  const std::int64_t r = static_cast<std::int64_t>(std::ceil(cap)) - 1;
  return r >= 2 ? r : 1;
}

/// Mutual-information cap (1/2) ln(A / sigma^2) from the rational output
/// spectrum; equals the mean of (1/2) ln S_Y over frequency minus
/// (1/2) ln sigma^2.
inline double c1_bound(double p_bar, const ChannelConfig& cfg) {
  return 0.5 * std::log(spectrum_params(p_bar, cfg.Q, cfg.sigma2).A /
                        cfg.sigma2);
}

inline double c1_bound(const SystemSpec& spec, const ChannelConfig& cfg) {
  return c1_bound(moments(spec).p_bar, cfg);
}

/// Finite-n weak-noise floor for caller-supplied grid size M and locus
/// length L_n:
///   2 rho(1/(2M)) [ Phi_tail(L_n / (2 sigma M)) - e^{-alpha n} ],
/// clamped at zero since it bounds a probability-weighted cost.
inline double weak_noise_finite_n(const PowerCost& cost, double M, double L_n,
                                  double sigma, double alpha, long n) {
  if (!(M >= 1.0)) throw validation_error("grid size M must be >= 1");
  if (!(sigma > 0.0)) throw validation_error("sigma must be positive");
  if (!(alpha >= 0.0)) throw validation_error("alpha must be >= 0");
  if (n < 1) throw validation_error("n must be >= 1");
  const double v = 2.0 * cost.rho(0.5 / M) *
                   (gauss_upper_tail(L_n / (2.0 * sigma * M)) -
                    std::exp(-alpha * static_cast<double>(n)));
  return v > 0.0 ? v : 0.0;
}

/// All scalar bound quantities for one (alpha, gamma) pair; c1 is present
/// when a p_bar is supplied. Correction terms that vanish at high SNR are
/// set to zero, so R, E and ln_star_exponent are leading-order values.
struct BoundReport {
  double alpha = 0.0;
  double gamma = 0.0;
  double w = 0.0;
  double R = 0.0;
  double E = 0.0;
  double C = 0.0;
  double mu = 0.0;
  std::int64_t r_max = 1;
  double ln_star_exponent = 0.0;  // per-step exponent of the locus cap, R - mu
  std::optional<double> c1;
};

inline BoundReport bound_report(double alpha, double gamma,
                                const PowerCost& cost,
                                std::optional<double> p_bar = std::nullopt,
                                double sigma2 = 1.0) {
  BoundReport rep;
  rep.alpha = alpha;
  rep.gamma = gamma;
  rep.w = solve_w(alpha);
  rep.R = rate_bound(alpha, gamma);
  rep.E = cost.zeta(rep.R);
  rep.C = capacity(gamma);
  rep.mu = shaping_loss();
  rep.r_max = alphabet_limit(gamma);
  rep.ln_star_exponent = rep.R - rep.mu;
  if (p_bar)
    rep.c1 = c1_bound(*p_bar, ChannelConfig::from_snr(gamma * sigma2, gamma));
  return rep;
}

}  // namespace chaosmod
