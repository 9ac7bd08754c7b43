#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "chaosmod/common.hpp"
#include "chaosmod/rng.hpp"
#include "chaosmod/system.hpp"

namespace chaosmod {

/// Moments of the probability vector used by the closed-form statistics:
///   p_bar  = sum p^2(x)        p2_bar = sum p^3(x)
///   F_bar  = sum p(x) F(x)     F2_bar = sum p(x) F^2(x)
///   pF_bar = sum p^2(x) F(x)
struct Moments {
  double p_bar = 0.0;
  double p2_bar = 0.0;
  double F_bar = 0.0;
  double F2_bar = 0.0;
  double pF_bar = 0.0;
};

inline Moments moments(const SystemSpec& spec) {
  Moments m;
  for (int x = 0; x < spec.alphabet(); ++x) {
    const double p = spec.p(x);
    const double F = spec.F(x);
    m.p_bar += p * p;
    m.p2_bar += p * p * p;
    m.F_bar += p * F;
    m.F2_bar += p * F * F;
    m.pF_bar += p * p * F;
  }
  return m;
}

/// Lyapunov exponent of the map in nats per step. Every branch has slope
/// 1/p(x) and the labels are i.i.d. with marginal p under a uniform initial
/// state, so the exponent equals the label entropy H = -sum p(x) ln p(x).
inline double lyapunov_exact(const SystemSpec& spec) {
  detail::KahanSum h;
  for (int x = 0; x < spec.alphabet(); ++x)
    h.add(-spec.p(x) * std::log(spec.p(x)));
  return h.value();
}

/// Trajectory estimate (1/n) sum_t ln(1/p(x_t)) of the Lyapunov exponent.
inline double lyapunov_empirical(const SystemSpec& spec, double s0, long n) {
  if (n < 1) throw validation_error("lyapunov_empirical: n must be >= 1");
  if (!(s0 >= 0.0 && s0 <= 1.0))
    throw validation_error("initial state outside [0,1]");
  detail::KahanSum acc;
  double s = s0;
  for (long t = 0; t < n; ++t) {
    const int x = spec.cell_of(s);
    acc.add(std::log(1.0 / spec.p(x)));
    s = detail::step_state(s, spec.F(x), spec.p(x));
  }
  return acc.value() / static_cast<double>(n);
}

/// E{S_0 S_k} for a uniform initial state: 1/4 + p_bar^k / 12.
inline double autocorr_state_exact(const SystemSpec& spec, int k) {
  if (k < 0) throw validation_error("autocorrelation lag must be >= 0");
  return 0.25 + std::pow(moments(spec).p_bar, k) / 12.0;
}

/// E{U_0 U_k} for the power-Q channel input: Q * p_bar^|k|.
inline double autocorr_input_exact(const SystemSpec& spec, double Q, long k) {
  if (!(Q > 0.0)) throw validation_error("signal power Q must be positive");
  return Q * std::pow(moments(spec).p_bar, std::abs(k));
}

struct AutocorrConfig {
  long n = 64;           // trajectory length
  long trials = 10000;   // independent uniform initial states
  int k_max = 8;
  double Q = 1.0;
  std::uint64_t seed = 0;
};

/// Per-lag empirical autocorrelation, one time average per trial:
///   (1/(n-k)) sum_t s_t s_{t+k}   over t = 1..n-k   (and likewise u_t u_{t+k}),
/// with across-trial means and standard errors. Trials are sub-seeded with
/// derive_seed(seed, autocorr, trial), so the result is reproducible and the
/// trial loop could be partitioned without changing it.
struct AutocorrEstimate {
  int k = 0;
  double state_mean = 0.0;
  double state_stderr = 0.0;
  double input_mean = 0.0;
  double input_stderr = 0.0;
};

inline std::vector<AutocorrEstimate> autocorr_empirical(
    const SystemSpec& spec, const AutocorrConfig& cfg) {
  if (cfg.trials < 1) throw validation_error("autocorr: trials must be >= 1");
  if (cfg.k_max < 0) throw validation_error("autocorr: k_max must be >= 0");
  if (cfg.n <= cfg.k_max)
    throw validation_error("autocorr: n must exceed k_max");
  if (!(cfg.Q > 0.0)) throw validation_error("signal power Q must be positive");

  const int lags = cfg.k_max + 1;
  // Welford accumulators across trials, per lag.
  std::vector<double> s_mean(lags, 0.0), s_m2(lags, 0.0);
  std::vector<double> u_mean(lags, 0.0), u_m2(lags, 0.0);
  const double amp = std::sqrt(12.0 * cfg.Q);

  std::vector<double> states(static_cast<std::size_t>(cfg.n) + 1);
  for (long trial = 0; trial < cfg.trials; ++trial) {
    Rng rng(derive_seed(cfg.seed, SeedTag::autocorr,
                        static_cast<std::uint64_t>(trial)));
    double s = rng.uniform01();
    states[0] = s;
    for (long t = 0; t < cfg.n; ++t) {
      const int x = spec.cell_of(s);
      s = detail::step_state(s, spec.F(x), spec.p(x));
      states[t + 1] = s;
    }
    for (int k = 0; k < lags; ++k) {
      detail::KahanSum ss, uu;
      const long count = cfg.n - k;
      for (long t = 1; t + k <= cfg.n; ++t) {
        const double a = states[t];
        const double b = states[t + k];
        ss.add(a * b);
        uu.add((amp * (a - 0.5)) * (amp * (b - 0.5)));
      }
      const double vs = ss.value() / static_cast<double>(count);
      const double vu = uu.value() / static_cast<double>(count);
      const double n1 = static_cast<double>(trial + 1);
      double d = vs - s_mean[k];
      s_mean[k] += d / n1;
      s_m2[k] += d * (vs - s_mean[k]);
      d = vu - u_mean[k];
      u_mean[k] += d / n1;
      u_m2[k] += d * (vu - u_mean[k]);
    }
  }

  std::vector<AutocorrEstimate> out(lags);
  for (int k = 0; k < lags; ++k) {
    out[k].k = k;
    out[k].state_mean = s_mean[k];
    out[k].input_mean = u_mean[k];
    if (cfg.trials > 1) {
      const double trials = static_cast<double>(cfg.trials);
      out[k].state_stderr = std::sqrt(s_m2[k] / (trials - 1.0) / trials);
      out[k].input_stderr = std::sqrt(u_m2[k] / (trials - 1.0) / trials);
    }
  }
  return out;
}

/// Parameters of the rational channel-output spectrum
///   S_Y(e^{j t}) = Q (1 - p_bar^2) / |1 - p_bar e^{-jt}|^2 + sigma^2
///                = A |1 - tau e^{-jt}|^2 / |1 - p_bar e^{-jt}|^2.
/// A and tau are fixed by matching the two coefficients of the numerator:
///   A (1 + tau^2) = sigma^2 (1 + p_bar^2) + Q (1 - p_bar^2)
///   A tau         = sigma^2 p_bar,
/// taking for tau the quadratic root inside the unit interval.
struct SpectrumParams {
  double A = 0.0;
  double tau_pole = 0.0;
  double p_bar = 0.0;
  double Q = 0.0;
  double sigma2 = 0.0;
};

inline SpectrumParams spectrum_params(double p_bar, double Q, double sigma2) {
  if (!(Q > 0.0)) throw validation_error("signal power Q must be positive");
  if (!(sigma2 > 0.0))
    throw validation_error("noise variance sigma2 must be positive");
  if (!(p_bar >= 0.0 && p_bar < 1.0))
    throw validation_error("p_bar must lie in [0,1)");
  const double B = sigma2 * (1.0 + p_bar * p_bar) + Q * (1.0 - p_bar * p_bar);
  // Discriminant B^2 - 4 sigma^4 p_bar^2 >= 0 since B >= 2 sigma^2 p_bar.
  const double disc = B * B - 4.0 * sigma2 * sigma2 * p_bar * p_bar;
  const double root = std::sqrt(disc);
  SpectrumParams out;
  out.p_bar = p_bar;
  out.Q = Q;
  out.sigma2 = sigma2;
  out.A = 0.5 * (B + root);
  out.tau_pole = 2.0 * sigma2 * p_bar / (B + root);  // root inside the unit disk
  return out;
}

inline SpectrumParams spectrum_params(const SystemSpec& spec, double Q,
                                      double sigma2) {
  return spectrum_params(moments(spec).p_bar, Q, sigma2);
}

/// Output spectrum evaluated both ways. The two forms must agree to 1e-9
/// relative; a mismatch indicates a numerical inconsistency and throws.
struct SpectrumValue {
  double sum_form = 0.0;
  double factored_form = 0.0;
};

inline SpectrumValue output_spectrum(const SpectrumParams& sp, double theta) {
  constexpr double pi = 3.14159265358979323846;
  if (!(theta >= -pi && theta <= pi))
    throw validation_error("frequency must lie in [-pi, pi]");
  const auto mag2 = [&](double c) {
    return 1.0 - 2.0 * c * std::cos(theta) + c * c;
  };
  SpectrumValue v;
  v.sum_form =
      sp.Q * (1.0 - sp.p_bar * sp.p_bar) / mag2(sp.p_bar) + sp.sigma2;
  v.factored_form = sp.A * mag2(sp.tau_pole) / mag2(sp.p_bar);
  const double scale = std::max(std::abs(v.sum_form), std::abs(v.factored_form));
  if (std::abs(v.sum_form - v.factored_form) > 1e-9 * scale)
    throw numerical_error(
        "output spectrum: sum and factored forms disagree at theta = " +
        std::to_string(theta));
  return v;
}

/// Length of the curve traced in n-dimensional signal space by the channel
/// input as the initial state sweeps [0,1], with its P-independent bounds
///   sqrt(12 Q) r^n <= L_n <= sqrt(12 Q n) r^n.
struct LocusReport {
  double exact = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Exact locus length by full enumeration of the r^n continuity cells:
///   L_n = sqrt(12 Q) sum_cells prod_i p(x_i) sqrt(sum_i prod_{j<=i} p(x_j)^-2).
/// Enumeration order is fixed (lexicographic) and the outer sum is
/// compensated, so the result does not depend on work partitioning.
inline LocusReport locus_length(const SystemSpec& spec, double Q, int n,
                                std::uint64_t cell_budget = std::uint64_t{1}
                                                            << 24) {
  if (!(Q > 0.0)) throw validation_error("signal power Q must be positive");
  if (n < 1) throw validation_error("locus length: n must be >= 1");
  const int r = spec.alphabet();
  std::uint64_t cells = 1;
  for (int i = 0; i < n; ++i) {
    if (cells > cell_budget / static_cast<std::uint64_t>(r))
      throw resource_error("locus enumeration needs " + std::to_string(r) +
                           "^" + std::to_string(n) + " cells, budget is " +
                           std::to_string(cell_budget));
    cells *= static_cast<std::uint64_t>(r);
  }

  detail::KahanSum total;
  // DFS over label prefixes carrying (probability, slope^2 product, running
  // sum of squared slopes).
  struct Frame {
    double prob;
    double slope2;
    double sumsq;
  };
  std::vector<Frame> stack(static_cast<std::size_t>(n) + 1);
  std::vector<int> sym(static_cast<std::size_t>(n) + 1, 0);
  stack[0] = {1.0, 1.0, 0.0};
  int depth = 0;
  while (depth >= 0) {
    if (depth == n) {
      total.add(stack[n].prob * std::sqrt(stack[n].sumsq));
      --depth;
      continue;
    }
    int& x = sym[depth];
    if (x == r) {
      x = 0;
      --depth;
      continue;
    }
    const Frame& f = stack[depth];
    const double px = spec.p(x);
    const double slope2 = f.slope2 / (px * px);
    stack[depth + 1] = {f.prob * px, slope2, f.sumsq + slope2};
    ++x;
    ++depth;
    if (depth == n) continue;
  }

  LocusReport rep;
  const double rn = std::pow(static_cast<double>(r), n);
  rep.exact = std::sqrt(12.0 * Q) * total.value();
  rep.lower = std::sqrt(12.0 * Q) * rn;
  rep.upper = std::sqrt(12.0 * Q * n) * rn;
  return rep;
}

}  // namespace chaosmod
