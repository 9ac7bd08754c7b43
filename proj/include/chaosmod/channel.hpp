#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "chaosmod/common.hpp"
#include "chaosmod/rng.hpp"
#include "chaosmod/system.hpp"

namespace chaosmod {

/// AWGN channel parameters. gamma is derived once as Q/sigma2 at
/// construction and never recomputed.
struct ChannelConfig {
  double Q = 1.0;
  double sigma2 = 1.0;
  double gamma = 1.0;

  static ChannelConfig from_power(double Q, double sigma2) {
    if (!(Q > 0.0)) throw validation_error("signal power Q must be positive");
    if (!(sigma2 > 0.0))
      throw validation_error("noise variance sigma2 must be positive");
    return ChannelConfig{Q, sigma2, Q / sigma2};
  }

  static ChannelConfig from_snr(double Q, double gamma) {
    if (!(Q > 0.0)) throw validation_error("signal power Q must be positive");
    if (!(gamma > 0.0)) throw validation_error("SNR gamma must be positive");
    return ChannelConfig{Q, Q / gamma, gamma};
  }

  double sigma() const { return std::sqrt(sigma2); }
};

/// Map the states s_1..s_n of a trajectory (the initial state is not
/// transmitted) to zero-mean channel inputs of power Q:
///   u_t = sqrt(12 Q) (s_t - 1/2).
/// Each |u_t| <= sqrt(3 Q); the power constraint holds in expectation over a
/// uniform initial state.
inline std::vector<double> modulate(const Trajectory& traj, double Q) {
  if (!(Q > 0.0)) throw validation_error("signal power Q must be positive");
  const double amp = std::sqrt(12.0 * Q);
  std::vector<double> u;
  u.reserve(traj.x.size());
  for (std::size_t t = 1; t < traj.s.size(); ++t)
    u.push_back(amp * (traj.s[t] - 0.5));
  return u;
}

struct ChannelRealization {
  std::vector<double> u;
  std::vector<double> z;
  std::vector<double> y;  // y = u + z elementwise
};

/// One channel use per input sample; noise is i.i.d. Gaussian(0, sigma2)
/// drawn from Rng(noise_seed) (Marsaglia polar, see rng.hpp), so a fixed
/// seed reproduces the realization bit for bit.
inline ChannelRealization transmit(std::span<const double> u,
                                   const ChannelConfig& cfg,
                                   std::uint64_t noise_seed) {
  ChannelRealization out;
  out.u.assign(u.begin(), u.end());
  out.z.resize(u.size());
  out.y.resize(u.size());
  Rng rng(noise_seed);
  const double sigma = cfg.sigma();
  for (std::size_t i = 0; i < u.size(); ++i) {
    out.z[i] = rng.gaussian(sigma);
    out.y[i] = u[i] + out.z[i];
  }
  return out;
}

}  // namespace chaosmod
