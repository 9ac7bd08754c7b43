#pragma once

#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "chaosmod/system.hpp"

namespace chaosmod {

/// Exact rational arithmetic for the map recursion. Double-precision
/// trajectories lose roughly log2(1/min_p) bits of the initial state per
/// step; this mode keeps the recursion exact for label-sequence and
/// reconstruction work at depths well beyond n ~ 50. The probabilities are
/// taken at their exact double values, so results are bit-compatible with
/// the double path whenever the latter does not round.
using Rational = boost::multiprecision::cpp_rational;

struct ExactTrajectory {
  std::vector<Rational> s;  // n+1 states
  std::vector<int> x;       // n labels
};

inline ExactTrajectory iterate_exact(const SystemSpec& spec, const Rational& s0,
                                     long n) {
  if (s0 < 0 || s0 > 1)
    throw validation_error("initial state outside [0,1]");
  if (n < 0) throw validation_error("trajectory length must be >= 0");
  const int r = spec.alphabet();
  std::vector<Rational> F(static_cast<std::size_t>(r) + 1);
  std::vector<Rational> p(static_cast<std::size_t>(r));
  for (int x = 0; x <= r; ++x) F[x] = Rational(spec.F(x));
  F[r] = 1;
  for (int x = 0; x < r; ++x) p[x] = Rational(spec.p(x));

  ExactTrajectory traj;
  traj.s.reserve(static_cast<std::size_t>(n) + 1);
  traj.x.reserve(static_cast<std::size_t>(n));
  Rational s = s0;
  traj.s.push_back(s);
  for (long t = 0; t < n; ++t) {
    int x = r - 1;
    if (s < 1) {
      x = 0;
      while (x + 1 < r && F[x + 1] <= s) ++x;
    }
    s = (s - F[x]) / p[x];
    traj.x.push_back(x);
    traj.s.push_back(s);
  }
  return traj;
}

struct ExactBounds {
  Rational lower;
  Rational upper;
};

/// Exact counterpart of reconstruct(); the returned interval contains every
/// initial state with the given label prefix, with no rounding slack.
inline ExactBounds reconstruct_exact(const SystemSpec& spec,
                                     std::span<const int> x) {
  if (x.empty())
    throw validation_error("reconstruct: label prefix must be nonempty");
  Rational lower = 0;
  Rational prod = 1;
  for (int xt : x) {
    if (xt < 0 || xt >= spec.alphabet())
      throw validation_error("reconstruct: label out of range");
    lower += Rational(spec.F(xt)) * prod;
    prod *= Rational(spec.p(xt));
  }
  return ExactBounds{lower, lower + prod};
}

}  // namespace chaosmod
