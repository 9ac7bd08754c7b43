#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "chaosmod/common.hpp"

namespace chaosmod {

namespace detail {

/// Cumulative table of a probability vector: out[0] = 0, out[x+1] = out[x] + p[x],
/// with the final entry forced to exactly 1 once the sum is within tolerance.
/// Shared between SystemSpec and the memory-law iterator so that both produce
/// bit-identical cell boundaries for the same probabilities.
inline void cumulative(std::span<const double> p, std::vector<double>& out) {
  out.resize(p.size() + 1);
  out[0] = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) out[x + 1] = out[x] + p[x];
  out.back() = 1.0;
}

/// Index of the half-open cell [cum[x], cum[x+1]) containing s; s == 1 maps to
/// the last cell. cum must be a cumulative table as built by cumulative().
inline int locate_cell(std::span<const double> cum, double s) {
  const int r = static_cast<int>(cum.size()) - 1;
  if (s >= 1.0) return r - 1;
  const auto it = std::upper_bound(cum.begin(), cum.end(), s);
  int x = static_cast<int>(it - cum.begin()) - 1;
  if (x < 0) x = 0;          // s below cum[1] with degenerate rounding
  if (x > r - 1) x = r - 1;
  return x;
}

/// One step of the expanding map: stretch cell [F, F+p) back onto [0,1).
/// The result is clamped to [0,1] to absorb ulp overshoot at cell edges.
inline double step_state(double s, double F, double p) {
  double t = (s - F) / p;
  if (t < 0.0) t = 0.0;
  if (t > 1.0) t = 1.0;
  return t;
}

}  // namespace detail

/// A piecewise-linear expanding map of the unit interval, defined by an
/// alphabet size r >= 2 and a strictly positive probability vector p summing
/// to one. The induced tables are
///   F(x) = sum_{x'<x} p(x')   (cell left endpoints, F(r) = 1)
///   G(x) = F(x)/p(x).
/// Iterating the map from a state in [0,1] emits one cell label per step and
/// stretches that cell back onto the whole interval. Immutable after
/// construction and safe to share across threads.
class SystemSpec {
 public:
  explicit SystemSpec(std::vector<double> p) : p_(std::move(p)) {
    const int r = static_cast<int>(p_.size());
    if (r < 2)
      throw validation_error("system spec: alphabet size must be >= 2, got " +
                             std::to_string(r));
    double sum = 0.0;
    for (int x = 0; x < r; ++x) {
      if (!(p_[x] > 0.0))
        throw validation_error("system spec: p(" + std::to_string(x) +
                               ") must be strictly positive");
      sum += p_[x];
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw validation_error(
          "system spec: probabilities must sum to 1 within 1e-12, got sum = " +
          std::to_string(sum));
    detail::cumulative(p_, cum_);
    for (int x = 0; x < r; ++x) {
      if (!(cum_[x + 1] > cum_[x]))
        throw validation_error(
            "system spec: cumulative table not strictly increasing at x = " +
            std::to_string(x));
    }
    max_p_ = *std::max_element(p_.begin(), p_.end());
    min_p_ = *std::min_element(p_.begin(), p_.end());
  }

  static SystemSpec uniform(int r) {
    if (r < 2)
      throw validation_error("uniform spec: alphabet size must be >= 2");
    return SystemSpec(std::vector<double>(r, 1.0 / r));
  }

  int alphabet() const { return static_cast<int>(p_.size()); }
  double p(int x) const { return p_[x]; }
  /// F(x) for x in [0, r]; F(r) == 1 exactly.
  double F(int x) const { return cum_[x]; }
  double G(int x) const { return cum_[x] / p_[x]; }
  double max_p() const { return max_p_; }
  double min_p() const { return min_p_; }
  std::span<const double> probabilities() const { return p_; }
  std::span<const double> cumulative() const { return cum_; }

  /// Cell label of a state: the unique x with F(x) <= s < F(x+1), except that
  /// s == 1 maps to r-1. States outside [0,1] (including NaN) are rejected.
  int cell_of(double s) const {
    if (!(s >= 0.0 && s <= 1.0))
      throw validation_error("state outside [0,1]: " + std::to_string(s));
    return detail::locate_cell(cum_, s);
  }

 private:
  std::vector<double> p_;
  std::vector<double> cum_;  // size r+1, cum_[r] == 1
  double max_p_ = 0.0;
  double min_p_ = 0.0;
};

/// Paired output of one run: states s_0..s_n and cell labels x_1..x_n.
struct Trajectory {
  std::vector<double> s;  // n+1 states, s[0] is the initial state
  std::vector<int> x;     // n labels, x[t-1] is the label emitted at step t
};

/// Forward iteration from s0 for n steps. Deterministic in (spec, s0, n).
inline Trajectory iterate(const SystemSpec& spec, double s0, long n) {
  if (!(s0 >= 0.0 && s0 <= 1.0))
    throw validation_error("initial state outside [0,1]: " +
                           std::to_string(s0));
  if (n < 0) throw validation_error("trajectory length must be >= 0");
  Trajectory traj;
  traj.s.reserve(static_cast<std::size_t>(n) + 1);
  traj.x.reserve(static_cast<std::size_t>(n));
  double s = s0;
  traj.s.push_back(s);
  for (long t = 0; t < n; ++t) {
    const int x = spec.cell_of(s);
    const double next = detail::step_state(s, spec.F(x), spec.p(x));
    // Inverting the step must recover the previous state to 1e-12.
    assert(std::abs(spec.F(x) + spec.p(x) * next - s) <= 1e-12);
    traj.x.push_back(x);
    traj.s.push_back(next);
    s = next;
  }
  return traj;
}

/// Interval bracketing the set of initial states whose label sequence starts
/// with a given prefix of length tau. The width is the product of the prefix
/// probabilities, hence at most (max_x p(x))^tau.
struct ReconstructionBounds {
  double lower = 0.0;
  double upper = 0.0;
  int tau = 0;
};

/// Initial-state reconstruction from a label prefix:
///   lower = sum_t F(x_t) prod_{i<t} p(x_i),   upper = lower + prod_t p(x_t).
/// Any state generating the prefix lies in [lower, upper].
inline ReconstructionBounds reconstruct(const SystemSpec& spec,
                                        std::span<const int> x) {
  if (x.empty())
    throw validation_error("reconstruct: label prefix must be nonempty");
  double lower = 0.0;
  double prod = 1.0;
  for (int xt : x) {
    if (xt < 0 || xt >= spec.alphabet())
      throw validation_error("reconstruct: label out of range: " +
                             std::to_string(xt));
    lower += spec.F(xt) * prod;
    prod *= spec.p(xt);
  }
  return ReconstructionBounds{lower, lower + prod, static_cast<int>(x.size())};
}

/// Per-coordinate affine description of the states over one continuity cell.
/// For initial states whose label sequence starts with the given prefix,
///   s_i(s0) = slope[i-1] * s0 + intercept[i-1],   i = 1..n,
/// with slope_i = prod_{j<=i} 1/p(x_j).
struct CellAffine {
  std::vector<double> slope;
  std::vector<double> intercept;
};

inline CellAffine cell_affine(const SystemSpec& spec, std::span<const int> x) {
  CellAffine out;
  out.slope.reserve(x.size());
  out.intercept.reserve(x.size());
  double a = 1.0;
  double b = 0.0;
  for (int xt : x) {
    if (xt < 0 || xt >= spec.alphabet())
      throw validation_error("cell_affine: label out of range: " +
                             std::to_string(xt));
    a /= spec.p(xt);
    b = (b - spec.F(xt)) / spec.p(xt);
    out.slope.push_back(a);
    out.intercept.push_back(b);
  }
  return out;
}

}  // namespace chaosmod
