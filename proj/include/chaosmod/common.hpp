#pragma once

#include <stdexcept>
#include <string>

namespace chaosmod {

inline constexpr const char* kVersion = "0.1.0";

/// Bad user input or configuration (maps to CLI exit code 2).
class validation_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation would exceed a configured enumeration or memory budget
/// (maps to CLI exit code 3).
class resource_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal numerical consistency check failed (maps to CLI exit code 4).
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Kahan compensated accumulator. Summation order is fixed by the caller,
/// so results do not depend on how work was partitioned.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

}  // namespace detail
}  // namespace chaosmod
