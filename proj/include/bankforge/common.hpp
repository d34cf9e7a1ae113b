#pragma once

#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace bankforge {

using i64 = std::int64_t;
using u64 = std::uint64_t;

enum class errc {
  invalid_input,
  mismatched_memory,
  dimension_mismatch,
  out_of_bounds,
  bounds_budget_exceeded,
  missing_schedule,
  disjoint_trees,
  not_mersenne,
  no_mersenne_multiple,
  not_representable,
  no_valid_parallelotope,
  no_solution,
  empty_dataset,
  verification_failed,
};

class error : public std::runtime_error {
public:
  error(errc kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}

  errc kind() const { return kind_; }

  /// Process exit code the CLI maps this error to.
  int exit_code() const {
    switch (kind_) {
      case errc::no_solution: return 2;
      case errc::verification_failed: return 3;
      case errc::bounds_budget_exceeded: return 4;
      default: return 1;
    }
  }

private:
  errc kind_;
};

[[noreturn]] inline void fail(errc kind, const std::string& msg) { throw error(kind, msg); }

// Floored division/modulo; the bank equations need mathematical semantics
// for negative deltas, not C++ truncation.
inline i64 floor_div(i64 a, i64 b) {
  i64 q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline i64 floor_mod(i64 a, i64 b) { return a - b * floor_div(a, b); }

inline i64 ceil_div(i64 a, i64 b) { return -floor_div(-a, b); }

inline i64 gcd64(i64 a, i64 b) { return std::gcd(a, b); }

inline i64 lcm64(i64 a, i64 b) {
  if (a == 0 || b == 0) return 0;
  return a / std::gcd(a, b) * b;
}

/// Product with saturation; enumeration volumes can overflow otherwise.
inline i64 sat_mul(i64 a, i64 b) {
  if (a == 0 || b == 0) return 0;
  constexpr i64 cap = INT64_MAX / 4;
  if (a > cap / b) return cap;
  return a * b;
}

/// Odometer over a mixed-radix space. radix[i] >= 1 for all i.
/// Calls fn(digits) for every point; fn returning false stops early.
template <typename Fn>
bool for_each_point(const std::vector<i64>& radix, Fn&& fn) {
  std::vector<i64> digits(radix.size(), 0);
  for (i64 r : radix)
    if (r <= 0) return true;
  while (true) {
    if (!fn(digits)) return false;
    std::size_t d = 0;
    while (d < digits.size()) {
      if (++digits[d] < radix[d]) break;
      digits[d] = 0;
      ++d;
    }
    if (d == digits.size()) return true;
  }
}

inline unsigned worker_count() {
  if (const char* env = std::getenv("BANKFORGE_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

}  // namespace bankforge
