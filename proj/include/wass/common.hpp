#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace wass {

using Point = Eigen::VectorXd;

/// Input or invariant violation; the CLI maps this to exit code 2.
class validation_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unexpected failure of an internal algorithm; the CLI maps this to exit code 1.
class internal_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw validation_error(msg);
}

/// Coordinate quantization grid used for all atom-equality tests.
/// Defaults to 1e-9; overridable through the WASS_QUANTIZE environment
/// variable (read once per process).
inline double quantum() {
  static const double q = [] {
    if (const char* env = std::getenv("WASS_QUANTIZE")) {
      char* end = nullptr;
      double v = std::strtod(env, &end);
      if (end == env || !(v > 0.0) || !std::isfinite(v))
        throw validation_error("WASS_QUANTIZE must be a positive finite real");
      return v;
    }
    return 1e-9;
  }();
  return q;
}

using QuantKey = std::vector<std::int64_t>;

inline std::int64_t quantize_coord(double x, double q) {
  double scaled = x / q;
  if (!(std::abs(scaled) < 9.0e17))
    throw validation_error("coordinate too large for quantization grid");
  return std::llround(scaled);
}

inline QuantKey quantize_point(const Point& x, double q = quantum()) {
  QuantKey key(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i)
    key[static_cast<std::size_t>(i)] = quantize_coord(x[i], q);
  return key;
}

inline bool all_finite(const Point& x) {
  return x.allFinite();
}

/// Deterministic RNG for property sweeps. Draws are derived from raw
/// mt19937_64 output so that identical seeds give identical streams on
/// every platform (std::uniform_real_distribution does not promise that).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /// Index in [0, n).
  int index(int n) {
    int i = static_cast<int>(uniform01() * n);
    return i >= n ? n - 1 : i;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01(), u2 = uniform01();
    while (u1 <= 1e-300) u1 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  Point point(int d, double a, double b) {
    Point p(d);
    for (int i = 0; i < d; ++i) p[i] = uniform(a, b);
    return p;
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace wass
