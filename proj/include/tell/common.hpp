#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace tell {

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matd = Mat<double>;
using Vecd = Vec<double>;

/// Boolean attention mask; entry (q, k) == true means query q may attend key k.
using MaskArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

class Error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad invocation: unknown flag, missing argument. CLI exit code 1.
class UsageError : public Error {
  using Error::Error;
};

/// Malformed or inconsistent input data. CLI exit code 2.
class DataError : public Error {
  using Error::Error;
};

/// Broken internal invariant. CLI exit code 3.
class InternalError : public Error {
  using Error::Error;
};

/// Deterministic random source. mt19937_64 plus hand-rolled transforms so the
/// same seed yields the same stream on every conforming platform (the
/// distribution adaptors in <random> are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Unbiased index in [0, n) via rejection sampling.
  std::size_t index(std::size_t n) {
    if (n == 0) throw InternalError("Rng::index: n must be positive");
    const std::uint64_t rem =
        (std::numeric_limits<std::uint64_t>::max() % n + 1) % n;  // 2^64 mod n
    const std::uint64_t threshold = ~rem + 1;                     // 2^64 - rem
    std::uint64_t x = bits();
    while (rem != 0 && x >= threshold) x = bits();
    return static_cast<std::size_t>(x % n);
  }

  /// Fisher-Yates shuffle.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tell
