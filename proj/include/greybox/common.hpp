#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace greybox {

using Index = Eigen::Index;

/// Dense matrix, row-major so flattened views match the serialized layout.
template <class Scalar>
using MatT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Scalar>
using VecT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Mat = MatT<double>;
using Vec = VecT<double>;

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Shape mismatch between operands; message names both shapes.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(what) {}
};

/// Non-finite values or failed factorizations during numerical work.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double t = 0.0, int substep = -1)
      : Error(what), time(t), substep(substep) {}
  double time = 0.0;
  int substep = -1;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what) {}
};

template <class Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

/// Seeded random stream with platform-independent draws (the standard
/// distributions are implementation-defined, so the mappings are explicit).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    const std::uint64_t r = engine_();
    const double u = static_cast<double>(r >> 11) * 0x1.0p-53;  // [0,1)
    return lo + (hi - lo) * u;
  }

  double normal(double mean, double sigma) {
    if (have_spare_) {
      have_spare_ = false;
      return mean + sigma * spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform(0.0, 1.0);
    } while (u1 <= 0.0);
    const double u2 = uniform(0.0, 1.0);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return mean + sigma * radius * std::cos(angle);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace greybox
