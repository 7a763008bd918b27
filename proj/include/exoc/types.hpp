#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace exoc {

// Hard cap on state/control dimension. Keeps all small vectors and matrices
// on the stack (no heap traffic in the integrator hot loops). Desk-scale
// problems use dimensions <= 4; the cap leaves headroom.
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A state, costate or Riccati value became NaN/Inf during integration.
class NonFiniteState : public Error {
 public:
  explicit NonFiniteState(const std::string& what) : Error(what) {}
};

class MissingHessian : public Error {
 public:
  explicit MissingHessian(const std::string& what) : Error(what) {}
};

class ValueNotAnAtom : public Error {
 public:
  explicit ValueNotAnAtom(const std::string& what) : Error(what) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what) : Error(what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

/// Counts elementary integration work in vector-trajectory interval-steps:
/// one RK4 step of an n-dimensional state/costate system adds 1, a matrix
/// system adds one per column, an N-particle ensemble adds N. Used by the
/// solvers to compare methods by counted work instead of wall clock.
struct StepCounter {
  std::int64_t steps = 0;

  void add(std::int64_t n = 1) { steps += n; }
};

inline bool is_finite(const Vec& v) { return v.allFinite(); }
inline bool is_finite(const Mat& m) { return m.allFinite(); }

}  // namespace exoc
