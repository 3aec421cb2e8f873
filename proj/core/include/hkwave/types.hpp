#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hkwave {

using Complex = std::complex<double>;

// Largest configuration-space dimension handled by the fixed-capacity temporaries
// in the integrator and the prefactor.
inline constexpr int kMaxDim = 8;

using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using SmallCMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

inline constexpr Complex kI{0.0, 1.0};

/// Raised when a computation leaves the range where double arithmetic is meaningful
/// (prefactor overflow, caustic proximity, non-finite forces).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CausticError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace hkwave
