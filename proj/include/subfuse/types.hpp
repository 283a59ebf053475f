#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace subfuse {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonFiniteError : Error { using Error::Error; };
struct RankDeficientZError : Error { using Error::Error; };
struct ShapeMismatchError : Error { using Error::Error; };
struct ZeroVarianceColumnError : Error { using Error::Error; };
struct NegativeArgumentError : Error { using Error::Error; };
struct IncompatibleGammaError : Error { using Error::Error; };
struct SingularSystemError : Error { using Error::Error; };
struct SingularZError : Error { using Error::Error; };
struct InvalidRangeError : Error { using Error::Error; };
struct EmptyPathError : Error { using Error::Error; };
struct NoConvergedPointError : Error { using Error::Error; };
struct NonPositiveDofError : Error { using Error::Error; };
struct InvalidLevelError : Error { using Error::Error; };
struct SingularSchurError : Error { using Error::Error; };
struct SingularContrastCovarianceError : Error { using Error::Error; };
struct InvalidDofError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace subfuse
