#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace brainscore {

/// On-disk matrix payload: 32-bit floats, row-major.
using FloatMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Malformed input, bad arguments, or data that violates a domain invariant.
/// The CLI maps this to exit code 2; anything else is an internal error.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fixed 6-decimal rendering used by every text output.
std::string fixed6(double value);

/// Shortest decimal string that parses back to the same double.
std::string shortest(double value);

/// Strict full-string parsers; throw InputError naming `what` on failure.
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

}  // namespace brainscore
