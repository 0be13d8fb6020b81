#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace pfpinn {

/// Spatial or parametric point. Only the first `dim` entries are meaningful;
/// the rest are kept at zero.
using Point = std::array<double, 3>;

/// Raised on malformed user input (configs, geometry definitions, files).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pfpinn
