#pragma once

#include <stdexcept>
#include <string>

namespace ofjet {

/// A computation left the regime where the recursions are well defined
/// (vanishing predictive mass, non-invertible gain, non-convergence).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two objects built on different grids or index sets were combined.
class MismatchError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace ofjet
