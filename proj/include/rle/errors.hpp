#pragma once

#include <stdexcept>
#include <string>

namespace rle {

/// Argument outside the mathematical domain of an operation
/// (nonpositive bundle for prices, infeasible scales, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The economy admits no admissible ascent step from s = 0, e.g. a zero
/// endowment entry under log utility.
class DegenerateEconomy : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace rle
