#ifndef STGP_ERRORS_HPP
#define STGP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace stgp {

// Invalid argument / parameter outside its mathematical domain.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed or inconsistent input data (CSV, config, dataset shape).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Numerical failure: factorization breakdown, non-finite intermediates.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace stgp

#endif
