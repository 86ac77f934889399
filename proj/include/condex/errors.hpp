#ifndef CONDEX_ERRORS_HPP
#define CONDEX_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace condex {

/// Input files or records that cannot be parsed or do not match the expected
/// schema. The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical breakdown: underflowed kernel rows, non-convergent factorizations,
/// ill-posed unregularized solves. The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace condex

#endif
