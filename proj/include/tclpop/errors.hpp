#ifndef TCLPOP_ERRORS_HPP
#define TCLPOP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tclpop {

/// Invalid or inconsistent scenario/configuration input (CLI exit status 3).
class ScenarioError : public std::runtime_error {
public:
    explicit ScenarioError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure at run time, e.g. a stability bound that cannot be met
/// (CLI exit status 4).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace tclpop

#endif
