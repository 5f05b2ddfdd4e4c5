#ifndef TCLPOP_ACCEPTANCE_HPP
#define TCLPOP_ACCEPTANCE_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace tclpop {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Runs the full verification suite against the built-in reference
/// configuration. Every threshold is pinned here, not configurable.
std::vector<CriterionResult> run_acceptance();

/// One pass/fail line per criterion; returns the number of failures.
int report_acceptance(const std::vector<CriterionResult>& results, std::ostream& os);

} // namespace tclpop

#endif
