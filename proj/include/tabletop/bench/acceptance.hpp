#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tabletop/sim/registry.hpp"

namespace tabletop::bench {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

/// "PASS name: detail (1.23 s)"
std::string format_line(const CheckResult& r);

/// Every acceptance check, in a fixed order. `on_result` sees each result as
/// soon as it is known.
std::vector<CheckResult> run_acceptance(const sim::Registry& registry, const std::function<void(const CheckResult&)>& on_result = {});

}  // namespace tabletop::bench
