#include <iostream>

#include "tabletop/bench/acceptance.hpp"

// One line per acceptance criterion; the exit status is the verdict.
int main() {
    int failed = 0;
    tabletop::bench::run_acceptance(tabletop::sim::default_registry(), [&](const tabletop::bench::CheckResult& r) {
        std::cout << tabletop::bench::format_line(r) << std::endl;
        failed += !r.pass;
    });
    std::cout << (failed ? "acceptance: " + std::to_string(failed) + " check(s) failed" : std::string("acceptance: all checks passed")) << std::endl;
    return failed ? 1 : 0;
}
