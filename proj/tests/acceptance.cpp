// Acceptance gate: runs every validation criterion at full size and prints one
// verdict line per criterion. Exits nonzero if any criterion fails.
#include <cstdlib>
#include <iostream>

#include "blockade/harness.hpp"

int main() {
    const char* fast_env = std::getenv("ACCEPTANCE_FAST");
    const bool fast = fast_env != nullptr && std::string_view(fast_env) == "1";
    const auto results = blockade::validate_all(fast);
    bool ok = true;
    for (const auto& r : results) {
        const char* verdict = r.ran ? (r.passed ? "PASS" : "FAIL") : "SKIP";
        std::cout << "[" << (r.id < 10 ? " " : "") << r.id << "/12] " << verdict << "  "
                  << r.name << " :: " << r.measured << std::endl;
        if (r.ran && !r.passed) ok = false;
    }
    std::cout << (ok ? "acceptance passed" : "acceptance FAILED") << std::endl;
    return ok ? 0 : 1;
}
