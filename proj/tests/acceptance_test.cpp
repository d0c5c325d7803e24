// Acceptance suite: runs every verification criterion at its pinned
// tolerance and prints one PASS/FAIL line per criterion, with the measured
// runtime checked against each criterion's budget.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "naf/oracle.hpp"

namespace {

struct Criterion {
    int number;
    const char* check;   // suite check name
    double budget_sec;   // 0 = no budget
};

// Criterion order and runtime budgets.
const std::vector<Criterion> kCriteria = {
    {1, "example-3.2", 1.0},
    {2, "partition-identity", 5.0},
    {3, "naf-inequalities", 30.0},
    {4, "degradation-bounds", 30.0},
    {5, "efficiency-bounds", 30.0},
    {6, "corollary-equivalence", 30.0},
    {7, "sampler-law", 60.0},
    {8, "memorization-analog", 120.0},
    {9, "k-tilde-arithmetic", 1.0},
    {10, "negative-controls", 30.0},
    {11, "kl-event-bound", 60.0},
};

}  // namespace

int main() {
    naf::oracle::SuiteConfig config;  // defaults pin every count and tolerance
    const naf::oracle::SuiteReport report = naf::oracle::verify_suite(config);

    bool all_pass = true;
    for (const Criterion& criterion : kCriteria) {
        const naf::oracle::CheckResult* found = nullptr;
        for (const naf::oracle::CheckResult& c : report.checks) {
            if (c.name == criterion.check) {
                found = &c;
                break;
            }
        }
        bool pass = found != nullptr && found->pass;
        std::string details = found != nullptr ? found->details : "check did not run";
        if (found != nullptr && criterion.budget_sec > 0.0 &&
            found->seconds > criterion.budget_sec) {
            pass = false;
            details += " [exceeded " + std::to_string(criterion.budget_sec) + "s budget]";
        }
        all_pass = all_pass && pass;
        std::printf("criterion %2d [%s] %s (%.2fs): %s\n", criterion.number,
                    pass ? "PASS" : "FAIL", criterion.check,
                    found != nullptr ? found->seconds : 0.0, details.c_str());
    }
    std::printf("%s\n", all_pass ? "ACCEPTANCE: all criteria passed"
                                 : "ACCEPTANCE: FAILURES PRESENT");
    return all_pass ? 0 : 1;
}
