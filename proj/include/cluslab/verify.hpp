#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cluslab/lowdegree.hpp"

namespace cluslab::verify {

struct CheckResult {
    std::string name;
    bool passed = true;
    std::string detail;  // counterexample dump on failure
};

std::vector<CheckResult> verify_metrics(std::uint64_t seed);
std::vector<CheckResult> verify_cluster(std::uint64_t seed);
std::vector<CheckResult> verify_lowdegree(std::uint64_t seed);
std::vector<CheckResult> verify_all(std::uint64_t seed);
std::vector<CheckResult> verify_suite(const std::string& suite, std::uint64_t seed);

// Parity oracle cross-check against Monte Carlo moments, parameterized so a
// corrupted implementation is caught (used by the mutation test).
using ParityFn = std::function<Rational(const lowdegree::AlphaMatrix&, int)>;
CheckResult check_parity_against_mc(const ParityFn& parity, std::uint64_t seed, int cases = 12,
                                    int samples = 200000);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace cluslab::verify
