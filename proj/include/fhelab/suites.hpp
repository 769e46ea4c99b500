#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fhelab/apps.hpp"
#include "fhelab/config.hpp"

namespace fhelab {

// Toy-scale functional checks shared by the CLI selftest and the acceptance binary.
struct CheckResult {
    std::string id, name;
    double value = 0, bound = 0;  // measured quantity and its limit (value < bound passes unless noted)
    bool pass = false;
    double seconds = 0;
    std::string detail;
};

// Barrett and Shoup products against the 128-bit reference
CheckResult check_modmul(std::uint64_t seed, std::size_t cases = 1000000);
// ntt/pointwise/intt against the O(N^2) negacyclic convolution at N = 8, exact
CheckResult check_ntt_convolution(std::uint64_t seed);
// fast basis conversion against the big-integer CRT lift (exact up to u*Q, u < k)
CheckResult check_basis_conversion(std::uint64_t seed);
// ModDown against round(x/P) with |error| <= l/2 + 1
CheckResult check_mod_down(std::uint64_t seed);

// roundtrip, Mult/Rotate/HRotate/Conjugate oracles, new_mult vs mult, hrotate and compressed-key bit identity
std::vector<CheckResult> check_ckks(std::uint64_t seed, std::size_t log_n = 12);

struct BootstrapRun {
    int level_in = 0, level_out = 0;
    double max_error = 0, seconds = 0;
    std::size_t galois_keys = 0;
};
BootstrapRun run_bootstrap(const BootstrapPlan& plan);

struct LrRow {
    int iteration = 0, bootstraps = 0, level = 0;
    double loss_encrypted = 0, loss_plain = 0, weight_error = 0;
};
struct LrRun {
    std::vector<LrRow> rows;  // row 0 is the initial point
    double max_weight_error = 0, seconds = 0;
    int bootstraps = 0;
};
// trains on `data` when given, otherwise on the plan's blobs
LrRun run_lr(const LrPlan& plan, const Dataset* data = nullptr);

}  // namespace fhelab
