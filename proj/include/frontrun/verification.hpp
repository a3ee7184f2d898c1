#pragma once

#include "frontrun/kernels.hpp"
#include "frontrun/params.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace frontrun {

struct CriterionResult {
    std::string id;
    std::string name;
    bool passed = false;
    double measured = 0.0;
    double threshold = 0.0;
    double seconds = 0.0;
    std::string detail;
};

struct VerifyOptions {
    bool quick = false;  // smaller Monte Carlo and tree sizes
    unsigned workers = 1;
    std::uint64_t seed = 20240601;
    KernelFaults faults;
};

CriterionResult check_kernel_resolvent(const VerifyOptions& o);        // A1
CriterionResult check_duality_identity(const VerifyOptions& o);        // A2
CriterionResult check_mc_value(const VerifyOptions& o);                // A3
CriterionResult check_policy_forms(const VerifyOptions& o);            // A4
CriterionResult check_reduction(const VerifyOptions& o);               // A5
CriterionResult check_dominance(const VerifyOptions& o);               // A6
CriterionResult check_perturbation(const VerifyOptions& o);            // A7
CriterionResult check_dual_oracle(const VerifyOptions& o);             // A8
CriterionResult check_tree_duality(const VerifyOptions& o);            // A9
CriterionResult check_certainty_equivalent(const VerifyOptions& o);    // A10

struct Criterion {
    std::string id;
    std::function<CriterionResult(const VerifyOptions&)> run;
};

const std::vector<Criterion>& acceptance_criteria();

/// Runs the selected criteria (all when `only` is empty) and reports each
/// result through `on_result` as soon as it is available.
std::vector<CriterionResult> run_acceptance(const VerifyOptions& o, const std::vector<std::string>& only = {},
                                            const std::function<void(const CriterionResult&)>& on_result = {});

std::string format_line(const CriterionResult& r);

void to_json(nlohmann::json& j, const CriterionResult& r);

}  // namespace frontrun
