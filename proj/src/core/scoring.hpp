#pragma once

#include <string>
#include <vector>

#include "core/util.hpp"

namespace quiet {

// The composite formula family. C is the main scheme (satisfy as base,
// surprise as amplifier); A, B, D exist for the robustness ablation.
enum class SchemeVariant { A, B, C, D };

struct CompositeScheme {
    SchemeVariant variant = SchemeVariant::C;
    double lambda = 1.0;  // meaningful for C only

    std::string id() const;
    static CompositeScheme parse(const std::string& s);  // "A", "B", "D", "C1.0", "C0.5", ...
};

struct GroupScore {
    std::string model_id;
    int group_id = 0;
    double satisfy = 0;
    double surprise = 0;
    double composite = 0;
};

struct ModelTotal {
    std::string model_id;
    double total = 0;
    double satisfy_mean = 0;
    double surprise_mean = 0;
    int rank = 0;
};

// A: s^1.5 * u;  B: 2su/(s+u), zero if either side is zero;
// C: s * (1 + lambda*u);  D: sqrt(s*u).
double composite(double satisfy, double surprise, const CompositeScheme& scheme);

ModelTotal model_total(const std::string& model_id, const std::vector<GroupScore>& groups,
                       std::size_t expected_group_count);

// Descending by total; ties broken by higher satisfy_mean, then by model id.
std::vector<ModelTotal> leaderboard(std::vector<ModelTotal> totals);

}  // namespace quiet
