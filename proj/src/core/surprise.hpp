#pragma once

#include <map>
#include <string>

#include "core/providers.hpp"
#include "core/testset.hpp"

namespace quiet {

// Below this, a blank's distance spread counts as degenerate and every
// normalized surprise for it is defined as 0.
inline constexpr double kDegenerateEps = 1e-9;

struct BlankCohort {
    int blank_id = 0;
    std::map<std::string, EmbeddingVector> entries;  // model id -> unit vector
};

struct SurpriseTable {
    std::map<int, std::map<std::string, double>> raw;         // blank -> model -> d
    std::map<int, std::map<std::string, double>> normalized;  // blank -> model -> d~
    std::map<int, std::map<std::string, double>> group;       // group -> model -> surprise
};

EmbeddingVector unitize(const EmbeddingVector& v);

// Unitized arithmetic mean of the cohort entries.
EmbeddingVector centroid(const BlankCohort& cohort);

double cosine_distance(const EmbeddingVector& v, const EmbeddingVector& c);

// d~ = d / max d when the max is meaningful; all zero otherwise.
std::map<std::string, double> normalize_per_blank(const std::map<std::string, double>& raw);

// Arithmetic mean of the group's blank-level normalized surprise for a model.
double group_surprise(const SurpriseTable& table, const BlankGroup& group,
                      const std::string& model_id);

}  // namespace quiet
