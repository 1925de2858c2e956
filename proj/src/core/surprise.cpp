#include "core/surprise.hpp"

#include <cmath>

namespace quiet {

namespace {

double norm(const EmbeddingVector& v) {
    double s = 0;
    for (double x : v.values) s += x * x;
    return std::sqrt(s);
}

}  // namespace

EmbeddingVector unitize(const EmbeddingVector& v) {
    double n = norm(v);
    if (n <= 1e-12) throw ScoringError("cannot unitize a near-zero vector");
    EmbeddingVector out;
    out.values.reserve(v.values.size());
    for (double x : v.values) out.values.push_back(x / n);
    return out;
}

EmbeddingVector centroid(const BlankCohort& cohort) {
    if (cohort.entries.empty())
        throw ScoringError("centroid of an empty cohort for blank " +
                           std::to_string(cohort.blank_id));
    std::size_t dim = cohort.entries.begin()->second.dimension();
    EmbeddingVector mean;
    mean.values.assign(dim, 0.0);
    for (const auto& [model, vec] : cohort.entries) {
        if (vec.dimension() != dim)
            throw ScoringError("dimension mismatch in cohort for blank " +
                               std::to_string(cohort.blank_id) + " (model " + model + ")");
        for (std::size_t i = 0; i < dim; ++i) mean.values[i] += vec.values[i];
    }
    for (double& x : mean.values) x /= double(cohort.entries.size());
    if (norm(mean) <= 1e-12)
        throw ScoringError("degenerate cohort mean for blank " +
                           std::to_string(cohort.blank_id) + " (antipodal entries)");
    return unitize(mean);
}

double cosine_distance(const EmbeddingVector& v, const EmbeddingVector& c) {
    if (v.dimension() != c.dimension())
        throw ScoringError("cosine distance over mismatched dimensions (" +
                           std::to_string(v.dimension()) + " vs " +
                           std::to_string(c.dimension()) + ")");
    double dot = 0;
    for (std::size_t i = 0; i < v.values.size(); ++i) dot += v.values[i] * c.values[i];
    return 1.0 - dot;
}

std::map<std::string, double> normalize_per_blank(const std::map<std::string, double>& raw) {
    double mx = 0;
    for (const auto& [model, d] : raw) mx = std::max(mx, d);
    std::map<std::string, double> out;
    for (const auto& [model, d] : raw) out[model] = mx >= kDegenerateEps ? d / mx : 0.0;
    return out;
}

double group_surprise(const SurpriseTable& table, const BlankGroup& group,
                      const std::string& model_id) {
    double sum = 0;
    for (int b : group.blank_ids) {
        auto blank_it = table.normalized.find(b);
        if (blank_it == table.normalized.end())
            throw ScoringError("no surprise entries for blank " + std::to_string(b));
        auto model_it = blank_it->second.find(model_id);
        if (model_it == blank_it->second.end())
            throw ScoringError("no surprise entry for model " + model_id + " at blank " +
                               std::to_string(b));
        sum += model_it->second;
    }
    return sum / double(group.blank_ids.size());
}

}  // namespace quiet
