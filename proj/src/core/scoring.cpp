#include "core/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace quiet {

std::string CompositeScheme::id() const {
    switch (variant) {
        case SchemeVariant::A: return "A";
        case SchemeVariant::B: return "B";
        case SchemeVariant::D: return "D";
        case SchemeVariant::C: {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "C%g", lambda);
            return buf;
        }
    }
    return "?";
}

CompositeScheme CompositeScheme::parse(const std::string& s) {
    if (s == "A") return {SchemeVariant::A, 0.0};
    if (s == "B") return {SchemeVariant::B, 0.0};
    if (s == "D") return {SchemeVariant::D, 0.0};
    if (!s.empty() && s[0] == 'C') {
        CompositeScheme scheme{SchemeVariant::C, 1.0};
        if (s.size() > 1) {
            try {
                scheme.lambda = std::stod(s.substr(1));
            } catch (...) {
                throw UsageError("bad scheme spec '" + s + "'");
            }
            if (scheme.lambda <= 0) throw UsageError("scheme C lambda must be > 0");
        }
        return scheme;
    }
    throw UsageError("unknown scheme '" + s + "' (expected A|B|D|C<lambda>)");
}

double composite(double satisfy, double surprise, const CompositeScheme& scheme) {
    switch (scheme.variant) {
        case SchemeVariant::A:
            return std::pow(satisfy, 1.5) * surprise;
        case SchemeVariant::B:
            if (satisfy == 0.0 || surprise == 0.0) return 0.0;
            return 2.0 * satisfy * surprise / (satisfy + surprise);
        case SchemeVariant::C:
            return satisfy * (1.0 + scheme.lambda * surprise);
        case SchemeVariant::D:
            return std::sqrt(satisfy * surprise);
    }
    return 0.0;
}

ModelTotal model_total(const std::string& model_id, const std::vector<GroupScore>& groups,
                       std::size_t expected_group_count) {
    if (groups.size() != expected_group_count)
        throw ScoringError("model " + model_id + " has " + std::to_string(groups.size()) +
                           " group scores, expected " + std::to_string(expected_group_count));
    ModelTotal out;
    out.model_id = model_id;
    for (const auto& g : groups) {
        out.total += g.composite;
        out.satisfy_mean += g.satisfy;
        out.surprise_mean += g.surprise;
    }
    out.satisfy_mean /= double(groups.size());
    out.surprise_mean /= double(groups.size());
    return out;
}

std::vector<ModelTotal> leaderboard(std::vector<ModelTotal> totals) {
    std::stable_sort(totals.begin(), totals.end(), [](const ModelTotal& a, const ModelTotal& b) {
        if (a.total != b.total) return a.total > b.total;
        if (a.satisfy_mean != b.satisfy_mean) return a.satisfy_mean > b.satisfy_mean;
        return a.model_id < b.model_id;
    });
    for (std::size_t i = 0; i < totals.size(); ++i) totals[i].rank = int(i + 1);
    return totals;
}

}  // namespace quiet
