// Test-only oracles, independent of the implementation paths they check.
#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/stats.hpp"
#include "core/testset.hpp"
#include "core/util.hpp"

namespace oracles {

// Krippendorff alpha by exhaustive pair enumeration, straight from the
// definition: D_o over within-unit pairs (weighted 1/(m_u - 1)), D_e over all
// cross-instance pairs of the pooled ratings.
inline double alpha_pairwise(const quiet::ReliabilityMatrix& m) {
    std::vector<std::vector<double>> units;
    for (const auto& row : m.values) {
        std::vector<double> ratings;
        for (const auto& cell : row)
            if (cell) ratings.push_back(*cell);
        if (ratings.size() >= 2) units.push_back(std::move(ratings));
    }
    if (units.size() < 2) throw quiet::ScoringError("oracle: fewer than 2 usable items");

    double n = 0;
    double d_o = 0;
    std::vector<double> pooled;
    for (const auto& ratings : units) {
        n += double(ratings.size());
        double unit_sum = 0;
        for (std::size_t i = 0; i < ratings.size(); ++i)
            for (std::size_t j = 0; j < ratings.size(); ++j) {
                if (i == j) continue;
                double d = ratings[i] - ratings[j];
                unit_sum += d * d;
            }
        d_o += unit_sum / double(ratings.size() - 1);
        for (double v : ratings) pooled.push_back(v);
    }
    d_o /= n;

    double d_e = 0;
    for (std::size_t i = 0; i < pooled.size(); ++i)
        for (std::size_t j = 0; j < pooled.size(); ++j) {
            if (i == j) continue;
            double d = pooled[i] - pooled[j];
            d_e += d * d;
        }
    d_e /= n * (n - 1.0);
    if (d_e <= 0) throw quiet::ScoringError("oracle: D_e = 0");
    return 1.0 - d_o / d_e;
}

// Mean squared pairwise differences, enumerated directly.
inline std::pair<double, double> drift_pairwise(const quiet::ReliabilityMatrix& m) {
    std::vector<std::vector<double>> units;
    for (const auto& row : m.values) {
        std::vector<double> ratings;
        for (const auto& cell : row)
            if (cell) ratings.push_back(*cell);
        if (ratings.size() >= 2) units.push_back(std::move(ratings));
    }
    double ws = 0, wp = 0, bs = 0, bp = 0;
    for (const auto& u : units)
        for (std::size_t i = 0; i < u.size(); ++i)
            for (std::size_t j = i + 1; j < u.size(); ++j) {
                ws += (u[i] - u[j]) * (u[i] - u[j]);
                wp += 1;
            }
    for (std::size_t a = 0; a < units.size(); ++a)
        for (std::size_t b = a + 1; b < units.size(); ++b)
            for (double va : units[a])
                for (double vb : units[b]) {
                    bs += (va - vb) * (va - vb);
                    bp += 1;
                }
    return {ws / wp, bs / bp};
}

// Pseudo-random unit vector keyed by text; the same generator backs the
// bundled embedding fixtures.
inline std::vector<double> deterministic_unit_vector(const std::string& text, std::size_t dim) {
    quiet::SplitMix64 rng(quiet::fnv1a64(text));
    std::vector<double> v(dim);
    double norm2 = 0;
    for (auto& x : v) {
        x = rng.next_in(-1.0, 1.0);
        norm2 += x * x;
    }
    double n = std::sqrt(norm2);
    for (auto& x : v) x /= n;
    return v;
}

// Builds the transcript a cooperative model would emit: skeleton with every
// blank replaced by its ⟦k: filling⟧ tag.
inline std::string tagged_story(const quiet::TestSet& ts,
                                const std::map<int, std::string>& fillings) {
    std::string out;
    for (const auto& seg : ts.segments) {
        if (seg.kind == quiet::StorySegment::Kind::fixed) {
            out += seg.text;
        } else {
            out += "⟦" + std::to_string(seg.blank_id) + ": " + fillings.at(seg.blank_id) +
                   "⟧";
        }
    }
    return out;
}

// Skeleton with each blank slot replaced by a literal string (no tags); the
// fallback-alignment round-trip input.
inline std::string untagged_story(const quiet::TestSet& ts,
                                  const std::map<int, std::string>& fillings) {
    std::string out;
    for (const auto& seg : ts.segments) {
        if (seg.kind == quiet::StorySegment::Kind::fixed)
            out += seg.text;
        else
            out += fillings.at(seg.blank_id);
    }
    return out;
}

}  // namespace oracles
