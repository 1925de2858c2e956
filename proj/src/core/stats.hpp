#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/util.hpp"

namespace quiet {

// Items x raters with missing cells allowed. Items here are (constraint,
// model) pairs; raters are judges.
struct ReliabilityMatrix {
    std::vector<std::string> items;
    std::vector<std::string> raters;
    std::vector<std::vector<std::optional<double>>> values;  // [item][rater]

    void resize() { values.assign(items.size(), std::vector<std::optional<double>>(raters.size())); }
    void set(std::size_t item, std::size_t rater, double v) { values[item][rater] = v; }
};

enum class DisagreementMetric { interval };  // delta(a,b) = (a-b)^2

// alpha = 1 - D_o/D_e via the coincidence-matrix formulation. Items with
// fewer than two ratings are excluded. Throws when fewer than two usable
// items remain or when D_e = 0 (all pairable values identical).
double krippendorff_alpha(const ReliabilityMatrix& m,
                          DisagreementMetric metric = DisagreementMetric::interval);

struct DriftDiagnostic {
    double within_item = 0;   // mean squared difference among ratings of the same item
    double between_item = 0;  // mean squared difference across ratings of different items
};

DriftDiagnostic drift_diagnostic(const ReliabilityMatrix& m);

// Pearson correlation of average-ranked sequences; ties get average ranks.
double spearman(const std::vector<double>& x, const std::vector<double>& y);
std::vector<double> average_ranks(const std::vector<double>& v);

struct RobustnessMatrix {
    std::vector<std::string> config_ids;
    std::vector<std::vector<double>> cells;  // symmetric, unit diagonal
};

// Pairwise Spearman of model totals across scoring configurations, in the
// given configuration order.
RobustnessMatrix robustness_matrix(
    const std::vector<std::pair<std::string, std::map<std::string, double>>>& totals_by_config);

}  // namespace quiet
