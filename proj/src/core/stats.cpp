#include "core/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace quiet {

namespace {

double interval_delta(double a, double b) { return (a - b) * (a - b); }

struct UsableUnit {
    std::vector<double> ratings;  // >= 2 entries
};

std::vector<UsableUnit> usable_units(const ReliabilityMatrix& m) {
    std::vector<UsableUnit> units;
    for (const auto& row : m.values) {
        UsableUnit u;
        for (const auto& cell : row)
            if (cell) u.ratings.push_back(*cell);
        if (u.ratings.size() >= 2) units.push_back(std::move(u));
    }
    return units;
}

}  // namespace

double krippendorff_alpha(const ReliabilityMatrix& m, DisagreementMetric metric) {
    (void)metric;  // interval is the only metric implemented
    if (m.raters.size() < 2) throw ScoringError("krippendorff_alpha needs at least 2 raters");
    auto units = usable_units(m);
    if (units.size() < 2)
        throw ScoringError("krippendorff_alpha needs at least 2 items with >= 2 ratings");

    // Coincidence counts o[c][k]: every ordered within-unit pair of values
    // from different raters contributes 1/(m_u - 1).
    std::vector<double> values;
    for (const auto& u : units)
        for (double v : u.ratings) values.push_back(v);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    auto index_of = [&values](double v) {
        return std::size_t(std::lower_bound(values.begin(), values.end(), v) - values.begin());
    };

    std::size_t k = values.size();
    std::vector<std::vector<double>> o(k, std::vector<double>(k, 0.0));
    double n = 0;
    for (const auto& u : units) {
        double weight = 1.0 / double(u.ratings.size() - 1);
        n += double(u.ratings.size());
        for (std::size_t i = 0; i < u.ratings.size(); ++i)
            for (std::size_t j = 0; j < u.ratings.size(); ++j) {
                if (i == j) continue;
                o[index_of(u.ratings[i])][index_of(u.ratings[j])] += weight;
            }
    }
    std::vector<double> marginal(k, 0.0);
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t d = 0; d < k; ++d) marginal[c] += o[c][d];

    double d_o = 0, d_e = 0;
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t d = 0; d < k; ++d) {
            double delta = interval_delta(values[c], values[d]);
            d_o += o[c][d] * delta;
            d_e += marginal[c] * marginal[d] * delta;
        }
    d_o /= n;
    d_e /= n * (n - 1.0);
    if (d_e <= 0)
        throw ScoringError("krippendorff_alpha undefined: all pairable values identical (D_e = 0)");
    return 1.0 - d_o / d_e;
}

DriftDiagnostic drift_diagnostic(const ReliabilityMatrix& m) {
    if (m.raters.size() < 2) throw ScoringError("drift_diagnostic needs at least 2 raters");
    auto units = usable_units(m);
    if (units.empty()) throw ScoringError("drift_diagnostic needs items with >= 2 ratings");
    if (units.size() < 2)
        throw ScoringError("drift_diagnostic needs >= 2 usable items (between-item undefined)");

    DriftDiagnostic out;
    double within_sum = 0, within_pairs = 0;
    for (const auto& u : units)
        for (std::size_t i = 0; i < u.ratings.size(); ++i)
            for (std::size_t j = i + 1; j < u.ratings.size(); ++j) {
                within_sum += interval_delta(u.ratings[i], u.ratings[j]);
                within_pairs += 1;
            }
    double between_sum = 0, between_pairs = 0;
    for (std::size_t a = 0; a < units.size(); ++a)
        for (std::size_t b = a + 1; b < units.size(); ++b)
            for (double va : units[a].ratings)
                for (double vb : units[b].ratings) {
                    between_sum += interval_delta(va, vb);
                    between_pairs += 1;
                }
    out.within_item = within_sum / within_pairs;
    out.between_item = between_sum / between_pairs;
    return out;
}

std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        double avg = (double(i + 1) + double(j + 1)) / 2.0;  // 1-based average rank
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size())
        throw ScoringError("spearman over sequences of different lengths (" +
                           std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
    if (x.size() < 2) throw ScoringError("spearman needs at least 2 points");
    auto distinct = [](const std::vector<double>& v) {
        for (std::size_t i = 1; i < v.size(); ++i)
            if (v[i] != v[0]) return true;
        return false;
    };
    if (!distinct(x) || !distinct(y))
        throw ScoringError("spearman undefined for a constant sequence");

    std::vector<double> rx = average_ranks(x);
    std::vector<double> ry = average_ranks(y);

    auto has_ties = [](const std::vector<double>& r) {
        std::vector<double> s = r;
        std::sort(s.begin(), s.end());
        return std::adjacent_find(s.begin(), s.end()) != s.end();
    };
    if (!has_ties(rx) && !has_ties(ry)) {
        // Tie-free closed form; exact at the +1/-1 endpoints.
        double n = double(rx.size());
        double sum_d2 = 0;
        for (std::size_t i = 0; i < rx.size(); ++i) sum_d2 += interval_delta(rx[i], ry[i]);
        return 1.0 - 6.0 * sum_d2 / (n * (n * n - 1.0));
    }

    double n = double(rx.size());
    double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double cov = 0, vx = 0, vy = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        double dx = rx[i] - mx, dy = ry[i] - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if (vx <= 0 || vy <= 0) throw ScoringError("spearman undefined for a constant rank vector");
    return cov / std::sqrt(vx * vy);
}

RobustnessMatrix robustness_matrix(
    const std::vector<std::pair<std::string, std::map<std::string, double>>>& totals_by_config) {
    if (totals_by_config.size() < 2)
        throw ScoringError("robustness matrix needs at least 2 configurations");
    const auto& reference = totals_by_config.front().second;
    std::vector<std::string> models;
    for (const auto& [model, total] : reference) models.push_back(model);
    for (const auto& [config, totals] : totals_by_config) {
        if (totals.size() != models.size())
            throw ScoringError("model-set mismatch between configurations (config " + config + ")");
        for (const auto& model : models)
            if (!totals.count(model))
                throw ScoringError("configuration " + config + " lacks a total for model " +
                                   model);
    }

    RobustnessMatrix out;
    std::vector<std::vector<double>> series;
    for (const auto& [config, totals] : totals_by_config) {
        out.config_ids.push_back(config);
        std::vector<double> v;
        for (const auto& model : models) v.push_back(totals.at(model));
        series.push_back(std::move(v));
    }
    std::size_t n = series.size();
    out.cells.assign(n, std::vector<double>(n, 1.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double rho = spearman(series[i], series[j]);
            out.cells[i][j] = rho;
            out.cells[j][i] = rho;
        }
    return out;
}

}  // namespace quiet
