#pragma once

#include <memory>
#include <string>
#include <vector>

#include "core/judge.hpp"
#include "core/providers.hpp"
#include "core/scoring.hpp"
#include "core/stats.hpp"
#include "core/surprise.hpp"
#include "core/testset.hpp"

namespace quiet {

// One scoring configuration: judge scale x group aggregation x composite
// scheme. Id form: "6pt-soft-C1", "3tier-bucket-A", ...
struct ScoringConfig {
    ScaleKind scale = ScaleKind::six_point;
    Aggregation agg = Aggregation::soft_mean;
    CompositeScheme scheme;

    std::string id() const;
    static ScoringConfig parse(const std::string& spec);
};

// The bundled grid is a reconstruction (the exact published set of
// configurations is not enumerated anywhere); fully overridable via
// --configs. Primary configuration first: 6pt-soft-C1.
std::vector<ScoringConfig> default_config_grid();
std::vector<ScoringConfig> parse_configs(const std::string& spec);

struct ProviderSet {
    std::vector<ProviderConfig> models;
    std::vector<ProviderConfig> judges;
    ProviderConfig embedding;
};

ProviderSet load_providers_file(const std::string& path);

struct RunOptions {
    std::string testset_path;
    std::string providers_path;
    std::string judges_filter;  // comma-separated judge names; empty = all
    std::string mode = "replay";
    std::string cache_dir;
    std::string out_dir;
    std::string configs = "default";
    int parallelism = 4;
    bool reveal_constraints = false;
    bool embed_context = false;
    std::vector<std::string> exclude_from_centroid;
    std::shared_ptr<Transport> transport;  // injected by tests / fixture generation
};

struct RunArtifacts {
    std::vector<std::string> paths;
    std::vector<std::string> flagged_models;
};

// Queries every evaluated model once with the standardized prompt and
// persists one transcript per model under <out>/transcripts/.
RunArtifacts cmd_collect(const RunOptions& opts);

// Full scoring pass over collected transcripts: judging, surprise, composite
// totals per configuration, reliability and robustness reports.
RunArtifacts cmd_score(const RunOptions& opts);

// Recomputes alpha.json from the flat judge scores file of a finished run.
void cmd_stats(const std::string& run_dir);

// Recomputes final_scores.spearman.csv from the per-config totals of a
// finished run.
void cmd_sensitivity(const std::string& run_dir);

struct PaperVerifyRow {
    std::string model_id;
    double expected_total = 0;
    double computed_total = 0;
    double tolerance = 0.05;
    int expected_rank = 0;
    int computed_rank = 0;
    bool total_pass = false;
};

struct PaperVerifyReport {
    std::vector<PaperVerifyRow> rows;
    bool totals_pass = false;
    bool rank_match = false;
    bool all_pass = false;
    std::string text;
};

// Recomputes totals from transcribed per-group satisfy/surprise tables under
// scheme C (lambda = 1) and checks them, and the implied ranking, against the
// expected column. Pure function of the CSV; no providers touched.
PaperVerifyReport cmd_verify_paper(const std::string& tables_csv_path);

}  // namespace quiet
