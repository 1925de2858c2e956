// quiet command line. Thin wrapper over the shared-library C API: every verb
// maps onto one quiet_* call and the status code becomes the exit code.

#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "quiet/quiet.h"

namespace {

struct Args {
    std::string testset, models, judges, mode = "replay", cache_dir, out, tables,
                configs = "default", exclude;
    int parallelism = 4;
    bool reveal_constraints = false;
    bool embed_context = false;
    bool quiet_output = false;
};

int fail(quiet_status status, char* err) {
    if (err) {
        std::fprintf(stderr, "error: %s\n", err);
        quiet_string_free(err);
    }
    return int(status);
}

quiet_run_options to_options(const Args& args) {
    quiet_run_options opts;
    quiet_run_options_init(&opts);
    opts.testset_path = args.testset.c_str();
    opts.providers_path = args.models.c_str();
    opts.judges = args.judges.empty() ? nullptr : args.judges.c_str();
    opts.mode = args.mode.c_str();
    opts.cache_dir = args.cache_dir.c_str();
    opts.out_dir = args.out.c_str();
    opts.configs = args.configs.c_str();
    opts.parallelism = args.parallelism;
    opts.reveal_constraints = args.reveal_constraints ? 1 : 0;
    opts.embed_context = args.embed_context ? 1 : 0;
    opts.exclude_from_centroid = args.exclude.empty() ? nullptr : args.exclude.c_str();
    return opts;
}

void add_run_flags(CLI::App* cmd, Args& args, bool scoring_verb) {
    cmd->add_option("--testset", args.testset, "test set JSON file")->required();
    cmd->add_option("--models", args.models, "providers JSON file (models/judges/embedding)")
        ->required();
    cmd->add_option("--judges", args.judges, "comma-separated judge subset (default: all)");
    cmd->add_option("--mode", args.mode, "live|replay|record (default: replay)");
    cmd->add_option("--cache-dir", args.cache_dir, "provider record/replay cache directory");
    cmd->add_option("--out", args.out, "run output directory")->required();
    cmd->add_option("--parallelism", args.parallelism, "provider fan-out bound (default: 4)");
    if (scoring_verb) {
        cmd->add_option("--configs", args.configs,
                        "scoring configurations: 'default' or comma-separated ids like "
                        "6pt-soft-C1,3tier-bucket-A");
        cmd->add_option("--exclude-from-centroid", args.exclude,
                        "comma-separated model ids kept out of the surprise centroid");
        cmd->add_flag("--embed-context", args.embed_context,
                      "embed fillings with their surrounding sentence context (both modes "
                      "reported)");
    } else {
        cmd->add_flag("--reveal-constraints", args.reveal_constraints,
                      "show the constraint conditions to evaluated models (ablation)");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quiet — scoring pipeline for cascade-constrained multi-blank cloze tests"};
    app.require_subcommand(1);

    Args args;
    std::string run_dir;

    CLI::App* collect = app.add_subcommand(
        "collect", "query evaluated models once each and persist transcripts");
    add_run_flags(collect, args, false);

    CLI::App* score = app.add_subcommand(
        "score", "judge transcripts, compute surprise, totals and reports");
    add_run_flags(score, args, true);

    CLI::App* stats = app.add_subcommand("stats", "recompute alpha.json for a finished run");
    stats->add_option("--out", run_dir, "run directory")->required();

    CLI::App* sensitivity = app.add_subcommand(
        "sensitivity", "recompute final_scores.spearman.csv for a finished run");
    sensitivity->add_option("--out", run_dir, "run directory")->required();

    CLI::App* verify = app.add_subcommand(
        "verify-paper", "recompute totals from transcribed satisfy/surprise tables and check "
                        "them against the expected totals and ranking");
    verify->add_option("--tables", args.tables, "tables CSV file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : int(QUIET_ERR_USAGE);
    }

    char* err = nullptr;
    if (collect->parsed()) {
        quiet_run_options opts = to_options(args);
        char* artifacts = nullptr;
        quiet_status status = quiet_collect(&opts, &artifacts, &err);
        if (status != QUIET_OK) return fail(status, err);
        std::printf("%s", artifacts);
        quiet_string_free(artifacts);
        return 0;
    }
    if (score->parsed()) {
        quiet_run_options opts = to_options(args);
        char* artifacts = nullptr;
        quiet_status status = quiet_score(&opts, &artifacts, &err);
        if (status != QUIET_OK) return fail(status, err);
        std::printf("%s", artifacts);
        quiet_string_free(artifacts);
        return 0;
    }
    if (stats->parsed()) {
        quiet_status status = quiet_stats(run_dir.c_str(), &err);
        if (status != QUIET_OK) return fail(status, err);
        std::printf("wrote %s/alpha.json\n", run_dir.c_str());
        return 0;
    }
    if (sensitivity->parsed()) {
        quiet_status status = quiet_sensitivity(run_dir.c_str(), &err);
        if (status != QUIET_OK) return fail(status, err);
        std::printf("wrote %s/final_scores.spearman.csv\n", run_dir.c_str());
        return 0;
    }
    if (verify->parsed()) {
        char* report = nullptr;
        int all_pass = 0;
        quiet_status status = quiet_verify_paper(args.tables.c_str(), &report, &all_pass, &err);
        if (status != QUIET_OK) return fail(status, err);
        std::printf("%s", report);
        quiet_string_free(report);
        return all_pass ? 0 : int(QUIET_ERR_SCORING);
    }
    return int(QUIET_ERR_USAGE);
}
