#include "core/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <set>
#include <sstream>

#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace quiet {

// ---------------------------------------------------------------------------
// Scoring configurations

namespace {

std::string scale_short(ScaleKind s) { return s == ScaleKind::six_point ? "6pt" : "3tier"; }
std::string agg_short(Aggregation a) { return a == Aggregation::soft_mean ? "soft" : "bucket"; }

}  // namespace

std::string ScoringConfig::id() const {
    return scale_short(scale) + "-" + agg_short(agg) + "-" + scheme.id();
}

ScoringConfig ScoringConfig::parse(const std::string& spec) {
    auto parts = split(spec, '-');
    if (parts.size() != 3)
        throw UsageError("bad config spec '" + spec + "' (expected <scale>-<agg>-<scheme>)");
    ScoringConfig cfg;
    cfg.scale = parse_scale(parts[0]);
    cfg.agg = parse_aggregation(parts[1]);
    cfg.scheme = CompositeScheme::parse(parts[2]);
    return cfg;
}

std::vector<ScoringConfig> default_config_grid() {
    std::vector<ScoringConfig> grid;
    const double lambdas[] = {1.0, 0.5, 1.5};
    for (ScaleKind scale : {ScaleKind::six_point, ScaleKind::three_tier})
        for (Aggregation agg : {Aggregation::soft_mean, Aggregation::bucket})
            for (double lambda : lambdas)
                grid.push_back({scale, agg, CompositeScheme{SchemeVariant::C, lambda}});
    // Formula ablations run on the main scale.
    for (SchemeVariant v : {SchemeVariant::A, SchemeVariant::D})
        for (Aggregation agg : {Aggregation::soft_mean, Aggregation::bucket})
            grid.push_back({ScaleKind::six_point, agg, CompositeScheme{v, 0.0}});
    // Naive hard-gated baseline: harmonic mean over bucketed groups.
    grid.push_back({ScaleKind::six_point, Aggregation::bucket, CompositeScheme{SchemeVariant::B, 0.0}});

    // Primary configuration (6pt-soft-C1) must come first.
    std::stable_sort(grid.begin(), grid.end(), [](const ScoringConfig& a, const ScoringConfig& b) {
        auto key = [](const ScoringConfig& c) {
            return c.id() == "6pt-soft-C1" ? 0 : 1;
        };
        return key(a) < key(b);
    });
    return grid;
}

std::vector<ScoringConfig> parse_configs(const std::string& spec) {
    if (spec.empty() || spec == "default") return default_config_grid();
    std::vector<ScoringConfig> out;
    std::set<std::string> seen;
    for (const auto& item : split(spec, ',')) {
        std::string s = trim(item);
        if (s.empty()) continue;
        ScoringConfig cfg = ScoringConfig::parse(s);
        if (!seen.insert(cfg.id()).second)
            throw UsageError("duplicate config '" + cfg.id() + "' in --configs");
        out.push_back(cfg);
    }
    if (out.empty()) throw UsageError("--configs selected no configurations");
    return out;
}

// ---------------------------------------------------------------------------
// Providers file

namespace {

ProviderConfig parse_provider(const json& j, ProviderKind default_kind) {
    ProviderConfig cfg;
    cfg.name = j.at("name").get<std::string>();
    if (cfg.name.empty() || cfg.name.find_first_of("/\\") != std::string::npos ||
        cfg.name.find("..") != std::string::npos)
        throw UsageError("provider name '" + cfg.name + "' is not filename-safe");
    std::string kind = j.value("kind", default_kind == ProviderKind::chat ? "chat" : "embedding");
    if (kind == "chat") cfg.kind = ProviderKind::chat;
    else if (kind == "embedding") cfg.kind = ProviderKind::embedding;
    else throw UsageError("provider " + cfg.name + " has unknown kind '" + kind + "'");
    cfg.endpoint = j.value("endpoint", std::string());
    cfg.model = j.value("model", cfg.name);
    cfg.auth_env = j.value("auth", std::string());
    cfg.timeout_s = j.value("timeout", 30.0);
    cfg.max_retries = j.value("max_retries", 2);
    if (cfg.timeout_s <= 0) throw UsageError("provider " + cfg.name + ": timeout must be > 0");
    if (cfg.max_retries < 0) throw UsageError("provider " + cfg.name + ": max_retries must be >= 0");
    return cfg;
}

}  // namespace

ProviderSet load_providers_file(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw UsageError(std::string("providers file parse failure: ") + e.what());
    }
    ProviderSet out;
    try {
        for (const auto& j : doc.at("models")) out.models.push_back(parse_provider(j, ProviderKind::chat));
        for (const auto& j : doc.at("judges")) out.judges.push_back(parse_provider(j, ProviderKind::chat));
        out.embedding = parse_provider(doc.at("embedding"), ProviderKind::embedding);
    } catch (const json::exception& e) {
        throw UsageError(std::string("providers file parse failure: ") + e.what());
    }
    if (out.models.empty()) throw UsageError("providers file lists no models");
    if (out.judges.empty()) throw UsageError("providers file lists no judges");
    return out;
}

// ---------------------------------------------------------------------------
// Shared run helpers

namespace {

struct Transcript {
    std::string model_id;
    std::string raw_text;
    std::map<int, std::string> fillings;
    std::vector<int> missing;
    bool used_fallback = false;
    std::string parse_error;

    bool flagged() const { return !missing.empty() || !parse_error.empty(); }
};

std::string iso_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::tm tm_utc;
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

std::vector<ProviderConfig> filter_judges(const std::vector<ProviderConfig>& judges,
                                          const std::string& filter) {
    if (trim(filter).empty()) return judges;
    std::vector<ProviderConfig> out;
    for (const auto& name : split(filter, ',')) {
        std::string n = trim(name);
        if (n.empty()) continue;
        bool found = false;
        for (const auto& j : judges)
            if (j.name == n) {
                out.push_back(j);
                found = true;
            }
        if (!found) throw UsageError("--judges names unknown judge '" + n + "'");
    }
    if (out.empty()) throw UsageError("--judges selected no judges");
    return out;
}

TestSet load_validated_testset(const std::string& path) {
    TestSet ts = load_testset_file(path);
    ValidationReport rep = validate(ts);
    if (!rep.ok()) {
        std::string msg = "test set '" + ts.id + "' failed validation:";
        for (const auto& f : rep.findings) msg += "\n  [" + f.code + "] " + f.message;
        throw ValidationError(msg);
    }
    return ts;
}

std::string transcripts_dir(const std::string& out_dir) {
    return (fs::path(out_dir) / "transcripts").string();
}

void write_transcript(const std::string& out_dir, const Transcript& t) {
    json fills = json::object();
    for (const auto& [blank, text] : t.fillings) fills[std::to_string(blank)] = text;
    json doc{{"model_id", t.model_id},
             {"raw_text", t.raw_text},
             {"fillings", fills},
             {"missing", t.missing},
             {"used_fallback", t.used_fallback}};
    if (!t.parse_error.empty()) doc["parse_error"] = t.parse_error;
    write_file_atomic((fs::path(transcripts_dir(out_dir)) / (t.model_id + ".json")).string(),
                      doc.dump(2) + "\n");
}

Transcript read_transcript(const std::string& path, const TestSet& ts) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw UsageError("transcript parse failure (" + path + "): " + e.what());
    }
    Transcript t;
    t.model_id = doc.at("model_id").get<std::string>();
    t.raw_text = doc.value("raw_text", std::string());
    t.parse_error = doc.value("parse_error", std::string());
    if (doc.contains("fillings")) {
        std::vector<int> valid = ts.blank_ids_in_order();
        std::set<int> valid_set(valid.begin(), valid.end());
        for (auto it = doc["fillings"].begin(); it != doc["fillings"].end(); ++it) {
            int blank = 0;
            try {
                blank = std::stoi(it.key());
            } catch (const std::exception&) {
                throw UsageError("transcript " + path + " has non-numeric blank key '" +
                                 it.key() + "'");
            }
            std::string filling = it.value().get<std::string>();
            // unknown blanks are ignored; empty fillings count as missing
            if (valid_set.count(blank) && !filling.empty())
                t.fillings[blank] = std::move(filling);
        }
        t.used_fallback = doc.value("used_fallback", false);
        for (int b : valid)
            if (!t.fillings.count(b)) t.missing.push_back(b);
    } else {
        // Raw-text transcripts get the same flag-don't-fail treatment collect
        // applies: an unalignable story leaves the model flagged, not the run dead.
        try {
            ParsedResponse parsed = parse_response_lenient(ts, t.raw_text, t.model_id);
            t.fillings = parsed.response.fillings;
            t.missing = parsed.missing_blanks;
            t.used_fallback = parsed.used_fallback;
            if (!parsed.duplicate_blanks.empty())
                t.parse_error = "duplicate tags for blanks " +
                                std::to_string(parsed.duplicate_blanks.front()) + "...";
        } catch (const Error& e) {
            t.parse_error = e.what();
            t.missing = ts.blank_ids_in_order();
        }
    }
    return t;
}

std::vector<Transcript> read_all_transcripts(const std::string& out_dir, const TestSet& ts) {
    fs::path dir = transcripts_dir(out_dir);
    if (!fs::is_directory(dir))
        throw UsageError("no transcripts directory under " + out_dir + " (run collect first)");
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".json") files.push_back(entry.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw UsageError("no transcripts found under " + dir.string());
    std::vector<Transcript> out;
    for (const auto& f : files) out.push_back(read_transcript(f, ts));
    std::sort(out.begin(), out.end(),
              [](const Transcript& a, const Transcript& b) { return a.model_id < b.model_id; });
    for (std::size_t i = 1; i < out.size(); ++i)
        if (out[i].model_id == out[i - 1].model_id)
            throw UsageError("two transcripts claim model id '" + out[i].model_id + "'");
    return out;
}

// Responses padded with empty strings for missing blanks so that passage
// assembly still works for flagged models.
FilledResponse padded_response(const TestSet& ts, const Transcript& t) {
    FilledResponse r;
    r.model_id = t.model_id;
    r.fillings = t.fillings;
    for (int b : ts.blank_ids_in_order())
        if (!r.fillings.count(b)) r.fillings[b] = "";
    return r;
}

void write_manifest(const RunOptions& opts, const TestSet& ts, const std::string& digest,
                    const ProviderSet& providers, const std::vector<ProviderConfig>& judges,
                    const std::vector<ScoringConfig>& configs,
                    const std::vector<std::string>& flagged, bool completed,
                    const std::string& started_at) {
    bool replay = parse_mode(opts.mode) == Mode::replay;
    std::string finished = completed && !replay ? iso_now() : "";
    json models = json::array();
    for (const auto& m : providers.models) models.push_back(m.name);
    json judge_names = json::array();
    for (const auto& j : judges) judge_names.push_back(j.name);
    json config_ids = json::array();
    for (const auto& c : configs) config_ids.push_back(c.id());
    json doc{{"run_id", (replay ? "replay-" : mode_name(parse_mode(opts.mode)) + "-") +
                            digest.substr(0, 12)},
             {"testset_id", ts.id},
             {"testset_digest", digest},
             {"models", models},
             {"judges", judge_names},
             {"embedding_provider", providers.embedding.name},
             {"configs", config_ids},
             {"mode", opts.mode},
             {"started_at", replay ? "" : started_at},
             {"finished_at", finished},
             {"parallelism", opts.parallelism},
             {"flagged_models", flagged},
             {"completed", completed}};
    write_file_atomic((fs::path(opts.out_dir) / "run_manifest.json").string(), doc.dump(2) + "\n");
}

}  // namespace

// ---------------------------------------------------------------------------
// collect

RunArtifacts cmd_collect(const RunOptions& opts) {
    if (opts.testset_path.empty() || opts.providers_path.empty() || opts.out_dir.empty())
        throw UsageError("collect requires --testset, --models and --out");
    Mode mode = parse_mode(opts.mode);
    std::string raw_doc = read_file(opts.testset_path);
    std::string digest = sha256_hex(raw_doc);
    TestSet ts = load_validated_testset(opts.testset_path);
    ProviderSet providers = load_providers_file(opts.providers_path);
    std::vector<ProviderConfig> judges = filter_judges(providers.judges, opts.judges_filter);

    ProviderClient client(opts.cache_dir, mode, opts.transport);
    std::string prompt = render_prompt(ts, {opts.reveal_constraints});

    std::string started = iso_now();
    std::vector<Transcript> transcripts(providers.models.size());
    parallel_for(providers.models.size(), opts.parallelism, [&](std::size_t i) {
        const ProviderConfig& model = providers.models[i];
        Transcript t;
        t.model_id = model.name;
        t.raw_text = client.chat_complete(model, prompt);
        try {
            ParsedResponse parsed = parse_response_lenient(ts, t.raw_text, model.name);
            t.fillings = parsed.response.fillings;
            t.missing = parsed.missing_blanks;
            t.used_fallback = parsed.used_fallback;
            if (!parsed.duplicate_blanks.empty()) {
                std::string ids;
                for (int b : parsed.duplicate_blanks)
                    ids += (ids.empty() ? "" : ", ") + std::to_string(b);
                t.parse_error = "duplicate tags for blank(s) " + ids;
            }
        } catch (const Error& e) {
            // Transcript kept; the model is flagged and excluded downstream.
            t.parse_error = e.what();
            t.missing = ts.blank_ids_in_order();
        }
        transcripts[i] = std::move(t);
    });

    RunArtifacts artifacts;
    for (const auto& t : transcripts) {
        write_transcript(opts.out_dir, t);
        artifacts.paths.push_back(
            (fs::path(transcripts_dir(opts.out_dir)) / (t.model_id + ".json")).string());
        if (t.flagged()) artifacts.flagged_models.push_back(t.model_id);
    }
    std::sort(artifacts.flagged_models.begin(), artifacts.flagged_models.end());
    write_manifest(opts, ts, digest, providers, judges, {}, artifacts.flagged_models, true,
                   started);
    artifacts.paths.push_back((fs::path(opts.out_dir) / "run_manifest.json").string());
    return artifacts;
}

// ---------------------------------------------------------------------------
// score

namespace {

struct JudgeTask {
    std::size_t model_idx, group_idx, constraint_idx, judge_idx;
};

struct JudgeOutcome {
    bool dropped = false;
    std::string drop_reason;
    JudgeRecord record;
};

struct DroppedJudge {
    std::string judge_id, model_id, constraint_id;
    int group_id;
    std::string reason;
};

struct ScalePass {
    ScaleKind scale;
    std::vector<JudgeRecord> records;
    std::vector<DroppedJudge> dropped;
    // model -> group -> satisfy per aggregation
    std::map<std::string, std::map<int, double>> satisfy_soft;
    std::map<std::string, std::map<int, double>> satisfy_bucket;
    std::map<std::string, std::map<int, std::map<std::string, double>>> constraint_scores;
};

const std::string kRepromptReminder =
    "\n\nYour previous reply could not be parsed. Reply again with exactly two lines:\n"
    "SCORE: <one value from the scale>\nKNOCKOUT: yes|no\n";

ScalePass run_judging(const TestSet& ts, const std::vector<Transcript>& transcripts,
                      const std::vector<ProviderConfig>& judges, ScaleKind scale,
                      ProviderClient& client, int parallelism) {
    ScalePass pass;
    pass.scale = scale;

    // Pre-compute group passages once per (model, group).
    std::vector<FilledResponse> padded;
    padded.reserve(transcripts.size());
    for (const auto& t : transcripts) padded.push_back(padded_response(ts, t));
    std::vector<std::vector<std::string>> passages(transcripts.size());
    for (std::size_t m = 0; m < transcripts.size(); ++m)
        for (const auto& g : ts.groups)
            passages[m].push_back(group_filling_text(ts, padded[m], g.group_id));

    std::vector<JudgeTask> tasks;
    for (std::size_t m = 0; m < transcripts.size(); ++m)
        for (std::size_t g = 0; g < ts.groups.size(); ++g)
            for (std::size_t c = 0; c < ts.groups[g].constraints.size(); ++c)
                for (std::size_t j = 0; j < judges.size(); ++j) tasks.push_back({m, g, c, j});

    std::vector<JudgeOutcome> outcomes(tasks.size());
    parallel_for(tasks.size(), parallelism, [&](std::size_t i) {
        const JudgeTask& task = tasks[i];
        const auto& group = ts.groups[task.group_idx];
        const auto& constraint = group.constraints[task.constraint_idx];
        const auto& judge = judges[task.judge_idx];
        const std::string& passage = passages[task.model_idx][task.group_idx];
        std::string prompt = build_judge_prompt(passage, constraint, scale);

        JudgeOutcome out;
        out.record.judge_id = judge.name;
        out.record.model_id = transcripts[task.model_idx].model_id;
        out.record.group_id = group.group_id;
        out.record.constraint_id = constraint.id;
        bool parsed = false;
        for (int attempt = 0; attempt < 2 && !parsed; ++attempt) {
            std::string text =
                client.chat_complete(judge, attempt == 0 ? prompt : prompt + kRepromptReminder);
            try {
                auto [raw, knocked] = parse_judge_output(text, scale);
                out.record.raw = raw;
                out.record.knockout_triggered = knocked;
                out.record.capped = apply_knockout(raw, knocked, scale);
                parsed = true;
            } catch (const Error& e) {
                out.drop_reason = e.what();
            }
        }
        out.dropped = !parsed;
        outcomes[i] = std::move(out);
    });

    // Deterministic fold in task order.
    std::map<std::tuple<std::string, int, std::string>, std::vector<JudgeRecord>> by_triple;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const JudgeOutcome& out = outcomes[i];
        if (out.dropped) {
            pass.dropped.push_back({out.record.judge_id, out.record.model_id,
                                    out.record.constraint_id, out.record.group_id,
                                    out.drop_reason});
            continue;
        }
        pass.records.push_back(out.record);
        by_triple[{out.record.model_id, out.record.group_id, out.record.constraint_id}].push_back(
            out.record);
    }

    for (const auto& t : transcripts) {
        for (const auto& g : ts.groups) {
            std::vector<ConstraintScore> scores;
            for (const auto& c : g.constraints) {
                auto it = by_triple.find({t.model_id, g.group_id, c.id});
                if (it == by_triple.end() || it->second.empty())
                    throw ScoringError("all judges dropped for model " + t.model_id +
                                       ", group " + std::to_string(g.group_id) +
                                       ", constraint " + c.id);
                ConstraintScore cs = ensemble_constraint_score(it->second, scale);
                pass.constraint_scores[t.model_id][g.group_id][c.id] = cs.value;
                scores.push_back(std::move(cs));
            }
            pass.satisfy_soft[t.model_id][g.group_id] =
                group_satisfy(scores, g, Aggregation::soft_mean).value;
            pass.satisfy_bucket[t.model_id][g.group_id] =
                group_satisfy(scores, g, Aggregation::bucket).value;
        }
    }
    return pass;
}

SurpriseTable run_surprise(const TestSet& ts, const std::vector<Transcript>& transcripts,
                           const ProviderConfig& embedding, ProviderClient& client,
                           int parallelism, bool with_context,
                           const std::vector<std::string>& exclude_from_centroid) {
    struct EmbedTask {
        std::size_t model_idx;
        int blank_id;
        std::string text;
    };
    std::vector<FilledResponse> padded;
    for (const auto& t : transcripts) padded.push_back(padded_response(ts, t));

    std::vector<EmbedTask> tasks;
    for (std::size_t m = 0; m < transcripts.size(); ++m) {
        for (const auto& [blank, filling] : transcripts[m].fillings) {
            if (filling.empty()) continue;
            std::string text =
                with_context ? blank_context_window(ts, padded[m], blank) : filling;
            tasks.push_back({m, blank, std::move(text)});
        }
    }
    std::vector<EmbeddingVector> vectors(tasks.size());
    parallel_for(tasks.size(), parallelism, [&](std::size_t i) {
        vectors[i] = unitize(client.embed(embedding, tasks[i].text));
    });

    std::map<int, BlankCohort> cohorts;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        BlankCohort& cohort = cohorts[tasks[i].blank_id];
        cohort.blank_id = tasks[i].blank_id;
        cohort.entries[transcripts[tasks[i].model_idx].model_id] = vectors[i];
    }

    std::set<std::string> excluded(exclude_from_centroid.begin(), exclude_from_centroid.end());
    SurpriseTable table;
    for (auto& [blank, cohort] : cohorts) {
        BlankCohort centroid_cohort;
        centroid_cohort.blank_id = blank;
        for (const auto& [model, vec] : cohort.entries)
            if (!excluded.count(model)) centroid_cohort.entries.emplace(model, vec);
        if (centroid_cohort.entries.empty())
            throw UsageError("--exclude-from-centroid removed every model from the cohort");
        EmbeddingVector center = centroid(centroid_cohort);
        std::map<std::string, double> raw;
        for (const auto& [model, vec] : cohort.entries)
            // identical vectors can land a hair below zero numerically
            raw[model] = std::max(0.0, cosine_distance(vec, center));
        table.raw[blank] = raw;
        table.normalized[blank] = normalize_per_blank(raw);
    }
    // Missing fillings carry zero surprise (no deviation credit) and are flagged.
    for (const auto& t : transcripts)
        for (int b : t.missing) {
            table.raw[b][t.model_id] = 0.0;
            table.normalized[b][t.model_id] = 0.0;
        }
    for (const auto& g : ts.groups)
        for (const auto& t : transcripts)
            table.group[g.group_id][t.model_id] = group_surprise(table, g, t.model_id);
    return table;
}

// --- CSV / report emission -------------------------------------------------

void emit(std::vector<std::string>& paths, const std::string& path, const std::string& content) {
    write_file_atomic(path, content);
    paths.push_back(path);
}

std::string wide_table_csv(const TestSet& ts, const std::vector<Transcript>& transcripts,
                           const std::map<std::string, std::map<int, double>>& per_model_group,
                           int cell_decimals, int mean_decimals, bool full_precision) {
    std::ostringstream out;
    out << "model_id";
    for (const auto& g : ts.groups) out << ",g" << g.group_id;
    out << ",mean\n";
    for (const auto& t : transcripts) {
        out << csv_cell(t.model_id);
        double sum = 0;
        for (const auto& g : ts.groups) {
            double v = per_model_group.at(t.model_id).at(g.group_id);
            sum += v;
            out << "," << (full_precision ? fmt_full(v) : fmt_fixed(v, cell_decimals));
        }
        double mean = sum / double(ts.groups.size());
        out << "," << (full_precision ? fmt_full(mean) : fmt_fixed(mean, mean_decimals)) << "\n";
    }
    return out.str();
}

std::string judge_scores_csv(const std::vector<JudgeRecord>& records, ScaleKind scale) {
    std::ostringstream out;
    out << "judge_id,model_id,group_id,constraint_id,raw,knockout,capped,normalized\n";
    for (const auto& r : records) {
        char raw[32], capped[32], norm[32];
        std::snprintf(raw, sizeof(raw), "%g", r.raw);
        std::snprintf(capped, sizeof(capped), "%g", r.capped);
        std::snprintf(norm, sizeof(norm), "%g", normalize_score(r.capped, scale));
        out << csv_cell(r.judge_id) << "," << csv_cell(r.model_id) << "," << r.group_id << ","
            << csv_cell(r.constraint_id) << "," << raw << ","
            << (r.knockout_triggered ? "yes" : "no") << "," << capped << "," << norm << "\n";
    }
    return out.str();
}

std::string final_scores_csv(const TestSet& ts, const std::vector<ModelTotal>& board,
                             const std::map<std::string, std::vector<GroupScore>>& group_scores,
                             bool full_precision) {
    std::ostringstream out;
    out << "rank,model_id,satisfy_mean,surprise_mean,total";
    for (const auto& g : ts.groups) out << ",g" << g.group_id;
    out << "\n";
    for (const auto& row : board) {
        out << row.rank << "," << csv_cell(row.model_id) << ","
            << (full_precision ? fmt_full(row.satisfy_mean) : fmt_fixed(row.satisfy_mean, 3))
            << ","
            << (full_precision ? fmt_full(row.surprise_mean) : fmt_fixed(row.surprise_mean, 3))
            << "," << (full_precision ? fmt_full(row.total) : fmt_fixed(row.total, 2));
        for (const auto& gs : group_scores.at(row.model_id))
            out << "," << (full_precision ? fmt_full(gs.composite) : fmt_fixed(gs.composite, 4));
        out << "\n";
    }
    return out.str();
}

std::string spearman_csv(const RobustnessMatrix& m) {
    std::ostringstream out;
    out << "config";
    for (const auto& id : m.config_ids) out << "," << csv_cell(id);
    out << "\n";
    for (std::size_t i = 0; i < m.config_ids.size(); ++i) {
        out << csv_cell(m.config_ids[i]);
        for (std::size_t j = 0; j < m.config_ids.size(); ++j)
            out << "," << fmt_fixed(m.cells[i][j], 3);
        out << "\n";
    }
    return out.str();
}

}  // namespace

RunArtifacts cmd_score(const RunOptions& opts) {
    if (opts.testset_path.empty() || opts.providers_path.empty() || opts.out_dir.empty())
        throw UsageError("score requires --testset, --models and --out");
    Mode mode = parse_mode(opts.mode);
    std::string raw_doc = read_file(opts.testset_path);
    std::string digest = sha256_hex(raw_doc);
    TestSet ts = load_validated_testset(opts.testset_path);
    ProviderSet providers = load_providers_file(opts.providers_path);
    std::vector<ProviderConfig> judges = filter_judges(providers.judges, opts.judges_filter);
    std::vector<ScoringConfig> configs = parse_configs(opts.configs);

    ProviderClient client(opts.cache_dir, mode, opts.transport);
    std::vector<Transcript> transcripts = read_all_transcripts(opts.out_dir, ts);

    RunArtifacts artifacts;
    for (const auto& t : transcripts)
        if (t.flagged()) artifacts.flagged_models.push_back(t.model_id);

    // Manifest goes down before any scoring output.
    std::string started = iso_now();
    write_manifest(opts, ts, digest, providers, judges, configs, artifacts.flagged_models, false,
                   started);
    artifacts.paths.push_back((fs::path(opts.out_dir) / "run_manifest.json").string());

    // Judge every scale that any configuration asks for, in first-use order.
    std::vector<ScaleKind> scales;
    for (const auto& c : configs)
        if (std::find(scales.begin(), scales.end(), c.scale) == scales.end())
            scales.push_back(c.scale);
    std::map<ScaleKind, ScalePass> passes;
    for (ScaleKind scale : scales)
        passes.emplace(scale,
                       run_judging(ts, transcripts, judges, scale, client, opts.parallelism));
    const ScalePass& primary_pass = passes.at(scales.front());

    // Surprise (embedding geometry); optionally both input modes.
    SurpriseTable surprise_active =
        run_surprise(ts, transcripts, providers.embedding, client, opts.parallelism,
                     opts.embed_context, opts.exclude_from_centroid);
    SurpriseTable surprise_text_only;
    if (opts.embed_context)
        surprise_text_only = run_surprise(ts, transcripts, providers.embedding, client,
                                          opts.parallelism, false, opts.exclude_from_centroid);

    // Cascade consistency: reported per edge, never part of totals. Judges
    // fall under the same reprompt-once-then-drop policy as constraint scoring.
    std::vector<FilledResponse> padded;
    for (const auto& t : transcripts) padded.push_back(padded_response(ts, t));
    std::vector<CascadeScore> cascades;
    std::vector<std::string> cascade_drops;
    {
        struct CascadeTask {
            std::size_t model_idx, edge_idx, judge_idx;
        };
        std::vector<CascadeTask> tasks;
        for (std::size_t m = 0; m < transcripts.size(); ++m)
            for (std::size_t e = 0; e < ts.edges.size(); ++e)
                for (std::size_t j = 0; j < judges.size(); ++j) tasks.push_back({m, e, j});
        std::vector<std::string> prompts(transcripts.size() * ts.edges.size());
        for (std::size_t m = 0; m < transcripts.size(); ++m)
            for (std::size_t e = 0; e < ts.edges.size(); ++e) {
                const auto& edge = ts.edges[e];
                if (trim(edge.criterion).empty())
                    throw UsageError("cascade edge " + std::to_string(edge.from_group) + "->" +
                                     std::to_string(edge.to_group) + " has no criterion text");
                prompts[m * ts.edges.size() + e] = build_cascade_prompt(
                    group_filling_text(ts, padded[m], edge.from_group),
                    group_filling_text(ts, padded[m], edge.to_group), edge.criterion,
                    scales.front());
            }
        struct CascadeOutcome {
            bool dropped = false;
            double normalized = 0;
        };
        std::vector<CascadeOutcome> outcomes(tasks.size());
        parallel_for(tasks.size(), opts.parallelism, [&](std::size_t i) {
            const CascadeTask& task = tasks[i];
            const std::string& prompt = prompts[task.model_idx * ts.edges.size() + task.edge_idx];
            CascadeOutcome out;
            bool parsed = false;
            for (int attempt = 0; attempt < 2 && !parsed; ++attempt) {
                std::string text = client.chat_complete(
                    judges[task.judge_idx], attempt == 0 ? prompt : prompt + kRepromptReminder);
                try {
                    auto [raw, knocked] = parse_judge_output(text, scales.front());
                    (void)knocked;
                    out.normalized = normalize_score(raw, scales.front());
                    parsed = true;
                } catch (const Error&) {
                }
            }
            out.dropped = !parsed;
            outcomes[i] = out;
        });
        for (std::size_t m = 0; m < transcripts.size(); ++m)
            for (std::size_t e = 0; e < ts.edges.size(); ++e) {
                double sum = 0;
                int n = 0;
                for (std::size_t j = 0; j < judges.size(); ++j) {
                    const CascadeOutcome& out =
                        outcomes[(m * ts.edges.size() + e) * judges.size() + j];
                    if (out.dropped) {
                        cascade_drops.push_back(judges[j].name + " on (" +
                                                transcripts[m].model_id + ", G" +
                                                std::to_string(ts.edges[e].from_group) + "->G" +
                                                std::to_string(ts.edges[e].to_group) + ")");
                        continue;
                    }
                    sum += out.normalized;
                    ++n;
                }
                if (n == 0)
                    throw ScoringError("all judges dropped on cascade edge " +
                                       std::to_string(ts.edges[e].from_group) + "->" +
                                       std::to_string(ts.edges[e].to_group) + " for model " +
                                       transcripts[m].model_id);
                cascades.push_back({transcripts[m].model_id, ts.edges[e].from_group,
                                    ts.edges[e].to_group, sum / double(n)});
            }
    }

    // Composite totals per configuration.
    struct ConfigResult {
        ScoringConfig config;
        std::vector<ModelTotal> board;
        std::map<std::string, std::vector<GroupScore>> group_scores;
    };
    std::vector<ConfigResult> results;
    for (const auto& config : configs) {
        const ScalePass& pass = passes.at(config.scale);
        ConfigResult res;
        res.config = config;
        std::vector<ModelTotal> totals;
        for (const auto& t : transcripts) {
            const auto& satisfy = config.agg == Aggregation::soft_mean
                                      ? pass.satisfy_soft.at(t.model_id)
                                      : pass.satisfy_bucket.at(t.model_id);
            std::vector<GroupScore> groups;
            for (const auto& g : ts.groups) {
                GroupScore gs;
                gs.model_id = t.model_id;
                gs.group_id = g.group_id;
                gs.satisfy = satisfy.at(g.group_id);
                gs.surprise = surprise_active.group.at(g.group_id).at(t.model_id);
                gs.composite = composite(gs.satisfy, gs.surprise, config.scheme);
                groups.push_back(gs);
            }
            totals.push_back(model_total(t.model_id, groups, ts.groups.size()));
            res.group_scores[t.model_id] = std::move(groups);
        }
        res.board = leaderboard(std::move(totals));
        results.push_back(std::move(res));
    }

    // Reliability over the primary scale's raw integer scores.
    ReliabilityMatrix reliability;
    for (const auto& j : judges) reliability.raters.push_back(j.name);
    {
        std::set<std::pair<std::string, std::string>> item_keys;
        for (const auto& r : primary_pass.records)
            item_keys.insert({r.constraint_id, r.model_id});
        for (const auto& [cid, model] : item_keys) reliability.items.push_back(cid + "|" + model);
        reliability.resize();
        std::map<std::string, std::size_t> item_index, rater_index;
        for (std::size_t i = 0; i < reliability.items.size(); ++i)
            item_index[reliability.items[i]] = i;
        for (std::size_t i = 0; i < reliability.raters.size(); ++i)
            rater_index[reliability.raters[i]] = i;
        for (const auto& r : primary_pass.records)
            reliability.set(item_index.at(r.constraint_id + "|" + r.model_id),
                            rater_index.at(r.judge_id), r.raw);
    }
    double alpha = 0;
    std::string alpha_error;
    DriftDiagnostic drift;
    try {
        alpha = krippendorff_alpha(reliability);
        drift = drift_diagnostic(reliability);
    } catch (const Error& e) {
        alpha_error = e.what();
    }
    std::size_t n_points = 0;
    for (const auto& row : reliability.values)
        for (const auto& cell : row)
            if (cell) ++n_points;

    // Robustness matrix across configurations.
    RobustnessMatrix robustness;
    if (results.size() == 1) {
        robustness.config_ids = {results[0].config.id()};
        robustness.cells = {{1.0}};
    } else {
        std::vector<std::pair<std::string, std::map<std::string, double>>> totals_by_config;
        for (const auto& res : results) {
            std::map<std::string, double> totals;
            for (const auto& row : res.board) totals[row.model_id] = row.total;
            totals_by_config.emplace_back(res.config.id(), std::move(totals));
        }
        robustness = robustness_matrix(totals_by_config);
    }

    // --- artifact emission ---
    fs::path out(opts.out_dir);
    emit(artifacts.paths, (out / "judge_scores.csv").string(),
         judge_scores_csv(primary_pass.records, scales.front()));
    for (std::size_t s = 1; s < scales.size(); ++s)
        emit(artifacts.paths,
             (out / ("judge_scores_" + scale_name(scales[s]) + ".csv")).string(),
             judge_scores_csv(passes.at(scales[s]).records, scales[s]));

    emit(artifacts.paths, (out / "table1_satisfy.csv").string(),
         wide_table_csv(ts, transcripts, primary_pass.satisfy_soft, 2, 3, false));
    emit(artifacts.paths, (out / "table1_satisfy_full.csv").string(),
         wide_table_csv(ts, transcripts, primary_pass.satisfy_soft, 0, 0, true));

    auto group_table = [&](const SurpriseTable& table) {
        std::map<std::string, std::map<int, double>> per_model_group;
        for (const auto& [gid, models] : table.group)
            for (const auto& [model, v] : models) per_model_group[model][gid] = v;
        return per_model_group;
    };
    emit(artifacts.paths, (out / "table2_surprise.csv").string(),
         wide_table_csv(ts, transcripts, group_table(surprise_active), 3, 3, false));
    emit(artifacts.paths, (out / "table2_surprise_full.csv").string(),
         wide_table_csv(ts, transcripts, group_table(surprise_active), 0, 0, true));
    if (opts.embed_context) {
        emit(artifacts.paths, (out / "table2_surprise_text_only.csv").string(),
             wide_table_csv(ts, transcripts, group_table(surprise_text_only), 3, 3, false));
        emit(artifacts.paths, (out / "table2_surprise_text_only_full.csv").string(),
             wide_table_csv(ts, transcripts, group_table(surprise_text_only), 0, 0, true));
    }

    {
        std::ostringstream blanks;
        blanks << "blank_id,model_id,raw_distance,normalized\n";
        for (const auto& [blank, models] : surprise_active.raw)
            for (const auto& [model, d] : models)
                blanks << blank << "," << csv_cell(model) << "," << fmt_full(d) << ","
                       << fmt_full(surprise_active.normalized.at(blank).at(model)) << "\n";
        emit(artifacts.paths, (out / "surprise_blanks.csv").string(), blanks.str());

        std::ostringstream groups3, groupsf;
        groups3 << "group_id,model_id,group_surprise\n";
        groupsf << "group_id,model_id,group_surprise\n";
        for (const auto& [gid, models] : surprise_active.group)
            for (const auto& [model, v] : models) {
                groups3 << gid << "," << csv_cell(model) << "," << fmt_fixed(v, 3) << "\n";
                groupsf << gid << "," << csv_cell(model) << "," << fmt_full(v) << "\n";
            }
        emit(artifacts.paths, (out / "surprise_groups.csv").string(), groups3.str());
        emit(artifacts.paths, (out / "surprise_groups_full.csv").string(), groupsf.str());
    }

    {
        std::ostringstream cas;
        cas << "model_id,from_group,to_group,value\n";
        for (const auto& c : cascades)
            cas << csv_cell(c.model_id) << "," << c.from_group << "," << c.to_group << ","
                << fmt_fixed(c.value, 4) << "\n";
        emit(artifacts.paths, (out / "cascade.csv").string(), cas.str());
    }

    for (const auto& res : results) {
        fs::path cfg_dir = out / "configs" / res.config.id();
        emit(artifacts.paths, (cfg_dir / "final_scores.csv").string(),
             final_scores_csv(ts, res.board, res.group_scores, false));
        emit(artifacts.paths, (cfg_dir / "final_scores_full.csv").string(),
             final_scores_csv(ts, res.board, res.group_scores, true));
    }
    emit(artifacts.paths, (out / "final_scores.csv").string(),
         final_scores_csv(ts, results.front().board, results.front().group_scores, false));
    emit(artifacts.paths, (out / "final_scores_full.csv").string(),
         final_scores_csv(ts, results.front().board, results.front().group_scores, true));

    emit(artifacts.paths, (out / "final_scores.spearman.csv").string(),
         spearman_csv(robustness));

    {
        json alpha_doc{{"n_items", reliability.items.size()},
                       {"n_raters", reliability.raters.size()},
                       {"n_points", n_points},
                       {"metric", "interval"},
                       {"scale", scale_name(scales.front())}};
        if (alpha_error.empty()) {
            alpha_doc["alpha"] = alpha;
            alpha_doc["within_item"] = drift.within_item;
            alpha_doc["between_item"] = drift.between_item;
        } else {
            alpha_doc["alpha"] = nullptr;
            alpha_doc["error"] = alpha_error;
        }
        emit(artifacts.paths, (out / "alpha.json").string(), alpha_doc.dump(2) + "\n");
    }

    // report.md
    {
        std::ostringstream md;
        const auto& primary = results.front();
        md << "# Scoring report\n\n";
        md << "- Test set: " << ts.id << " (digest " << digest.substr(0, 12) << ", "
           << ts.blank_count() << " blanks, " << ts.groups.size() << " groups)\n";
        md << "- Mode: " << opts.mode << "; models: " << transcripts.size()
           << "; judges: " << judges.size() << "; embedding: " << providers.embedding.name
           << "\n";
        md << "- Configurations: " << configs.size()
           << (opts.configs == "default" || opts.configs.empty()
                   ? " (default grid; a reconstruction, override with --configs)"
                   : "")
           << "\n\n";
        md << "## Leaderboard (" << primary.config.id() << ")\n\n";
        md << "| rank | model | satisfy | surprise | total |\n";
        md << "|---:|:---|---:|---:|---:|\n";
        for (const auto& row : primary.board)
            md << "| " << row.rank << " | " << row.model_id << " | "
               << fmt_fixed(row.satisfy_mean, 3) << " | " << fmt_fixed(row.surprise_mean, 3)
               << " | " << fmt_fixed(row.total, 2) << " |\n";
        md << "\n## Reliability\n\n";
        if (alpha_error.empty()) {
            md << "- Krippendorff alpha (interval disagreement, raw " +
                      scale_name(scales.front()) + " scores): "
               << fmt_fixed(alpha, 3) << " over " << reliability.items.size() << " items x "
               << reliability.raters.size() << " raters (" << n_points << " ratings)\n";
            md << "- Judgment drift: within-item " << fmt_fixed(drift.within_item, 3)
               << " vs between-item " << fmt_fixed(drift.between_item, 3) << " (ratio "
               << (drift.between_item > 0
                       ? fmt_fixed(drift.within_item / drift.between_item, 3)
                       : std::string("n/a"))
               << ")\n";
        } else {
            md << "- Krippendorff alpha: undefined (" << alpha_error << ")\n";
        }
        md << "\n## Robustness\n\n";
        double min_rho = 2.0;
        std::string min_pair;
        for (std::size_t i = 0; i < robustness.config_ids.size(); ++i)
            for (std::size_t j = i + 1; j < robustness.config_ids.size(); ++j)
                if (robustness.cells[i][j] < min_rho) {
                    min_rho = robustness.cells[i][j];
                    min_pair = robustness.config_ids[i] + " vs " + robustness.config_ids[j];
                }
        if (!min_pair.empty())
            md << "- Minimum pairwise rank Spearman: " << fmt_fixed(min_rho, 3) << " (" << min_pair
               << ")\n";
        md << "- Full matrix: final_scores.spearman.csv\n";
        md << "\n## Cascade consistency (reported only; excluded from totals)\n\n";
        md << "| model | edge | score |\n|:---|:---|---:|\n";
        for (const auto& c : cascades)
            md << "| " << c.model_id << " | G" << c.from_group << "->G" << c.to_group << " | "
               << fmt_fixed(c.value, 3) << " |\n";
        md << "\n## Flags\n\n";
        int knockouts = 0;
        for (const auto& r : primary_pass.records)
            if (r.knockout_triggered) ++knockouts;
        md << "- Knockout triggers (" << scale_name(scales.front()) << "): " << knockouts << "\n";
        if (artifacts.flagged_models.empty()) {
            md << "- Incomplete responses: none\n";
        } else {
            md << "- Incomplete responses (excluded from surprise cohorts at missing blanks):\n";
            for (const auto& m : artifacts.flagged_models) md << "  - " << m << "\n";
        }
        std::size_t total_dropped = cascade_drops.size();
        for (const auto& [scale, pass] : passes) total_dropped += pass.dropped.size();
        if (total_dropped == 0) {
            md << "- Dropped judges: none\n";
        } else {
            md << "- Dropped judges (unparsable after one reprompt):\n";
            for (const auto& [scale, pass] : passes)
                for (const auto& d : pass.dropped)
                    md << "  - " << d.judge_id << " on (" << d.model_id << ", G" << d.group_id
                       << ", " << d.constraint_id << ") [" << scale_name(scale) << "]\n";
            for (const auto& d : cascade_drops) md << "  - " << d << " [cascade]\n";
        }
        emit(artifacts.paths, (out / "report.md").string(), md.str());
    }

    write_manifest(opts, ts, digest, providers, judges, configs, artifacts.flagged_models, true,
                   started);

    for (const auto& p : artifacts.paths)
        if (!fs::exists(p)) throw ScoringError("artifact missing after run: " + p);
    return artifacts;
}

// ---------------------------------------------------------------------------
// stats / sensitivity over a finished run

void cmd_stats(const std::string& run_dir) {
    fs::path dir(run_dir);
    std::string primary_scale;
    try {
        json manifest = json::parse(read_file((dir / "run_manifest.json").string()));
        auto configs = manifest.at("configs").get<std::vector<std::string>>();
        if (!configs.empty()) primary_scale = scale_name(ScoringConfig::parse(configs[0]).scale);
    } catch (...) {
        // judge_scores.csv alone is enough; the scale label is informational
    }
    std::string csv = read_file((dir / "judge_scores.csv").string());
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw UsageError("judge_scores.csv is empty");
    auto header = csv_split_line(line);
    auto col = [&header](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw UsageError("judge_scores.csv lacks column " + name);
    };
    std::size_t c_judge = col("judge_id"), c_model = col("model_id"),
                c_constraint = col("constraint_id"), c_raw = col("raw");

    std::set<std::string> judges;
    std::map<std::pair<std::string, std::string>, std::map<std::string, double>> cells;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto cells_line = csv_split_line(line);
        std::string judge = cells_line.at(c_judge);
        judges.insert(judge);
        cells[{cells_line.at(c_constraint), cells_line.at(c_model)}][judge] =
            std::stod(cells_line.at(c_raw));
    }

    ReliabilityMatrix m;
    m.raters.assign(judges.begin(), judges.end());
    for (const auto& [key, by_judge] : cells) m.items.push_back(key.first + "|" + key.second);
    m.resize();
    std::size_t item = 0;
    for (const auto& [key, by_judge] : cells) {
        for (std::size_t r = 0; r < m.raters.size(); ++r) {
            auto it = by_judge.find(m.raters[r]);
            if (it != by_judge.end()) m.set(item, r, it->second);
        }
        ++item;
    }
    std::size_t n_points = 0;
    for (const auto& row : m.values)
        for (const auto& cell : row)
            if (cell) ++n_points;

    json doc{{"n_items", m.items.size()},
             {"n_raters", m.raters.size()},
             {"n_points", n_points},
             {"metric", "interval"}};
    if (!primary_scale.empty()) doc["scale"] = primary_scale;
    try {
        doc["alpha"] = krippendorff_alpha(m);
        DriftDiagnostic drift = drift_diagnostic(m);
        doc["within_item"] = drift.within_item;
        doc["between_item"] = drift.between_item;
    } catch (const Error& e) {
        doc["alpha"] = nullptr;
        doc["error"] = e.what();
    }
    write_file_atomic((dir / "alpha.json").string(), doc.dump(2) + "\n");
}

void cmd_sensitivity(const std::string& run_dir) {
    fs::path dir(run_dir);
    json manifest;
    try {
        manifest = json::parse(read_file((dir / "run_manifest.json").string()));
    } catch (const json::exception& e) {
        throw UsageError(std::string("run_manifest.json parse failure: ") + e.what());
    }
    std::vector<std::string> config_ids = manifest.at("configs").get<std::vector<std::string>>();
    if (config_ids.empty()) throw UsageError("run manifest lists no configurations");

    std::vector<std::pair<std::string, std::map<std::string, double>>> totals_by_config;
    for (const auto& id : config_ids) {
        std::string csv = read_file((dir / "configs" / id / "final_scores_full.csv").string());
        std::istringstream in(csv);
        std::string line;
        std::getline(in, line);
        auto header = csv_split_line(line);
        std::size_t c_model = 0, c_total = 0;
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == "model_id") c_model = i;
            if (header[i] == "total") c_total = i;
        }
        std::map<std::string, double> totals;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            auto cells = csv_split_line(line);
            totals[cells.at(c_model)] = std::stod(cells.at(c_total));
        }
        totals_by_config.emplace_back(id, std::move(totals));
    }

    RobustnessMatrix m;
    if (totals_by_config.size() == 1) {
        m.config_ids = {totals_by_config[0].first};
        m.cells = {{1.0}};
    } else {
        m = robustness_matrix(totals_by_config);
    }
    write_file_atomic((dir / "final_scores.spearman.csv").string(), spearman_csv(m));
}

// ---------------------------------------------------------------------------
// verify-paper

PaperVerifyReport cmd_verify_paper(const std::string& tables_csv_path) {
    std::string csv = read_file(tables_csv_path);
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw UsageError("paper tables file is empty");
    auto header = csv_split_line(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[trim(header[i])] = i;
    for (const char* required : {"model_id", "expected_rank", "expected_total"})
        if (!col.count(required))
            throw UsageError(std::string("paper tables file lacks column ") + required);
    std::vector<std::size_t> sat_cols, sur_cols;
    for (int g = 1;; ++g) {
        auto sat = col.find("sat_g" + std::to_string(g));
        auto sur = col.find("sur_g" + std::to_string(g));
        if (sat == col.end() && sur == col.end()) break;
        if (sat == col.end() || sur == col.end())
            throw UsageError("paper tables file has mismatched sat_g/sur_g columns at g" +
                             std::to_string(g));
        sat_cols.push_back(sat->second);
        sur_cols.push_back(sur->second);
    }
    if (sat_cols.empty()) throw UsageError("paper tables file has no sat_g*/sur_g* columns");

    PaperVerifyReport report;
    CompositeScheme scheme{SchemeVariant::C, 1.0};
    std::vector<ModelTotal> printed_totals;
    std::map<std::string, PaperVerifyRow> rows;
    std::vector<std::string> model_order;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto cells = csv_split_line(line);
        PaperVerifyRow row;
        row.model_id = cells.at(col.at("model_id"));
        row.expected_rank = std::stoi(cells.at(col.at("expected_rank")));
        row.expected_total = std::stod(cells.at(col.at("expected_total")));
        row.tolerance = col.count("tolerance") ? std::stod(cells.at(col.at("tolerance"))) : 0.05;

        double total = 0, satisfy_sum = 0;
        for (std::size_t g = 0; g < sat_cols.size(); ++g) {
            double s = std::stod(cells.at(sat_cols[g]));
            double u = std::stod(cells.at(sur_cols[g]));
            total += composite(s, u, scheme);
            satisfy_sum += s;
        }
        row.computed_total = total;
        row.total_pass = std::abs(total - row.expected_total) <= row.tolerance;

        // Rank agreement is checked over the printed totals (the recomputed
        // ones carry rounding residue from the 2/3-decimal table cells), so
        // display ties resolve exactly as the leaderboard rules say:
        // satisfy_mean from the transcribed cells breaks them.
        ModelTotal mt;
        mt.model_id = row.model_id;
        mt.total = row.expected_total;
        mt.satisfy_mean = satisfy_sum / double(sat_cols.size());
        printed_totals.push_back(mt);

        model_order.push_back(row.model_id);
        rows[row.model_id] = row;
    }
    if (rows.empty()) throw UsageError("paper tables file has no data rows");

    std::vector<ModelTotal> board = leaderboard(std::move(printed_totals));
    for (const auto& entry : board) rows[entry.model_id].computed_rank = entry.rank;

    report.totals_pass = true;
    report.rank_match = true;
    std::ostringstream text;
    for (const auto& model : model_order) {
        const PaperVerifyRow& row = rows[model];
        report.rows.push_back(row);
        if (!row.total_pass) report.totals_pass = false;
        if (row.computed_rank != row.expected_rank) report.rank_match = false;
        text << (row.total_pass ? "PASS" : "FAIL") << " " << row.model_id << ": computed "
             << fmt_fixed(row.computed_total, 4) << " expected " << fmt_fixed(row.expected_total, 2)
             << " (tolerance " << fmt_fixed(row.tolerance, 2) << ", diff "
             << fmt_fixed(std::abs(row.computed_total - row.expected_total), 4) << ")\n";
    }
    text << (report.rank_match ? "PASS" : "FAIL") << " rank order "
         << (report.rank_match ? "matches" : "does not match") << " the expected ranking\n";
    report.all_pass = report.totals_pass && report.rank_match;
    text << "overall: " << (report.all_pass ? "PASS" : "FAIL") << " (" << report.rows.size()
         << " models)\n";
    report.text = text.str();
    return report;
}

}  // namespace quiet
