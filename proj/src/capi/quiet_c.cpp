#include "quiet/quiet.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "core/pipeline.hpp"
#include "json.hpp"

using nlohmann::json;

struct quiet_testset {
    quiet::TestSet ts;
};

namespace {

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void set_err(char** err, const std::string& msg) {
    if (err) *err = dup_string(msg);
}

quiet_status status_of(const quiet::Error& e) {
    switch (e.kind()) {
        case quiet::ErrorKind::usage: return QUIET_ERR_USAGE;
        case quiet::ErrorKind::validation: return QUIET_ERR_VALIDATION;
        case quiet::ErrorKind::provider: return QUIET_ERR_PROVIDER;
        case quiet::ErrorKind::scoring: return QUIET_ERR_SCORING;
    }
    return QUIET_ERR_SCORING;
}

template <typename Fn>
quiet_status guarded(char** err, Fn&& fn) {
    try {
        fn();
        return QUIET_OK;
    } catch (const quiet::Error& e) {
        set_err(err, e.what());
        return status_of(e);
    } catch (const std::exception& e) {
        set_err(err, e.what());
        return QUIET_ERR_SCORING;
    }
}

quiet::RunOptions to_run_options(const quiet_run_options* opts) {
    quiet::RunOptions out;
    if (!opts) throw quiet::UsageError("null run options");
    auto str = [](const char* s) { return s ? std::string(s) : std::string(); };
    out.testset_path = str(opts->testset_path);
    out.providers_path = str(opts->providers_path);
    out.judges_filter = str(opts->judges);
    if (opts->mode) out.mode = opts->mode;
    out.cache_dir = str(opts->cache_dir);
    out.out_dir = str(opts->out_dir);
    if (opts->configs) out.configs = opts->configs;
    out.parallelism = opts->parallelism > 0 ? opts->parallelism : 1;
    out.reveal_constraints = opts->reveal_constraints != 0;
    out.embed_context = opts->embed_context != 0;
    for (const auto& m : quiet::split(str(opts->exclude_from_centroid), ','))
        if (!quiet::trim(m).empty()) out.exclude_from_centroid.push_back(quiet::trim(m));
    return out;
}

std::string artifacts_to_json(const quiet::RunArtifacts& a) {
    return json{{"paths", a.paths}, {"flagged_models", a.flagged_models}}.dump(2) + "\n";
}

}  // namespace

extern "C" {

const char* quiet_version(void) { return "1.0.0"; }

void quiet_string_free(char* s) { std::free(s); }

quiet_status quiet_testset_load(const char* path, quiet_testset** out, char** err) {
    if (!path || !out) {
        set_err(err, "null argument");
        return QUIET_ERR_USAGE;
    }
    return guarded(err, [&] {
        auto* handle = new quiet_testset{quiet::load_testset_file(path)};
        *out = handle;
    });
}

quiet_status quiet_testset_load_json(const char* json_text, quiet_testset** out, char** err) {
    if (!json_text || !out) {
        set_err(err, "null argument");
        return QUIET_ERR_USAGE;
    }
    return guarded(err, [&] {
        auto* handle = new quiet_testset{quiet::load_testset(json_text)};
        *out = handle;
    });
}

void quiet_testset_free(quiet_testset* ts) { delete ts; }

int quiet_testset_blank_count(const quiet_testset* ts) {
    return ts ? ts->ts.blank_count() : 0;
}

int quiet_testset_group_count(const quiet_testset* ts) {
    return ts ? int(ts->ts.groups.size()) : 0;
}

quiet_status quiet_testset_validate(const quiet_testset* ts, char** report_json, char** err) {
    if (!ts || !report_json) {
        set_err(err, "null argument");
        return QUIET_ERR_USAGE;
    }
    return guarded(err, [&] {
        quiet::ValidationReport rep = quiet::validate(ts->ts);
        json findings = json::array();
        for (const auto& f : rep.findings)
            findings.push_back(json{{"code", f.code}, {"message", f.message}});
        json doc{{"findings", findings}};
        if (!rep.topo_order.empty() || rep.ok()) doc["topo_order"] = rep.topo_order;
        *report_json = dup_string(doc.dump(2) + "\n");
    });
}

quiet_status quiet_testset_render_prompt(const quiet_testset* ts, int reveal_constraints,
                                         char** prompt, char** err) {
    if (!ts || !prompt) {
        set_err(err, "null argument");
        return QUIET_ERR_USAGE;
    }
    return guarded(err, [&] {
        *prompt = dup_string(quiet::render_prompt(ts->ts, {reveal_constraints != 0}));
    });
}

void quiet_run_options_init(quiet_run_options* opts) {
    if (!opts) return;
    std::memset(opts, 0, sizeof(*opts));
    opts->mode = "replay";
    opts->configs = "default";
    opts->parallelism = 4;
}

quiet_status quiet_collect(const quiet_run_options* opts, char** artifacts_json, char** err) {
    return guarded(err, [&] {
        quiet::RunArtifacts a = quiet::cmd_collect(to_run_options(opts));
        if (artifacts_json) *artifacts_json = dup_string(artifacts_to_json(a));
    });
}

quiet_status quiet_score(const quiet_run_options* opts, char** artifacts_json, char** err) {
    return guarded(err, [&] {
        quiet::RunArtifacts a = quiet::cmd_score(to_run_options(opts));
        if (artifacts_json) *artifacts_json = dup_string(artifacts_to_json(a));
    });
}

quiet_status quiet_stats(const char* run_dir, char** err) {
    if (!run_dir) {
        set_err(err, "null run_dir");
        return QUIET_ERR_USAGE;
    }
    return guarded(err, [&] { quiet::cmd_stats(run_dir); });
}

quiet_status quiet_sensitivity(const char* run_dir, char** err) {
    if (!run_dir) {
        set_err(err, "null run_dir");
        return QUIET_ERR_USAGE;
    }
    return guarded(err, [&] { quiet::cmd_sensitivity(run_dir); });
}

quiet_status quiet_verify_paper(const char* tables_csv, char** report_text, int* all_pass,
                                char** err) {
    if (!tables_csv) {
        set_err(err, "null tables_csv");
        return QUIET_ERR_USAGE;
    }
    return guarded(err, [&] {
        quiet::PaperVerifyReport rep = quiet::cmd_verify_paper(tables_csv);
        if (report_text) *report_text = dup_string(rep.text);
        if (all_pass) *all_pass = rep.all_pass ? 1 : 0;
    });
}

quiet_status quiet_composite(double satisfy, double surprise, const char* scheme, double* out,
                             char** err) {
    if (!scheme || !out) {
        set_err(err, "null argument");
        return QUIET_ERR_USAGE;
    }
    return guarded(err, [&] {
        *out = quiet::composite(satisfy, surprise, quiet::CompositeScheme::parse(scheme));
    });
}

quiet_status quiet_spearman(const double* x, const double* y, size_t n, double* out, char** err) {
    if (!x || !y || !out) {
        set_err(err, "null argument");
        return QUIET_ERR_USAGE;
    }
    return guarded(err, [&] {
        std::vector<double> vx(x, x + n), vy(y, y + n);
        *out = quiet::spearman(vx, vy);
    });
}

}  // extern "C"
