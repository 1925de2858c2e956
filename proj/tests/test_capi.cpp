// C API surface checks; this binary links the shared library only.
#include <cmath>
#include <cstring>
#include <string>

#include "doctest.h"
#include "quiet/quiet.h"

namespace {

std::string data_path(const std::string& rel) { return std::string(QUIET_DATA_DIR) + "/" + rel; }

struct Str {
    char* p = nullptr;
    ~Str() { quiet_string_free(p); }
};

}  // namespace

TEST_CASE("version string is present") {
    CHECK(quiet_version() != nullptr);
    CHECK(std::strlen(quiet_version()) > 0);
}

TEST_CASE("testset load, inspect, validate, render via the C API") {
    quiet_testset* ts = nullptr;
    Str err;
    REQUIRE(quiet_testset_load(data_path("sample_testset.json").c_str(), &ts, &err.p) ==
            QUIET_OK);
    REQUIRE(ts != nullptr);
    CHECK(quiet_testset_blank_count(ts) == 36);
    CHECK(quiet_testset_group_count(ts) == 7);

    Str report;
    CHECK(quiet_testset_validate(ts, &report.p, &err.p) == QUIET_OK);
    std::string rep(report.p);
    CHECK(rep.find("\"findings\": []") != std::string::npos);
    CHECK(rep.find("topo_order") != std::string::npos);

    Str prompt;
    CHECK(quiet_testset_render_prompt(ts, 0, &prompt.p, &err.p) == QUIET_OK);
    CHECK(std::string(prompt.p).find("⟦01⟧") != std::string::npos);

    Str revealed;
    CHECK(quiet_testset_render_prompt(ts, 1, &revealed.p, &err.p) == QUIET_OK);
    CHECK(std::string(revealed.p).find("CONSTRAINTS:") != std::string::npos);

    quiet_testset_free(ts);
}

TEST_CASE("load failures map onto usage status with a message") {
    quiet_testset* ts = nullptr;
    Str err;
    CHECK(quiet_testset_load("/nonexistent/path.json", &ts, &err.p) == QUIET_ERR_USAGE);
    CHECK(err.p != nullptr);
    CHECK(ts == nullptr);

    Str err2;
    quiet_testset* ts2 = nullptr;
    CHECK(quiet_testset_load_json("{not json", &ts2, &err2.p) == QUIET_ERR_USAGE);
    CHECK(err2.p != nullptr);
}

TEST_CASE("validate reports findings for a broken set loaded from JSON text") {
    const char* doc = R"({
        "id": "bad", "language": "en",
        "segments": [{"text": "a "}, {"blank": 1}, {"text": " end."}],
        "groups": [{"group_id": 1, "blank_ids": [1], "constraints": []}],
        "edges": []
    })";
    quiet_testset* ts = nullptr;
    Str err;
    REQUIRE(quiet_testset_load_json(doc, &ts, &err.p) == QUIET_OK);
    Str report;
    CHECK(quiet_testset_validate(ts, &report.p, &err.p) == QUIET_OK);
    CHECK(std::string(report.p).find("group.no_constraints") != std::string::npos);
    quiet_testset_free(ts);
}

TEST_CASE("composite helper") {
    double out = 0;
    Str err;
    REQUIRE(quiet_composite(0.92, 0.470, "C1.0", &out, &err.p) == QUIET_OK);
    CHECK(std::abs(out - 1.3524) < 1e-12);
    REQUIRE(quiet_composite(0.25, 1.0, "D", &out, &err.p) == QUIET_OK);
    CHECK(std::abs(out - 0.5) < 1e-12);
    CHECK(quiet_composite(0.5, 0.5, "Z", &out, &err.p) == QUIET_ERR_USAGE);
}

TEST_CASE("spearman helper") {
    double x[] = {1, 2, 3, 4};
    double y[] = {1, 3, 2, 4};
    double out = 0;
    Str err;
    REQUIRE(quiet_spearman(x, y, 4, &out, &err.p) == QUIET_OK);
    CHECK(std::abs(out - 0.8) < 1e-12);

    double flat[] = {1, 1, 1, 1};
    CHECK(quiet_spearman(x, flat, 4, &out, &err.p) == QUIET_ERR_SCORING);
}

TEST_CASE("verify-paper via the C API") {
    Str report, err;
    int all_pass = 0;
    REQUIRE(quiet_verify_paper(data_path("paper_tables.csv").c_str(), &report.p, &all_pass,
                               &err.p) == QUIET_OK);
    CHECK(all_pass == 1);
    std::string text(report.p);
    CHECK(text.find("GPT-3.5-turbo") != std::string::npos);
    CHECK(text.find("overall: PASS") != std::string::npos);
}

TEST_CASE("run options init sets the documented defaults") {
    quiet_run_options opts;
    quiet_run_options_init(&opts);
    CHECK(std::string(opts.mode) == "replay");
    CHECK(std::string(opts.configs) == "default");
    CHECK(opts.parallelism == 4);
    CHECK(opts.testset_path == nullptr);
}

TEST_CASE("score without transcripts fails with a usage status") {
    quiet_run_options opts;
    quiet_run_options_init(&opts);
    std::string testset = data_path("e2e/testset.json");
    std::string providers = data_path("e2e/providers.json");
    opts.testset_path = testset.c_str();
    opts.providers_path = providers.c_str();
    opts.out_dir = "/tmp/quiet_capi_empty_run";
    opts.cache_dir = "/tmp/quiet_capi_empty_cache";
    Str artifacts, err;
    CHECK(quiet_score(&opts, &artifacts.p, &err.p) == QUIET_ERR_USAGE);
    CHECK(err.p != nullptr);
}
