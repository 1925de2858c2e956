#include <set>

#include "core/testset.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace quiet;

namespace {

std::string sample_path() { return std::string(QUIET_DATA_DIR) + "/sample_testset.json"; }

TestSet minimal_testset() {
    return load_testset(R"({
        "id": "minimal",
        "language": "en",
        "segments": [
            {"text": "Micro story: the key was "},
            {"blank": 1},
            {"text": " all along."}
        ],
        "groups": [
            {"group_id": 1, "blank_ids": [1],
             "constraints": [{"id": "c1", "text": "Names a key location.", "knockout": false}]}
        ],
        "edges": []
    })");
}

// Small three-blank set reused across parsing and passage tests.
TestSet tiny_testset() {
    return load_testset(R"({
        "id": "tiny",
        "language": "en",
        "segments": [
            {"text": "At dawn the baker found "},
            {"blank": 1},
            {"text": " on the step. She blamed "},
            {"blank": 2},
            {"text": " at first. The truth involved "},
            {"blank": 3},
            {"text": " and nothing else. The ovens stayed cold that day."}
        ],
        "groups": [
            {"group_id": 1, "blank_ids": [1, 2],
             "constraints": [{"id": "c1", "text": "Establishes a found object.", "knockout": false}]},
            {"group_id": 2, "blank_ids": [3],
             "constraints": [{"id": "c2", "text": "Resolves the blame.", "knockout": false}]}
        ],
        "edges": [{"from_group": 1, "to_group": 2, "criterion": "Resolution matches the object."}]
    })");
}

}  // namespace

TEST_CASE("load_testset resolves the bundled sample fixture") {
    TestSet ts = load_testset_file(sample_path());
    CHECK(ts.blank_count() == 36);
    CHECK(ts.groups.size() == 7);
    std::vector<std::size_t> sizes;
    for (const auto& g : ts.groups) sizes.push_back(g.blank_ids.size());
    CHECK(sizes == std::vector<std::size_t>{7, 5, 5, 10, 4, 2, 3});
    std::size_t constraints = 0;
    for (const auto& g : ts.groups) constraints += g.constraints.size();
    CHECK(constraints == 20);
}

TEST_CASE("load_testset rejects dangling references") {
    std::string doc = R"({
        "id": "broken", "language": "en",
        "segments": [{"text": "a "}, {"blank": 1}, {"text": " b"}],
        "groups": [{"group_id": 1, "blank_ids": [99],
                    "constraints": [{"id": "c", "text": "t", "knockout": false}]}],
        "edges": []
    })";
    CHECK_THROWS_WITH_AS(load_testset(doc), doctest::Contains("99"), UsageError);
}

TEST_CASE("minimal one-blank document loads") {
    TestSet ts = minimal_testset();
    CHECK(ts.blank_count() == 1);
    CHECK(validate(ts).ok());
}

TEST_CASE("validate: sample fixture is clean with chain topo order") {
    TestSet ts = load_testset_file(sample_path());
    ValidationReport rep = validate(ts);
    for (const auto& f : rep.findings) MESSAGE(f.code, ": ", f.message);
    CHECK(rep.ok());
    CHECK(rep.topo_order == std::vector<int>{1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("validate: two-cycle is reported with both groups named") {
    TestSet ts = tiny_testset();
    ts.edges = {{1, 2, "x"}, {2, 1, "y"}};
    ValidationReport rep = validate(ts);
    REQUIRE_FALSE(rep.ok());
    bool found = false;
    for (const auto& f : rep.findings)
        if (f.code == "edge.cycle") {
            found = true;
            CHECK(f.message.find("1") != std::string::npos);
            CHECK(f.message.find("2") != std::string::npos);
        }
    CHECK(found);
    CHECK(rep.topo_order.empty());
}

TEST_CASE("validate: each single-invariant mutation yields at least one finding") {
    auto count_findings = [](const TestSet& ts) { return validate(ts).findings.size(); };

    SUBCASE("duplicate blank reference") {
        TestSet ts = tiny_testset();
        ts.segments.push_back(StorySegment::fixed(" postscript "));
        ts.segments.push_back(StorySegment::blank(3));
        CHECK(count_findings(ts) >= 1);
    }
    SUBCASE("broken alternation") {
        TestSet ts = tiny_testset();
        ts.segments.insert(ts.segments.begin() + 1, StorySegment::fixed("extra"));
        CHECK(count_findings(ts) >= 1);
    }
    SUBCASE("non-contiguous ids") {
        TestSet ts = tiny_testset();
        for (auto& s : ts.segments)
            if (s.kind == StorySegment::Kind::blank && s.blank_id == 3) s.blank_id = 9;
        for (auto& g : ts.groups)
            for (auto& b : g.blank_ids)
                if (b == 3) b = 9;
        CHECK(count_findings(ts) >= 1);
    }
    SUBCASE("dangling group reference") {
        TestSet ts = tiny_testset();
        ts.groups[1].blank_ids.push_back(99);
        CHECK(count_findings(ts) >= 1);
    }
    SUBCASE("overlapping groups") {
        TestSet ts = tiny_testset();
        ts.groups[1].blank_ids.insert(ts.groups[1].blank_ids.begin(), 2);
        CHECK(count_findings(ts) >= 1);
    }
    SUBCASE("uncovered blank") {
        TestSet ts = tiny_testset();
        ts.groups[0].blank_ids.pop_back();
        CHECK(count_findings(ts) >= 1);
    }
    SUBCASE("empty constraint text") {
        TestSet ts = tiny_testset();
        ts.groups[0].constraints[0].text = "   ";
        CHECK(count_findings(ts) >= 1);
    }
    SUBCASE("group without constraints") {
        TestSet ts = tiny_testset();
        ts.groups[0].constraints.clear();
        CHECK(count_findings(ts) >= 1);
    }
    SUBCASE("self edge") {
        TestSet ts = tiny_testset();
        ts.edges.push_back({2, 2, "self"});
        CHECK(count_findings(ts) >= 1);
    }
    SUBCASE("group order violation") {
        TestSet ts = tiny_testset();
        std::swap(ts.groups[0], ts.groups[1]);
        CHECK(count_findings(ts) >= 1);
    }
}

TEST_CASE("topological order is consistent with every edge") {
    SplitMix64 rng(0x70b0);
    for (int iter = 0; iter < 50; ++iter) {
        int n = 3 + int(rng.next_below(5));
        TestSet ts;
        ts.id = "dag";
        for (int b = 1; b <= n; ++b) {
            ts.segments.push_back(StorySegment::fixed("part " + std::to_string(b) + ". "));
            ts.segments.push_back(StorySegment::blank(b));
            BlankGroup g;
            g.group_id = b;
            g.blank_ids = {b};
            g.constraints = {{"c" + std::to_string(b), "text", false}};
            ts.groups.push_back(g);
        }
        ts.segments.push_back(StorySegment::fixed(" the end."));
        for (int from = 1; from <= n; ++from)
            for (int to = from + 1; to <= n; ++to)
                if (rng.next_below(3) == 0) ts.edges.push_back({from, to, "c"});
        ValidationReport rep = validate(ts);
        REQUIRE(rep.ok());
        REQUIRE(rep.topo_order.size() == std::size_t(n));
        std::map<int, std::size_t> pos;
        for (std::size_t i = 0; i < rep.topo_order.size(); ++i) pos[rep.topo_order[i]] = i;
        for (const auto& e : ts.edges) CHECK(pos[e.from_group] < pos[e.to_group]);
    }
}

TEST_CASE("render_prompt shows each marker exactly once") {
    TestSet ts = load_testset_file(sample_path());
    std::string prompt = render_prompt(ts);
    std::string marker = blank_marker(ts, 1);
    CHECK(marker == "⟦01⟧");
    std::size_t count = 0;
    for (std::size_t pos = 0; (pos = prompt.find(marker, pos)) != std::string::npos;
         pos += marker.size())
        ++count;
    CHECK(count == 1);
    // constraints are hidden from evaluated models unless revealed
    CHECK(prompt.find(ts.groups[0].constraints[0].text) == std::string::npos);
    std::string revealed = render_prompt(ts, {true});
    CHECK(revealed.find(ts.groups[0].constraints[0].text) != std::string::npos);
}

TEST_CASE("render_prompt on the minimal set has one marker and the instruction header") {
    TestSet ts = minimal_testset();
    std::string prompt = render_prompt(ts);
    CHECK(prompt.find("⟦01⟧") != std::string::npos);
    CHECK(prompt.find("Please read the following mystery story") != std::string::npos);
}

TEST_CASE("parse_response extracts tagged fillings") {
    TestSet ts = tiny_testset();
    std::map<int, std::string> fillings{{1, "a sealed jar"}, {2, "the gulls"}, {3, "the tide"}};
    FilledResponse r = parse_response(ts, oracles::tagged_story(ts, fillings), "m");
    CHECK(r.fillings == fillings);
}

TEST_CASE("parse_response names missing blanks") {
    TestSet ts = tiny_testset();
    std::string raw = "⟦1: a jar⟧ middle ⟦3: the tide⟧";
    CHECK_THROWS_WITH_AS(parse_response(ts, raw, "m"), doctest::Contains("2"), ScoringError);
}

TEST_CASE("parse_response rejects duplicate tags") {
    TestSet ts = minimal_testset();
    std::string raw = "⟦1: first⟧ and ⟦1: second⟧";
    CHECK_THROWS_WITH_AS(parse_response(ts, raw, "m"), doctest::Contains("duplicate"),
                         ScoringError);
}

TEST_CASE("a fully tagged 36-blank transcript parses completely") {
    TestSet ts = load_testset_file(sample_path());
    std::map<int, std::string> fillings;
    for (int b : ts.blank_ids_in_order()) fillings[b] = "filling number " + std::to_string(b);
    FilledResponse r = parse_response(ts, oracles::tagged_story(ts, fillings), "m");
    CHECK(r.fillings.size() == 36);
    CHECK(r.fillings == fillings);
}

TEST_CASE("fallback alignment recovers literal substitutions") {
    TestSet ts = load_testset_file(sample_path());
    std::map<int, std::string> fillings;
    for (int b : ts.blank_ids_in_order()) fillings[b] = "X_" + std::to_string(b);
    FilledResponse r = parse_response(ts, oracles::untagged_story(ts, fillings), "m");
    CHECK(r.fillings == fillings);
}

TEST_CASE("fallback alignment fails below the 80% anchor threshold") {
    TestSet ts = tiny_testset();
    CHECK_THROWS_WITH_AS(parse_response(ts, "totally unrelated text", "m"),
                         doctest::Contains("alignment"), ScoringError);
}

TEST_CASE("round-trip: tagged rendering and parsing recover any filling map") {
    SplitMix64 rng(0xf111);
    const std::vector<std::string> words = {"tide",  "lantern", "rope",   "gull",
                                            "ledger", "signal",  "harbour", "letter"};
    for (int iter = 0; iter < 100; ++iter) {
        int n = 1 + int(rng.next_below(6));
        TestSet ts;
        ts.id = "rt";
        BlankGroup g;
        g.group_id = 1;
        g.constraints = {{"c", "anything", false}};
        for (int b = 1; b <= n; ++b) {
            ts.segments.push_back(
                StorySegment::fixed("Fragment " + std::to_string(b) + " speaks of " +
                                    words[rng.next_below(words.size())] + " and "));
            ts.segments.push_back(StorySegment::blank(b));
            g.blank_ids.push_back(b);
        }
        ts.segments.push_back(StorySegment::fixed(". Done."));
        ts.groups.push_back(g);
        REQUIRE(validate(ts).ok());

        std::map<int, std::string> fillings;
        for (int b = 1; b <= n; ++b) {
            std::string f = words[rng.next_below(words.size())];
            if (rng.next_below(2)) f += " " + words[rng.next_below(words.size())];
            fillings[b] = f;
        }
        FilledResponse r = parse_response(ts, oracles::tagged_story(ts, fillings), "m");
        CHECK(r.fillings == fillings);
    }
}

TEST_CASE("group_filling_text substitutes fillings with fixed-sentence context") {
    TestSet ts = load_testset_file(sample_path());
    FilledResponse r;
    r.model_id = "m";
    for (int b : ts.blank_ids_in_order()) r.fillings[b] = "F" + std::to_string(b);

    std::string g1 = group_filling_text(ts, r, 1);
    for (int b = 1; b <= 7; ++b)
        CHECK(g1.find("F" + std::to_string(b)) != std::string::npos);
    CHECK(g1.find("⟦") == std::string::npos);
    CHECK(g1.find("F8") == std::string::npos);

    SUBCASE("locality: a change outside the group leaves its passage alone") {
        FilledResponse r2 = r;
        r2.fillings[8] = "SOMETHING ENTIRELY DIFFERENT";
        CHECK(group_filling_text(ts, r2, 1) == g1);
    }
    SUBCASE("unknown group id") {
        CHECK_THROWS_AS(group_filling_text(ts, r, 99), ScoringError);
    }
}

TEST_CASE("group_filling_text on the minimal set returns the whole story") {
    TestSet ts = minimal_testset();
    FilledResponse r;
    r.model_id = "m";
    r.fillings[1] = "under the mat";
    CHECK(group_filling_text(ts, r, 1) == "Micro story: the key was under the mat all along.");
}

TEST_CASE("blank_context_window wraps the filling in its partial sentences") {
    TestSet ts = tiny_testset();
    FilledResponse r;
    r.model_id = "m";
    r.fillings = {{1, "a sealed jar"}, {2, "the gulls"}, {3, "the tide"}};
    std::string w = blank_context_window(ts, r, 2);
    CHECK(w == "She blamed the gulls at first.");
}
