#pragma once

#include <map>
#include <string>
#include <vector>

#include "core/util.hpp"

namespace quiet {

// A story skeleton is an alternating sequence of fixed prose and blank slots.
struct StorySegment {
    enum class Kind { fixed, blank };
    Kind kind = Kind::fixed;
    std::string text;  // fixed segments only
    int blank_id = 0;  // blank segments only, 1-based

    static StorySegment fixed(std::string t) { return {Kind::fixed, std::move(t), 0}; }
    static StorySegment blank(int id) { return {Kind::blank, {}, id}; }
};

struct Constraint {
    std::string id;
    std::string text;
    bool knockout = false;  // authored flag: constraint carries mandatory wording
};

struct BlankGroup {
    int group_id = 0;
    std::vector<int> blank_ids;
    std::vector<Constraint> constraints;
};

struct CascadeEdge {
    int from_group = 0;
    int to_group = 0;
    std::string criterion;
};

struct TestSet {
    std::string id;
    std::string language;
    std::vector<StorySegment> segments;
    std::vector<BlankGroup> groups;
    std::vector<CascadeEdge> edges;

    int blank_count() const;
    std::vector<int> blank_ids_in_order() const;
    const BlankGroup* find_group(int group_id) const;
};

struct FilledResponse {
    std::string model_id;
    std::map<int, std::string> fillings;  // blank id -> filling text
};

struct Finding {
    std::string code;
    std::string message;
};

struct ValidationReport {
    std::vector<Finding> findings;
    std::vector<int> topo_order;  // group ids; populated only when edges form a DAG
    bool ok() const { return findings.empty(); }
};

// Lenient parse result used by the pipeline's incomplete-response policy.
struct ParsedResponse {
    FilledResponse response;
    std::vector<int> missing_blanks;
    std::vector<int> duplicate_blanks;
    bool used_fallback = false;
};

TestSet load_testset(const std::string& json_text);
TestSet load_testset_file(const std::string& path);

ValidationReport validate(const TestSet& ts);

struct PromptOptions {
    bool reveal_constraints = false;
};

// Marker for blank k as shown to evaluated models, e.g. "⟦01⟧".
std::string blank_marker(const TestSet& ts, int blank_id);

std::string render_prompt(const TestSet& ts, const PromptOptions& opts = {});

// Extracts fillings from ⟦k: ...⟧ tags; falls back to aligning the raw text
// against the fixed skeleton segments when no tags are present.
FilledResponse parse_response(const TestSet& ts, const std::string& raw,
                              const std::string& model_id);
ParsedResponse parse_response_lenient(const TestSet& ts, const std::string& raw,
                                      const std::string& model_id);

// Group passage with fillings substituted plus one adjacent fixed sentence of
// context on each side. Pure; requires fillings for all of the group's blanks.
std::string group_filling_text(const TestSet& ts, const FilledResponse& r, int group_id);

// One blank's filling wrapped in the partial sentences that surround it in
// the skeleton. Input for context-windowed embedding.
std::string blank_context_window(const TestSet& ts, const FilledResponse& r, int blank_id);

}  // namespace quiet
