#include "core/judge.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace quiet {

std::string scale_name(ScaleKind s) {
    return s == ScaleKind::six_point ? "six_point" : "three_tier";
}

ScaleKind parse_scale(const std::string& s) {
    if (s == "six_point" || s == "6pt" || s == "six") return ScaleKind::six_point;
    if (s == "three_tier" || s == "3tier" || s == "three") return ScaleKind::three_tier;
    throw UsageError("unknown scale '" + s + "' (expected six_point|three_tier)");
}

bool scale_admits(ScaleKind s, double v) {
    if (s == ScaleKind::six_point)
        return v == std::floor(v) && v >= 0 && v <= 5;
    return v == 0.0 || v == 0.5 || v == 1.0;
}

double scale_max(ScaleKind s) { return s == ScaleKind::six_point ? 5.0 : 1.0; }

double scale_cap(ScaleKind s) { return s == ScaleKind::six_point ? 1.0 : 0.5; }

std::vector<std::string> scale_anchor_lines(ScaleKind s) {
    if (s == ScaleKind::six_point) {
        return {"0 = completely absent or conflicts with constraint",
                "1 = only sparse traces",
                "2 = halfway there",
                "3 = largely satisfied but with minor flaws",
                "4 = fully satisfied without flaws",
                "5 = fully satisfied and elegantly executed"};
    }
    return {"0 = constraint not satisfied",
            "0.5 = partially satisfied",
            "1.0 = fully satisfied"};
}

std::string aggregation_name(Aggregation a) {
    return a == Aggregation::soft_mean ? "soft_mean" : "bucket";
}

Aggregation parse_aggregation(const std::string& s) {
    if (s == "soft_mean" || s == "soft") return Aggregation::soft_mean;
    if (s == "bucket") return Aggregation::bucket;
    throw UsageError("unknown aggregation '" + s + "' (expected soft_mean|bucket)");
}

// ---------------------------------------------------------------------------
// Prompts

namespace {

void append_scale_block(std::ostringstream& out, ScaleKind scale) {
    out << "Score on this scale:\n";
    for (const auto& line : scale_anchor_lines(scale)) out << line << "\n";
}

void append_output_format(std::ostringstream& out) {
    out << "\nReply with exactly two lines:\n"
        << "SCORE: <one value from the scale>\n"
        << "KNOCKOUT: yes|no\n";
}

std::string knockout_clause(ScaleKind scale) {
    std::ostringstream out;
    out << "Knockout clause: this constraint contains mandatory wording (\"must\", "
           "\"cannot\", \"not allowed\", or mandatory conditions joined by \"and\"). "
           "If the passage violates any mandatory requirement, answer KNOCKOUT: yes and "
           "cap the score at "
        << (scale == ScaleKind::six_point ? "1" : "0.5")
        << " regardless of how well other aspects are written.\n";
    return out.str();
}

}  // namespace

std::string build_judge_prompt(const std::string& passage, const Constraint& c,
                               ScaleKind scale) {
    if (passage.empty()) throw UsageError("judge prompt requires a non-empty passage");
    if (trim(c.text).empty()) throw UsageError("judge prompt requires non-empty constraint text");
    std::ostringstream out;
    out << "You are grading how well a story passage satisfies one content constraint.\n\n"
        << "PASSAGE:\n" << passage << "\n\n"
        << "CONSTRAINT:\n" << c.text << "\n\n";
    append_scale_block(out, scale);
    if (c.knockout) out << "\n" << knockout_clause(scale);
    append_output_format(out);
    return out.str();
}

std::string build_cascade_prompt(const std::string& from_passage, const std::string& to_passage,
                                 const std::string& criterion, ScaleKind scale) {
    std::ostringstream out;
    out << "You are checking whether a later story passage stays logically consistent "
           "with an earlier one.\n\n"
        << "EARLIER PASSAGE:\n" << from_passage << "\n\n"
        << "LATER PASSAGE:\n" << to_passage << "\n\n"
        << "CONSISTENCY CRITERION:\n" << criterion << "\n\n";
    append_scale_block(out, scale);
    append_output_format(out);
    return out.str();
}

// ---------------------------------------------------------------------------
// Parsing and capping

std::pair<double, bool> parse_judge_output(const std::string& text, ScaleKind scale) {
    bool have_score = false;
    double score = 0;
    bool knockout = false;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (starts_with(lower(t), "score:")) {
            std::string v = trim(t.substr(6));
            try {
                std::size_t used = 0;
                double parsed = std::stod(v, &used);
                if (used == 0 || trim(v.substr(used)).size() > 0) continue;
                score = parsed;
                have_score = true;
            } catch (...) {
                continue;  // a later well-formed SCORE line may still follow
            }
        } else if (starts_with(lower(t), "knockout:")) {
            std::string v = lower(trim(t.substr(9)));
            knockout = (v == "yes" || v == "true");
        }
    }
    if (!have_score)
        throw ScoringError("judge transcript carries no SCORE line: \"" +
                           (text.size() > 120 ? text.substr(0, 120) + "..." : text) + "\"");
    if (!scale_admits(scale, score))
        throw ScoringError("judge score " + fmt_full(score) + " outside the " +
                           scale_name(scale) + " domain");
    return {score, knockout};
}

double apply_knockout(double raw, bool triggered, ScaleKind scale) {
    if (!scale_admits(scale, raw))
        throw ScoringError("raw score " + fmt_full(raw) + " outside the " + scale_name(scale) +
                           " domain");
    if (!triggered) return raw;
    return std::min(raw, scale_cap(scale));
}

double normalize_score(double capped, ScaleKind scale) { return capped / scale_max(scale); }

ConstraintScore ensemble_constraint_score(const std::vector<JudgeRecord>& records,
                                          ScaleKind scale) {
    if (records.empty()) throw ScoringError("ensemble over an empty judge record list");
    ConstraintScore out;
    out.model_id = records.front().model_id;
    out.group_id = records.front().group_id;
    out.constraint_id = records.front().constraint_id;
    double sum = 0;
    for (const auto& r : records) {
        if (r.model_id != out.model_id || r.group_id != out.group_id ||
            r.constraint_id != out.constraint_id)
            throw ScoringError("ensemble mixes records of different scoring triples");
        if (!scale_admits(scale, r.raw) || !scale_admits(scale, r.capped))
            throw ScoringError("ensemble mixes scales: record from " + r.judge_id +
                               " is outside the " + scale_name(scale) + " domain");
        sum += normalize_score(r.capped, scale);
        out.judges.push_back(r.judge_id);
    }
    out.value = sum / double(records.size());
    return out;
}

GroupSatisfy group_satisfy(const std::vector<ConstraintScore>& scores, const BlankGroup& group,
                           Aggregation agg) {
    GroupSatisfy out;
    out.group_id = group.group_id;
    out.aggregation = agg;
    if (scores.empty()) throw ScoringError("group_satisfy needs at least one constraint score");
    out.model_id = scores.front().model_id;
    for (const auto& c : group.constraints) {
        bool found = false;
        for (const auto& s : scores)
            if (s.constraint_id == c.id) found = true;
        if (!found)
            throw ScoringError("missing constraint score for " + c.id + " in group " +
                               std::to_string(group.group_id));
    }
    double sum = 0, mn = scores.front().value;
    for (const auto& s : scores) {
        sum += s.value;
        mn = std::min(mn, s.value);
    }
    out.value = agg == Aggregation::soft_mean ? sum / double(scores.size()) : mn;
    return out;
}

CascadeScore cascade_consistency(const TestSet& ts, const FilledResponse& r,
                                 const CascadeEdge& edge,
                                 const std::vector<ProviderConfig>& judges, ScaleKind scale,
                                 const ChatFn& chat) {
    if (trim(edge.criterion).empty())
        throw UsageError("cascade edge " + std::to_string(edge.from_group) + "->" +
                         std::to_string(edge.to_group) + " has no criterion text");
    if (judges.empty()) throw ScoringError("cascade scoring needs at least one judge");
    std::string from_passage = group_filling_text(ts, r, edge.from_group);
    std::string to_passage = group_filling_text(ts, r, edge.to_group);
    std::string prompt = build_cascade_prompt(from_passage, to_passage, edge.criterion, scale);
    double sum = 0;
    for (const auto& judge : judges) {
        auto [raw, knocked] = parse_judge_output(chat(judge, prompt), scale);
        (void)knocked;  // no knockout semantics on cascade criteria
        sum += normalize_score(raw, scale);
    }
    return {r.model_id, edge.from_group, edge.to_group, sum / double(judges.size())};
}

}  // namespace quiet
