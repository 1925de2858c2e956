#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "core/providers.hpp"
#include "core/testset.hpp"

namespace quiet {

// six_point admits integers 0..5; three_tier admits {0, 0.5, 1.0}.
enum class ScaleKind { six_point, three_tier };

std::string scale_name(ScaleKind s);
ScaleKind parse_scale(const std::string& s);
bool scale_admits(ScaleKind s, double v);
double scale_max(ScaleKind s);   // 5.0 or 1.0
double scale_cap(ScaleKind s);   // knockout cap: 1.0 or 0.5
// Anchor lines shown verbatim in the judge prompt, one per admissible value.
std::vector<std::string> scale_anchor_lines(ScaleKind s);

struct JudgeRecord {
    std::string judge_id;
    std::string model_id;
    int group_id = 0;
    std::string constraint_id;
    double raw = 0;
    bool knockout_triggered = false;
    double capped = 0;
};

struct ConstraintScore {
    std::string model_id;
    int group_id = 0;
    std::string constraint_id;
    double value = 0;  // mean of normalized capped scores, in [0,1]
    std::vector<std::string> judges;
};

enum class Aggregation { soft_mean, bucket };
std::string aggregation_name(Aggregation a);
Aggregation parse_aggregation(const std::string& s);

struct GroupSatisfy {
    std::string model_id;
    int group_id = 0;
    double value = 0;
    Aggregation aggregation = Aggregation::soft_mean;
};

struct CascadeScore {
    std::string model_id;
    int from_group = 0;
    int to_group = 0;
    double value = 0;  // reported only; never added to totals
};

std::string build_judge_prompt(const std::string& passage, const Constraint& c, ScaleKind scale);
std::string build_cascade_prompt(const std::string& from_passage, const std::string& to_passage,
                                 const std::string& criterion, ScaleKind scale);

// Extracts the last SCORE: and KNOCKOUT: lines of a judge transcript.
// Returns (raw score, knockout flag); a missing KNOCKOUT line means false.
std::pair<double, bool> parse_judge_output(const std::string& text, ScaleKind scale);

// The knockout cap is the only mechanical part of the clause: the trigger
// itself is the judge's semantic call.
double apply_knockout(double raw, bool triggered, ScaleKind scale);

double normalize_score(double capped, ScaleKind scale);

ConstraintScore ensemble_constraint_score(const std::vector<JudgeRecord>& records,
                                          ScaleKind scale);

GroupSatisfy group_satisfy(const std::vector<ConstraintScore>& scores, const BlankGroup& group,
                           Aggregation agg);

using ChatFn = std::function<std::string(const ProviderConfig&, const std::string&)>;

CascadeScore cascade_consistency(const TestSet& ts, const FilledResponse& r,
                                 const CascadeEdge& edge,
                                 const std::vector<ProviderConfig>& judges, ScaleKind scale,
                                 const ChatFn& chat);

}  // namespace quiet
