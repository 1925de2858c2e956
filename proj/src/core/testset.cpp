#include "core/testset.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "json.hpp"

using nlohmann::json;

namespace quiet {

namespace {

const std::string kMarkOpen = "⟦";   // ⟦
const std::string kMarkClose = "⟧";  // ⟧

int marker_width(int blank_count) {
    int digits = 1;
    for (int n = blank_count; n >= 10; n /= 10) ++digits;
    return std::max(2, digits);
}

std::string pad_id(int id, int width) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%0*d", width, id);
    return buf;
}

}  // namespace

int TestSet::blank_count() const {
    int n = 0;
    for (const auto& s : segments)
        if (s.kind == StorySegment::Kind::blank) ++n;
    return n;
}

std::vector<int> TestSet::blank_ids_in_order() const {
    std::vector<int> ids;
    for (const auto& s : segments)
        if (s.kind == StorySegment::Kind::blank) ids.push_back(s.blank_id);
    return ids;
}

const BlankGroup* TestSet::find_group(int group_id) const {
    for (const auto& g : groups)
        if (g.group_id == group_id) return &g;
    return nullptr;
}

// ---------------------------------------------------------------------------
// Loading

TestSet load_testset(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw UsageError(std::string("test set parse failure: ") + e.what());
    }
    if (!doc.is_object()) throw UsageError("test set parse failure: top level must be an object");

    TestSet ts;
    try {
        ts.id = doc.at("id").get<std::string>();
        ts.language = doc.value("language", std::string("en"));
        for (const auto& seg : doc.at("segments")) {
            if (seg.contains("blank")) {
                ts.segments.push_back(StorySegment::blank(seg.at("blank").get<int>()));
            } else {
                ts.segments.push_back(StorySegment::fixed(seg.at("text").get<std::string>()));
            }
        }
        for (const auto& grp : doc.at("groups")) {
            BlankGroup g;
            g.group_id = grp.at("group_id").get<int>();
            g.blank_ids = grp.at("blank_ids").get<std::vector<int>>();
            for (const auto& con : grp.at("constraints")) {
                Constraint c;
                c.id = con.at("id").get<std::string>();
                c.text = con.at("text").get<std::string>();
                c.knockout = con.value("knockout", false);
                g.constraints.push_back(std::move(c));
            }
            ts.groups.push_back(std::move(g));
        }
        if (doc.contains("edges")) {
            for (const auto& edg : doc.at("edges")) {
                CascadeEdge e;
                e.from_group = edg.at("from_group").get<int>();
                e.to_group = edg.at("to_group").get<int>();
                e.criterion = edg.value("criterion", std::string());
                ts.edges.push_back(std::move(e));
            }
        }
    } catch (const json::exception& e) {
        throw UsageError(std::string("test set parse failure: ") + e.what());
    }

    // Cross-reference resolution: dangling references are load errors, not findings.
    std::set<int> blank_set;
    for (const auto& s : ts.segments)
        if (s.kind == StorySegment::Kind::blank) blank_set.insert(s.blank_id);
    std::set<int> group_set;
    for (const auto& g : ts.groups) group_set.insert(g.group_id);

    for (const auto& g : ts.groups)
        for (int b : g.blank_ids)
            if (!blank_set.count(b))
                throw UsageError("group " + std::to_string(g.group_id) +
                                 " references unknown blank " + std::to_string(b));
    for (const auto& e : ts.edges) {
        if (!group_set.count(e.from_group))
            throw UsageError("edge references unknown group " + std::to_string(e.from_group));
        if (!group_set.count(e.to_group))
            throw UsageError("edge references unknown group " + std::to_string(e.to_group));
    }
    return ts;
}

TestSet load_testset_file(const std::string& path) { return load_testset(read_file(path)); }

// ---------------------------------------------------------------------------
// Validation

ValidationReport validate(const TestSet& ts) {
    ValidationReport rep;
    auto add = [&rep](const std::string& code, const std::string& msg) {
        rep.findings.push_back({code, msg});
    };

    // Segment alternation and blank id sequence.
    for (std::size_t i = 1; i < ts.segments.size(); ++i) {
        if (ts.segments[i].kind == ts.segments[i - 1].kind) {
            add("segments.alternation",
                "segments " + std::to_string(i - 1) + " and " + std::to_string(i) +
                    " have the same kind; fixed text and blanks must alternate");
        }
    }
    std::vector<int> ids = ts.blank_ids_in_order();
    std::set<int> seen;
    for (int b : ids) {
        if (!seen.insert(b).second)
            add("blank.duplicate", "blank " + std::to_string(b) + " referenced more than once");
    }
    for (std::size_t i = 1; i < ids.size(); ++i) {
        if (ids[i] <= ids[i - 1])
            add("blank.order", "blank ids must be strictly increasing in skeleton order (saw " +
                                   std::to_string(ids[i]) + " after " + std::to_string(ids[i - 1]) +
                                   ")");
    }
    if (!ids.empty()) {
        int n = int(ids.size());
        if (*seen.begin() != 1 || *seen.rbegin() != n)
            add("blank.noncontiguous", "blank ids must be contiguous 1.." + std::to_string(n));
    } else {
        add("blank.none", "test set has no blanks");
    }

    // Groups partition the blanks and follow skeleton order.
    std::set<int> group_ids;
    std::map<int, int> blank_owner;
    for (const auto& g : ts.groups) {
        if (!group_ids.insert(g.group_id).second)
            add("group.duplicate", "group id " + std::to_string(g.group_id) + " repeated");
        if (g.blank_ids.empty())
            add("group.empty_blanks", "group " + std::to_string(g.group_id) + " has no blanks");
        if (g.constraints.empty())
            add("group.no_constraints",
                "group " + std::to_string(g.group_id) + " has no constraints");
        for (const auto& c : g.constraints)
            if (trim(c.text).empty())
                add("constraint.empty_text", "constraint " + c.id + " in group " +
                                                 std::to_string(g.group_id) + " has empty text");
        for (std::size_t i = 0; i < g.blank_ids.size(); ++i) {
            int b = g.blank_ids[i];
            if (!seen.count(b)) {
                add("group.unknown_blank", "group " + std::to_string(g.group_id) +
                                               " references unknown blank " + std::to_string(b));
                continue;
            }
            auto [it, fresh] = blank_owner.emplace(b, g.group_id);
            if (!fresh)
                add("group.overlap", "blank " + std::to_string(b) + " assigned to groups " +
                                         std::to_string(it->second) + " and " +
                                         std::to_string(g.group_id));
            if (i > 0 && g.blank_ids[i] <= g.blank_ids[i - 1])
                add("group.blank_order", "group " + std::to_string(g.group_id) +
                                             " lists blanks out of skeleton order");
        }
    }
    for (int b : ids)
        if (!blank_owner.count(b))
            add("group.uncovered_blank",
                "blank " + std::to_string(b) + " not covered by any group");
    int prev_max = 0;
    for (const auto& g : ts.groups) {
        if (g.blank_ids.empty()) continue;
        int lo = *std::min_element(g.blank_ids.begin(), g.blank_ids.end());
        int hi = *std::max_element(g.blank_ids.begin(), g.blank_ids.end());
        if (lo <= prev_max)
            add("group.order", "group " + std::to_string(g.group_id) +
                                   " starts before the previous group ends; group order must "
                                   "follow blank order");
        prev_max = std::max(prev_max, hi);
    }

    // Edges: self loops, unknown endpoints, acyclicity (Kahn, smallest id first).
    std::map<int, std::vector<int>> out_edges;
    std::map<int, int> indegree;
    for (int g : group_ids) indegree[g] = 0;
    bool edges_resolvable = true;
    for (const auto& e : ts.edges) {
        if (e.from_group == e.to_group) {
            add("edge.self", "self edge on group " + std::to_string(e.from_group));
            continue;
        }
        if (!group_ids.count(e.from_group) || !group_ids.count(e.to_group)) {
            add("edge.unknown_group", "edge " + std::to_string(e.from_group) + "->" +
                                          std::to_string(e.to_group) +
                                          " references unknown group");
            edges_resolvable = false;
            continue;
        }
        out_edges[e.from_group].push_back(e.to_group);
        indegree[e.to_group] += 1;
    }
    if (edges_resolvable) {
        std::set<int> ready;
        for (auto& [g, d] : indegree)
            if (d == 0) ready.insert(g);
        std::vector<int> order;
        std::map<int, int> deg = indegree;
        while (!ready.empty()) {
            int g = *ready.begin();
            ready.erase(ready.begin());
            order.push_back(g);
            for (int t : out_edges[g])
                if (--deg[t] == 0) ready.insert(t);
        }
        if (order.size() == group_ids.size()) {
            rep.topo_order = order;
        } else {
            std::string members;
            for (auto& [g, d] : deg)
                if (d > 0) members += (members.empty() ? "" : ", ") + std::to_string(g);
            add("edge.cycle", "cascade edges contain a cycle involving groups: " + members);
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Prompt rendering

std::string blank_marker(const TestSet& ts, int blank_id) {
    return kMarkOpen + pad_id(blank_id, marker_width(ts.blank_count())) + kMarkClose;
}

std::string render_prompt(const TestSet& ts, const PromptOptions& opts) {
    std::ostringstream out;
    out << "Please read the following mystery story, fill in every numbered blank, and "
           "output the complete, directly readable story.\n"
        << "Tag each filling inline as " << kMarkOpen << "k: your filling" << kMarkClose
        << ", where k is the blank number shown in the marker.\n"
        << "Fill every blank. Do not leave any marker unreplaced and do not invent new "
           "markers.\n\nSTORY:\n";
    for (const auto& s : ts.segments) {
        if (s.kind == StorySegment::Kind::fixed)
            out << s.text;
        else
            out << blank_marker(ts, s.blank_id);
    }
    out << "\n";
    if (opts.reveal_constraints) {
        int width = marker_width(ts.blank_count());
        out << "\nCONSTRAINTS:\n";
        for (const auto& g : ts.groups) {
            out << "Group " << g.group_id << " (blanks " << pad_id(g.blank_ids.front(), width)
                << "-" << pad_id(g.blank_ids.back(), width) << "):\n";
            for (const auto& c : g.constraints) out << "- [" << c.id << "] " << c.text << "\n";
        }
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Response parsing

namespace {

struct Tag {
    int blank_id;
    std::string filling;
};

// Scans for ⟦<digits>: ...⟧ tags. Returns false if the raw text carries no tags.
bool extract_tags(const std::string& raw, std::vector<Tag>& out) {
    std::size_t pos = 0;
    bool any_open = false;
    while ((pos = raw.find(kMarkOpen, pos)) != std::string::npos) {
        any_open = true;
        std::size_t p = pos + kMarkOpen.size();
        std::size_t digits_begin = p;
        while (p < raw.size() && std::isdigit(static_cast<unsigned char>(raw[p]))) ++p;
        if (p == digits_begin || p - digits_begin > 8 || p >= raw.size() || raw[p] != ':') {
            pos += kMarkOpen.size();  // bare marker or malformed tag; skip it
            continue;
        }
        int id = std::stoi(raw.substr(digits_begin, p - digits_begin));
        ++p;                                         // ':'
        if (p < raw.size() && raw[p] == ' ') ++p;    // optional single space
        std::size_t close = raw.find(kMarkClose, p);
        if (close == std::string::npos) break;
        out.push_back({id, raw.substr(p, close - p)});
        pos = close + kMarkClose.size();
    }
    return any_open;
}

ParsedResponse align_fallback(const TestSet& ts, const std::string& raw,
                              const std::string& model_id) {
    // Anchor every fixed segment in order; the spans between found anchors are
    // the fillings. A blank is recoverable only when both its neighbouring
    // fixed anchors (where they exist) were located.
    struct Anchor {
        bool found = false;
        std::size_t begin = 0, end = 0;
    };
    std::vector<Anchor> anchors(ts.segments.size());
    std::size_t pos = 0;
    std::size_t fixed_total = 0, fixed_found = 0;
    for (std::size_t i = 0; i < ts.segments.size(); ++i) {
        const auto& s = ts.segments[i];
        if (s.kind != StorySegment::Kind::fixed) continue;
        ++fixed_total;
        std::size_t at = raw.find(s.text, pos);
        if (at == std::string::npos) continue;
        anchors[i] = {true, at, at + s.text.size()};
        pos = at + s.text.size();
        ++fixed_found;
    }
    if (fixed_total > 0 && double(fixed_found) / double(fixed_total) < 0.8) {
        throw ScoringError("response alignment failure for model " + model_id + ": only " +
                           std::to_string(fixed_found) + "/" + std::to_string(fixed_total) +
                           " fixed anchors found");
    }
    ParsedResponse out;
    out.response.model_id = model_id;
    out.used_fallback = true;
    for (std::size_t i = 0; i < ts.segments.size(); ++i) {
        const auto& s = ts.segments[i];
        if (s.kind != StorySegment::Kind::blank) continue;
        bool prev_ok = (i == 0) || anchors[i - 1].found;
        bool next_ok = (i + 1 == ts.segments.size()) || anchors[i + 1].found;
        if (!prev_ok || !next_ok) {
            out.missing_blanks.push_back(s.blank_id);
            continue;
        }
        std::size_t begin = (i == 0) ? 0 : anchors[i - 1].end;
        std::size_t end = (i + 1 == ts.segments.size()) ? raw.size() : anchors[i + 1].begin;
        std::string filling = raw.substr(begin, end - begin);
        if (filling.empty()) {
            out.missing_blanks.push_back(s.blank_id);
            continue;
        }
        out.response.fillings[s.blank_id] = std::move(filling);
    }
    return out;
}

}  // namespace

ParsedResponse parse_response_lenient(const TestSet& ts, const std::string& raw,
                                      const std::string& model_id) {
    std::vector<Tag> tags;
    bool tagged = extract_tags(raw, tags);
    if (!tagged || tags.empty()) return align_fallback(ts, raw, model_id);

    ParsedResponse out;
    out.response.model_id = model_id;
    std::vector<int> valid = ts.blank_ids_in_order();
    std::set<int> valid_set(valid.begin(), valid.end());
    std::set<int> dup;
    for (auto& t : tags) {
        if (!valid_set.count(t.blank_id)) continue;  // tag for a blank we do not have
        if (out.response.fillings.count(t.blank_id)) {
            dup.insert(t.blank_id);
            continue;
        }
        if (!t.filling.empty()) out.response.fillings[t.blank_id] = std::move(t.filling);
    }
    out.duplicate_blanks.assign(dup.begin(), dup.end());
    for (int b : valid)
        if (!out.response.fillings.count(b)) out.missing_blanks.push_back(b);
    return out;
}

FilledResponse parse_response(const TestSet& ts, const std::string& raw,
                              const std::string& model_id) {
    ParsedResponse parsed = parse_response_lenient(ts, raw, model_id);
    if (!parsed.duplicate_blanks.empty()) {
        std::string ids;
        for (int b : parsed.duplicate_blanks)
            ids += (ids.empty() ? "" : ", ") + std::to_string(b);
        throw ScoringError("duplicate tag for blank(s) " + ids + " in response from " + model_id);
    }
    if (!parsed.missing_blanks.empty()) {
        std::string ids;
        for (int b : parsed.missing_blanks) ids += (ids.empty() ? "" : ", ") + std::to_string(b);
        throw ScoringError("missing blank(s) " + ids + " in response from " + model_id);
    }
    return parsed.response;
}

// ---------------------------------------------------------------------------
// Group passage extraction

namespace {

// Byte offsets just past each sentence terminator. Handles ASCII and the
// common CJK full-width terminators.
std::vector<std::size_t> sentence_ends(const std::string& text) {
    static const std::vector<std::string> terms = {".", "!", "?",
                                                   "。", "！", "？"};
    std::vector<std::size_t> ends;
    std::size_t i = 0;
    while (i < text.size()) {
        bool matched = false;
        for (const auto& t : terms) {
            if (text.compare(i, t.size(), t) == 0) {
                ends.push_back(i + t.size());
                i += t.size();
                matched = true;
                break;
            }
        }
        if (!matched) ++i;
    }
    return ends;
}

// Trailing portion of the fixed text preceding a group: one complete sentence
// plus the partial sentence leading into the first blank.
std::string left_context(const std::string& fixed) {
    auto ends = sentence_ends(fixed);
    std::size_t start = ends.size() >= 2 ? ends[ends.size() - 2] : 0;
    std::string out = fixed.substr(start);
    auto b = out.find_first_not_of(" \t\r\n");
    return b == std::string::npos ? std::string() : out.substr(b);
}

// Leading portion of the fixed text following a group: the partial sentence
// completing the last blank plus one full sentence after it.
std::string right_context(const std::string& fixed) {
    auto ends = sentence_ends(fixed);
    std::size_t stop = ends.size() >= 2 ? ends[1] : fixed.size();
    return fixed.substr(0, stop);
}

}  // namespace

std::string blank_context_window(const TestSet& ts, const FilledResponse& r, int blank_id) {
    auto it = r.fillings.find(blank_id);
    if (it == r.fillings.end())
        throw ScoringError("response from " + r.model_id + " lacks filling for blank " +
                           std::to_string(blank_id));
    std::size_t idx = ts.segments.size();
    for (std::size_t i = 0; i < ts.segments.size(); ++i)
        if (ts.segments[i].kind == StorySegment::Kind::blank &&
            ts.segments[i].blank_id == blank_id)
            idx = i;
    if (idx == ts.segments.size())
        throw ScoringError("unknown blank id " + std::to_string(blank_id));

    std::string out;
    if (idx > 0 && ts.segments[idx - 1].kind == StorySegment::Kind::fixed) {
        const std::string& fixed = ts.segments[idx - 1].text;
        auto ends = sentence_ends(fixed);
        std::string partial = fixed.substr(ends.empty() ? 0 : ends.back());
        auto b = partial.find_first_not_of(" \t\r\n");
        if (b != std::string::npos) out += partial.substr(b);
    }
    out += it->second;
    if (idx + 1 < ts.segments.size() &&
        ts.segments[idx + 1].kind == StorySegment::Kind::fixed) {
        const std::string& fixed = ts.segments[idx + 1].text;
        auto ends = sentence_ends(fixed);
        out += fixed.substr(0, ends.empty() ? fixed.size() : ends.front());
    }
    return trim(out);
}

std::string group_filling_text(const TestSet& ts, const FilledResponse& r, int group_id) {
    const BlankGroup* g = ts.find_group(group_id);
    if (!g) throw ScoringError("unknown group id " + std::to_string(group_id));
    for (int b : g->blank_ids)
        if (!r.fillings.count(b))
            throw ScoringError("response from " + r.model_id + " lacks filling for blank " +
                               std::to_string(b));

    int first = g->blank_ids.front();
    int last = g->blank_ids.back();
    std::size_t i_first = 0, i_last = 0;
    for (std::size_t i = 0; i < ts.segments.size(); ++i) {
        const auto& s = ts.segments[i];
        if (s.kind == StorySegment::Kind::blank && s.blank_id == first) i_first = i;
        if (s.kind == StorySegment::Kind::blank && s.blank_id == last) i_last = i;
    }

    std::string out;
    if (i_first > 0 && ts.segments[i_first - 1].kind == StorySegment::Kind::fixed)
        out += left_context(ts.segments[i_first - 1].text);
    for (std::size_t i = i_first; i <= i_last; ++i) {
        const auto& s = ts.segments[i];
        if (s.kind == StorySegment::Kind::fixed)
            out += s.text;
        else
            out += r.fillings.at(s.blank_id);
    }
    if (i_last + 1 < ts.segments.size() &&
        ts.segments[i_last + 1].kind == StorySegment::Kind::fixed)
        out += right_context(ts.segments[i_last + 1].text);
    return trim(out);
}

}  // namespace quiet
