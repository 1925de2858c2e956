// Regenerates the bundled end-to-end replay fixture: records deterministic
// stub provider traffic into data/e2e/cache, then replays it into
// data/e2e/golden. Run from the repository root:
//
//   ./build/tools/quiet_fixture_gen [data/e2e]

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "core/pipeline.hpp"
#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;
using namespace quiet;

namespace {

const std::map<std::string, std::vector<std::string>> kFillings = {
    {"mock-alpha",
     {"a brass tide-clock stopped at high water", "lamp oil and dried seaweed",
      "a list of provisions crossed out one by one",
      "the island would keep the light burning by rota until Maren returned",
      "a slow, deliberate fall", "a tin of spare mantles and a bottle of paraffin",
      "her skiff tied neatly with a double hitch",
      "a wound spring and a note saying the mechanism only needed winding"}},
    {"mock-bravo",
     {"a borrowed master key on a red ribbon", "cold pipe smoke",
      "a sketch of the mainland ferry timetable",
      "Jonas would take over as keeper until the council decided otherwise",
      "nothing at all, which was worse", "his grandfather's signal lantern and a box of matches",
      "fresh bootprints leading away from the waterline",
      "Maren's spare uniform folded on the stairs with her resignation letter"}},
    {"mock-charlie",
     {"an unsigned postcard of a city lighthouse", "violets, out of season",
      "a circled date two days before the failure",
      "the chapel bell would ring the hours until the lamp was fixed",
      "something none of them had seen before", "a coil of new wick and a flask of hot tea",
      "gulls circling a basket of untouched fish",
      "the lamp intact but the winding key hidden in Maren's teapot"}},
};

std::vector<double> deterministic_unit_vector(const std::string& text, std::size_t dim) {
    SplitMix64 rng(fnv1a64(text));
    std::vector<double> v(dim);
    double norm2 = 0;
    for (auto& x : v) {
        x = rng.next_in(-1.0, 1.0);
        norm2 += x * x;
    }
    double n = std::sqrt(norm2);
    for (auto& x : v) x /= n;
    return v;
}

class StubTransport : public Transport {
public:
    explicit StubTransport(TestSet ts) : ts_(std::move(ts)) {}

    std::string post(const ProviderConfig& cfg, const std::string&,
                     const std::string& body) override {
        json req = json::parse(body);
        if (cfg.kind == ProviderKind::embedding) {
            std::string input = req.at("input").get<std::string>();
            return json{{"data", json::array({json{
                            {"embedding", deterministic_unit_vector(input, 16)}}})}}
                .dump();
        }
        std::string prompt = req.at("messages").at(0).at("content").get<std::string>();
        std::string text = kFillings.count(cfg.name) ? model_story(cfg.name)
                                                     : judge_reply(cfg.name, prompt);
        return json{{"choices",
                     json::array({json{{"message", json{{"role", "assistant"},
                                                        {"content", text}}}}})}}
            .dump();
    }

private:
    std::string model_story(const std::string& model) const {
        const auto& fillings = kFillings.at(model);
        std::string out;
        for (const auto& seg : ts_.segments) {
            if (seg.kind == StorySegment::Kind::fixed) {
                out += seg.text;
            } else {
                char tag[16];
                std::snprintf(tag, sizeof(tag), "%02d", seg.blank_id);
                out += "⟦" + std::string(tag) + ": " + fillings.at(seg.blank_id - 1) +
                       "⟧";
            }
        }
        return out;
    }

    std::string judge_reply(const std::string& judge, const std::string& prompt) const {
        uint64_t h = fnv1a64(judge + "|" + prompt);
        bool three_tier = prompt.find("0.5 = ") != std::string::npos;
        bool has_knockout_clause = prompt.find("Knockout clause:") != std::string::npos;
        // The one deliberate knockout case: mock-bravo's master-key clue was not
        // "left behind" by Maren, so judges flag the mandatory wording.
        bool knockout =
            has_knockout_clause && prompt.find("a borrowed master key") != std::string::npos;
        std::string score;
        if (three_tier) {
            score = knockout ? "1.0" : (h % 3 == 0 ? "0.5" : (h % 3 == 1 ? "1.0" : "0.5"));
            if (!knockout && h % 7 == 0) score = "0";
        } else {
            score = knockout ? "4" : std::to_string(2 + int(h % 4));
        }
        return "The passage was weighed against the stated requirement.\nSCORE: " + score +
               "\nKNOCKOUT: " + (knockout ? "yes" : "no") + "\n";
    }

    TestSet ts_;
};

}  // namespace

int main(int argc, char** argv) {
    std::string data_dir = argc > 1 ? argv[1] : "data/e2e";
    fs::path base(data_dir);
    if (!fs::exists(base / "testset.json")) {
        std::fprintf(stderr, "no testset.json under %s\n", data_dir.c_str());
        return 1;
    }
    setenv("MOCK_API_KEY", "fixture", 1);

    fs::path cache = base / "cache";
    fs::path golden = base / "golden";
    fs::path scratch = fs::temp_directory_path() / "quiet_fixture_record";
    fs::remove_all(cache);
    fs::remove_all(golden);
    fs::remove_all(scratch);

    TestSet ts = load_testset_file((base / "testset.json").string());
    auto transport = std::make_shared<StubTransport>(ts);

    RunOptions record;
    record.testset_path = (base / "testset.json").string();
    record.providers_path = (base / "providers.json").string();
    record.mode = "record";
    record.cache_dir = cache.string();
    record.out_dir = scratch.string();
    record.parallelism = 4;  // the CLI default; the manifest records it
    record.transport = transport;
    cmd_collect(record);
    cmd_score(record);
    std::printf("recorded cache under %s\n", cache.string().c_str());

    RunOptions replay = record;
    replay.mode = "replay";
    replay.out_dir = golden.string();
    replay.transport = nullptr;
    cmd_collect(replay);
    RunArtifacts artifacts = cmd_score(replay);
    std::printf("replayed %zu artifacts into %s\n", artifacts.paths.size(),
                golden.string().c_str());

    fs::remove_all(scratch);
    return 0;
}
