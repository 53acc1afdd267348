#include "doctest.h"
#include "support.hpp"

#include "storyboard/backends/mocks.hpp"
#include "storyboard/error.hpp"
#include "storyboard/hash.hpp"
#include "storyboard/metrics.hpp"
#include "storyboard/pipeline.hpp"
#include "storyboard/prompts.hpp"

#include <algorithm>
#include <atomic>
#include <random>
#include <thread>

using namespace storyboard;
using namespace storyboard::pipeline;
using backends::StageConfig;
using testsupport::TempDir;

namespace {

std::vector<prompts::StageAsset> make_assets(int n, const std::string& tag = "") {
    std::vector<prompts::StageAsset> out;
    for (int i = 1; i <= n; ++i)
        out.push_back({i, {i, tag + "pose " + std::to_string(i)}, {"same character", tag + "act " + std::to_string(i),
                                                                   "calm", "steady", "flat"}, {}});
    return out;
}

StoryboardShot make_shot(const std::string& id, int n, unsigned seed) {
    std::mt19937 rng(seed);
    StoryboardShot s;
    s.id = id;
    s.sketch = testsupport::blocky_gray(24, 16, rng);
    s.appearance = prompts::make_appearance("a small robot in a green field " + id);
    s.motion = prompts::make_motion("the robot waves");
    s.n_stages = n;
    return s;
}

StageConfig clip_config(int frames) {
    StageConfig c;
    c.video.clip_frames = frames;
    return c;
}

bool same_video(const FrameSequence& a, const FrameSequence& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!a[i].same_pixels(b[i])) return false;
    return true;
}

/// Mock clips that fail whenever the action text contains "boom".
class TrippingClips final : public backends::ClipGenerator {
public:
    std::vector<Frame> generate_clip(const Frame& first, const Frame& last,
                                     const prompts::StructuredDynamicPrompt& d, int frames,
                                     const backends::VideoConfig&) override {
        ++calls;
        if (d.action.find("boom") != std::string::npos) throw ProviderError("clip backend crashed");
        return backends::mock_generate_clip(first, last, frames);
    }
    std::atomic<int> calls{0};
};

}  // namespace

TEST_CASE("plan_shot wiring") {
    for (int n = 1; n <= 8; ++n) {
        const JobGraph g = plan_shot(make_shot("s", n, 1), make_assets(n));
        REQUIRE(g.nodes.size() == static_cast<std::size_t>(2 * n + 2));
        CHECK(g.topological_order().size() == g.nodes.size());
        CHECK(g.nodes[g.color_node()].kind == NodeKind::color_keyframe);
        CHECK(g.nodes[g.concat_node()].kind == NodeKind::concat);
        CHECK(g.nodes[g.concat_node()].deps.size() == static_cast<std::size_t>(n));
        for (int i = 1; i <= n; ++i) {
            const auto& d = g.nodes[g.derive_node(i)];
            CHECK(d.kind == NodeKind::derive_keyframe);
            CHECK(d.deps == std::vector<std::size_t>{g.color_node()});
            CHECK(g.assets[i - 1].conversion.text == "pose " + std::to_string(i));
            const auto& c = g.nodes[g.clip_node(i)];
            CHECK(c.kind == NodeKind::clip);
            CHECK(c.stage == i);
            CHECK(c.deps == std::vector<std::size_t>{g.keyframe_node(i - 1), g.derive_node(i)});
        }
        // every dependency precedes its dependent in the order
        const auto order = g.topological_order();
        std::vector<std::size_t> pos(order.size());
        for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
        for (const auto& [from, to] : g.edges()) CHECK(pos[from] < pos[to]);
    }

    auto shuffled = make_assets(3);
    std::swap(shuffled[0], shuffled[2]);
    CHECK(plan_shot(make_shot("s", 3, 1), shuffled).assets[0].stage == 1);

    auto gap = make_assets(3);
    gap[1].stage = 4;
    CHECK_THROWS_AS(plan_shot(make_shot("s", 3, 1), gap), InvalidArgument);
    CHECK_THROWS_AS(plan_shot(make_shot("s", 3, 1), make_assets(2)), InvalidArgument);
    CHECK_THROWS_AS(plan_shot(make_shot("s", 0, 1), {}), InvalidArgument);

    JobGraph cyclic = plan_shot(make_shot("s", 1, 1), make_assets(1));
    cyclic.nodes[0].deps.push_back(cyclic.concat_node());
    CHECK_THROWS_AS(cyclic.topological_order(), InvalidArgument);
}

TEST_CASE("run_shot under the mock suite") {
    const auto providers = backends::mock_provider_set();
    const StoryboardShot shot = make_shot("s", 2, 2);
    const JobGraph g = plan_shot(shot, make_assets(2));
    const ShotVideo v = run_shot(g, providers, clip_config(9));

    REQUIRE(v.frames.size() == 17);
    REQUIRE(v.keyframes.size() == 3);
    const Frame anchor = backends::mock_color_sketch(shot.sketch, shot.appearance.text);
    CHECK(v.keyframes[0].same_pixels(anchor));
    CHECK(v.frames[0].same_pixels(anchor));
    CHECK(v.frames[16].same_pixels(v.keyframes[2]));
    // derivatives are all conditioned on the anchor
    for (int i = 1; i <= 2; ++i)
        CHECK(v.keyframes[i].same_pixels(backends::mock_derive_keyframe(anchor, g.assets[i - 1].conversion.text)));
    // clip i spans keyframes i-1 and i; clip 2 starts one past the shared keyframe
    CHECK(v.frames[8].same_pixels(v.keyframes[1]));
    CHECK(v.provenance[8] == FrameProvenance{0, 1, 8});
    CHECK(v.provenance[9] == FrameProvenance{0, 2, 1});
    CHECK(v.provenance[16] == FrameProvenance{0, 2, 8});
    for (std::size_t i = 0; i < v.frames.size(); ++i) {
        CHECK(v.frames[i].index() == i);
        CHECK(v.frames[i].timestamp() == doctest::Approx(static_cast<double>(i) / 16.0));
    }

    REQUIRE(v.trace.size() == g.nodes.size());
    for (int i = 1; i <= 2; ++i) {
        const auto& t = v.trace[g.derive_node(i)];
        CHECK(t.inputs.front() == v.trace[g.color_node()].output);
    }
    CHECK(v.trace[g.clip_node(2)].inputs ==
          std::vector<std::string>{v.trace[g.derive_node(1)].output, v.trace[g.derive_node(2)].output});

    // rerun is byte identical
    const ShotVideo again = run_shot(g, providers, clip_config(9), {4, std::nullopt, 0});
    CHECK(same_video(v.frames, again.frames));
    CHECK(v.provenance == again.provenance);
}

TEST_CASE("length law and defaults") {
    const auto providers = backends::mock_provider_set();
    for (int n = 1; n <= 4; ++n)
        for (int J : {2, 3, 9}) {
            const ShotVideo v = run_shot(plan_shot(make_shot("s", n, 3), make_assets(n)), providers, clip_config(J));
            CHECK(v.frames.size() == static_cast<std::size_t>(n * J - (n - 1)));
        }
    // default clip length is the latent frame count
    const ShotVideo full = run_shot(plan_shot(make_shot("s", 1, 3), make_assets(1)), providers, StageConfig{});
    CHECK(full.frames.size() == 81);
}

TEST_CASE("degenerate identical derivative gives a constant clip") {
    // a conversion whose hash offset is zero leaves the anchor unchanged
    std::string conversion;
    for (int i = 0; conversion.empty(); ++i) {
        const std::string c = "stay " + std::to_string(i);
        if (fnv1a32(c) % 33 == 16) conversion = c;
    }
    auto assets = make_assets(1);
    assets[0].conversion.text = conversion;
    const ShotVideo v = run_shot(plan_shot(make_shot("s", 1, 4), assets), backends::mock_provider_set(), clip_config(7));
    for (const Frame& f : v.frames.frames()) CHECK(f.same_pixels(v.keyframes[0]));
}

TEST_CASE("run_shot requires generation capabilities") {
    auto partial = backends::mock_provider_set();
    partial.clips.reset();
    CHECK_THROWS_AS(run_shot(plan_shot(make_shot("s", 1, 1), make_assets(1)), partial, clip_config(3)), ProviderError);
}

TEST_CASE("content-addressed cache") {
    TempDir tmp;
    auto providers = backends::mock_provider_set();
    auto tripping = std::make_shared<TrippingClips>();
    providers.clips = tripping;
    const JobGraph g = plan_shot(make_shot("s", 3, 5), make_assets(3));
    RunOptions ro{2, tmp / "cache", 0};

    const ShotVideo first = run_shot(g, providers, clip_config(5), ro);
    CHECK(tripping->calls == 3);
    for (const auto& t : first.trace) CHECK_FALSE(t.cached);

    const ShotVideo second = run_shot(g, providers, clip_config(5), ro);
    CHECK(tripping->calls == 3);
    for (const auto& t : second.trace)
        if (t.kind != NodeKind::concat) CHECK(t.cached);
    CHECK(same_video(first.frames, second.frames));
    for (std::size_t i = 0; i < first.trace.size(); ++i) CHECK(first.trace[i].output == second.trace[i].output);

    // changing one stage reruns only what depends on it
    auto assets = make_assets(3);
    assets[2].conversion.text = "a different pose";
    const ShotVideo third = run_shot(plan_shot(make_shot("s", 3, 5), assets), providers, clip_config(5), ro);
    CHECK(tripping->calls == 4);
    CHECK(third.trace[g.derive_node(1)].cached);
    CHECK_FALSE(third.trace[g.derive_node(3)].cached);
    CHECK_FALSE(third.trace[g.clip_node(3)].cached);

    // a failing clip leaves finished nodes behind for the next run
    auto boom = make_assets(2, "fresh ");
    boom[1].dynamic.action = "boom";
    const JobGraph failing = plan_shot(make_shot("t", 2, 6), boom);
    CHECK_THROWS_AS(run_shot(failing, providers, clip_config(5), ro), ProviderError);
    boom[1].dynamic.action = "recover";
    const ShotVideo resumed = run_shot(plan_shot(make_shot("t", 2, 6), boom), providers, clip_config(5), ro);
    CHECK(resumed.trace[failing.color_node()].cached);
    CHECK(resumed.trace[failing.derive_node(2)].cached);
}

TEST_CASE("run_storyboard") {
    const auto providers = backends::mock_provider_set();
    const std::vector<JobGraph> board = {plan_shot(make_shot("a", 3, 7), make_assets(3)),
                                         plan_shot(make_shot("b", 3, 8), make_assets(3))};

    StoryboardOptions opts;
    opts.shot_workers = 2;
    const LongVideo v = run_storyboard(board, providers, clip_config(9), opts);
    REQUIRE(v.frames.size() == 50);
    REQUIRE(v.provenance.size() == 50);
    CHECK(v.failures.empty());
    for (std::size_t i = 0; i < 50; ++i) {
        const std::size_t shot = i / 25, local = i % 25;
        const int clip = local < 9 ? 1 : 1 + static_cast<int>((local - 1) / 8);
        const std::size_t j = local < 9 ? local : (local - 1) % 8 + 1;
        CHECK(v.provenance[i] == FrameProvenance{shot, clip, j});
        CHECK(v.frames[i].index() == i);
    }
    // no dedup across shots: shot 2 starts at its own anchor
    CHECK(v.frames[25].same_pixels(v.shots[1].keyframes[0]));
    CHECK(v.frames[24].same_pixels(v.shots[0].keyframes[3]));
    for (const auto& s : v.shots)
        for (std::size_t i = 0; i < s.frames.size(); ++i) {
            const auto& p = s.provenance[i];
            // clip endpoints are the keyframes, exactly
            if (p.local == 0) CHECK(s.frames[i].same_pixels(s.keyframes[p.clip - 1]));
            if (p.local == 8) CHECK(s.frames[i].same_pixels(s.keyframes[p.clip]));
        }

    opts.shot_workers = 1;
    opts.node_workers = 1;
    CHECK(same_video(v.frames, run_storyboard(board, providers, clip_config(9), opts).frames));

    const LongVideo single = run_storyboard({board[0]}, providers, clip_config(9));
    CHECK(same_video(single.frames, single.shots[0].frames));
    CHECK_THROWS_AS(run_storyboard({}, providers, clip_config(9)), InvalidArgument);
}

TEST_CASE("storyboard failure policies") {
    auto providers = backends::mock_provider_set();
    providers.clips = std::make_shared<TrippingClips>();
    auto bad = make_assets(2);
    bad[1].dynamic.action = "boom";
    const std::vector<JobGraph> board = {plan_shot(make_shot("a", 2, 1), make_assets(2)),
                                         plan_shot(make_shot("b", 2, 2), bad),
                                         plan_shot(make_shot("c", 1, 3), make_assets(1))};

    StoryboardOptions opts;
    CHECK_THROWS_AS(run_storyboard(board, providers, clip_config(4), opts), ProviderError);

    opts.policy = FailurePolicy::skip_and_report;
    const LongVideo v = run_storyboard(board, providers, clip_config(4), opts);
    REQUIRE(v.failures.size() == 1);
    CHECK(v.failures[0].shot == 1);
    CHECK(v.failures[0].error.find("crashed") != std::string::npos);
    CHECK(v.shots.size() == 2);
    CHECK(v.frames.size() == 7 + 4);
    CHECK(v.provenance.back().shot == 2);

    CHECK(parse_failure_policy("skip-and-report") == FailurePolicy::skip_and_report);
    CHECK(parse_failure_policy("abort-all") == FailurePolicy::abort_all);
    CHECK_THROWS_AS(parse_failure_policy("retry"), InvalidArgument);
}

TEST_CASE("run_dag scheduling") {
    SUBCASE("respects dependencies and the worker bound") {
        // diamond layers: 0 -> {1..6} -> 7
        std::vector<std::vector<std::size_t>> deps(8);
        for (std::size_t i = 1; i <= 6; ++i) deps[i] = {0};
        deps[7] = {1, 2, 3, 4, 5, 6};
        std::mutex m;
        std::vector<std::size_t> done;
        std::atomic<int> in_flight{0}, peak{0};
        run_dag(deps, 3, [&](std::size_t n) {
            const int now = ++in_flight;
            int p = peak.load();
            while (now > p && !peak.compare_exchange_weak(p, now)) {}
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
            {
                std::lock_guard lock(m);
                for (std::size_t d : deps[n]) CHECK(std::find(done.begin(), done.end(), d) != done.end());
                done.push_back(n);
            }
            --in_flight;
        });
        CHECK(done.size() == 8);
        CHECK(peak <= 3);
        CHECK(peak >= 2);
    }
    SUBCASE("stops after a failure") {
        std::vector<std::vector<std::size_t>> chain = {{}, {0}, {1}, {2}};
        std::vector<std::size_t> ran;
        CHECK_THROWS_AS(run_dag(chain, 2,
                                [&](std::size_t n) {
                                    ran.push_back(n);
                                    if (n == 1) throw IoError("disk full");
                                }),
                        IoError);
        CHECK(ran == std::vector<std::size_t>{0, 1});
    }
    SUBCASE("rejects bad graphs") {
        CHECK_THROWS_AS(run_dag({{1}, {0}}, 1, [](std::size_t) {}), InvalidArgument);
        CHECK_THROWS_AS(run_dag({{0}}, 1, [](std::size_t) {}), InvalidArgument);
        CHECK_THROWS_AS(run_dag({{}}, 0, [](std::size_t) {}), InvalidArgument);
        CHECK_NOTHROW(run_dag({}, 1, [](std::size_t) {}));
    }
}

TEST_CASE("export_video") {
    TempDir tmp;
    const std::vector<JobGraph> board = {plan_shot(make_shot("a", 3, 7), make_assets(3)),
                                         plan_shot(make_shot("b", 3, 8), make_assets(3))};
    const LongVideo v = run_storyboard(board, backends::mock_provider_set(), clip_config(9));
    export_video(v, tmp / "out", 16);

    std::size_t pngs = 0;
    for (const auto& e : fs::directory_iterator(tmp / "out/frames")) pngs += e.path().extension() == ".png";
    CHECK(pngs == 50);
    const auto encode = nlohmann::json::parse(image_io::read_text(tmp / "out/encode.json"));
    CHECK(encode["frame_count"] == 50);
    CHECK(encode["command"][3] == "16");
    CHECK(encode["command"].back() == (tmp / "out/video.mp4").string());
    const auto prov = nlohmann::json::parse(image_io::read_text(tmp / "out/provenance.json"));
    CHECK(prov["frames"].size() == 50);
    CHECK(prov["frames"][25]["shot"] == 1);

    const auto before = image_io::read_file(tmp / "out/frames/000017.png");
    export_video(v, tmp / "out", 16);
    CHECK(image_io::read_file(tmp / "out/frames/000017.png") == before);
    CHECK(image_io::decode_png_rgb(before).same_pixels(v.frames[17]));

    testsupport::write_text(tmp / "blocker", "file");
    CHECK_THROWS_AS(export_video(v, tmp / "blocker/out", 16), IoError);
    CHECK_THROWS_AS(export_video(LongVideo{}, tmp / "empty", 16), InvalidArgument);

    ExportOptions failing;
    failing.encoder_command = {"sh", "-c", "exit 4"};
    failing.run_encoder = true;
    CHECK_THROWS_AS(export_video(v, tmp / "out", 16, failing), SubprocessError);
}

TEST_CASE("board and plan files") {
    TempDir tmp;
    std::mt19937 rng(9);
    image_io::write_png(tmp / "s1.png", testsupport::blocky_gray(20, 12, rng));
    testsupport::write_text(tmp / "a1.txt", "  a fox in snow\n");
    testsupport::write_text(tmp / "m1.txt", "the fox jumps");
    testsupport::write_text(tmp / "board.json",
                            R"([{"sketch_path":"s1.png","appearance_path":"a1.txt","story_path":"m1.txt","n_stages":2}])");
    const auto entries = load_board(tmp / "board.json");
    REQUIRE(entries.size() == 1);
    CHECK(entries[0].sketch_path == tmp / "s1.png");
    const StoryboardShot shot = load_shot(entries[0], "shot_000");
    CHECK(shot.appearance.text == "a fox in snow");
    CHECK(shot.n_stages == 2);

    const std::vector<JobGraph> plan = {plan_shot(shot, make_assets(2))};
    const auto j = plan_to_json(plan);
    const auto back = plan_from_json(j);
    REQUIRE(back.size() == 1);
    CHECK(plan_to_json(back) == j);
    CHECK(back[0].shot.sketch.values().size() == shot.sketch.values().size());
    CHECK(std::equal(back[0].shot.sketch.values().begin(), back[0].shot.sketch.values().end(),
                     shot.sketch.values().begin()));

    testsupport::write_text(tmp / "empty.json", "[]");
    CHECK_THROWS_AS(load_board(tmp / "empty.json"), InvalidArgument);
    testsupport::write_text(tmp / "bad.json", R"([{"sketch_path":"s1.png"}])");
    CHECK_THROWS_AS(load_board(tmp / "bad.json"), InvalidArgument);
    CHECK_THROWS_AS(plan_from_json(nlohmann::json{{"shots", 3}}), InvalidArgument);
}

TEST_CASE("generated shots change less in order than shuffled") {
    // each frame is measured against its predecessor; against a fixed anchor a
    // shuffle keeps the same distance distribution and the ordering is invisible
    const auto providers = backends::mock_provider_set();
    auto& lp = *providers.perceptual;
    auto adjacent = [&](const std::vector<Frame>& f) {
        double sum = 0.0;
        for (std::size_t i = 1; i < f.size(); ++i) sum += metrics::temporal_lpips(f[i - 1], {&f[i], 1}, lp);
        return sum / static_cast<double>(f.size() - 1);
    };
    std::mt19937 rng(21);
    for (unsigned seed = 0; seed < 20; ++seed) {
        const ShotVideo v = run_shot(plan_shot(make_shot("s", 2, seed), make_assets(2, std::to_string(seed))),
                                     providers, clip_config(9));
        std::vector<Frame> frames(v.frames.frames().begin(), v.frames.frames().end());
        auto shuffled = frames;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CAPTURE(seed);
        CHECK(adjacent(frames) < adjacent(shuffled));
    }
}
