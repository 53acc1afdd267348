#include "doctest.h"
#include "support.hpp"

#include "storyboard/dataset.hpp"
#include "storyboard/error.hpp"

#include <algorithm>
#include <random>

using namespace storyboard;
using namespace storyboard::dataset;
using testsupport::TempDir;

namespace {

std::vector<std::string> rules(const std::vector<Violation>& v) {
    std::vector<std::string> out;
    for (const auto& x : v) out.push_back(x.rule);
    return out;
}

fs::path vdir(const TempDir& t, int video = 1) { return testsupport::video_dir(t.path(), "subset", video); }

}  // namespace

TEST_CASE("triplet id round trip") {
    for (int v : {0, 7, 999})
        for (int k : {0, 42, 9999}) {
            TripletId id{v, k};
            REQUIRE(TripletId::parse(id.str()) == id);
        }
    CHECK(TripletId{3, 12}.str() == "video_003_keyframe_0012");
    CHECK_FALSE(TripletId::parse("video_03_keyframe_0012"));
    CHECK_FALSE(TripletId::parse("video_003_keyframe_0012_sketch"));
    CHECK_FALSE(TripletId::parse("Video_003_keyframe_0012"));
    const TripletId too_big{1000, 0};
    CHECK_THROWS_AS(too_big.str(), InvalidArgument);
    CHECK(parse_video_dir("video_045") == 45);
    CHECK_FALSE(parse_video_dir("video_45"));
    CHECK(video_dir_name(5) == "video_005");
}

TEST_CASE("validate_triplet rules") {
    TempDir t;
    testsupport::make_triplet(t.path(), "subset", 1, 0);
    const std::string id = testsupport::triplet_name(1, 0);
    const fs::path v = vdir(t);

    SUBCASE("well formed") { CHECK(validate_triplet(v, id).empty()); }
    SUBCASE("bad id") { CHECK(rules(validate_triplet(v, "keyframe_1")) == std::vector<std::string>{"bad-id"}); }
    SUBCASE("id from another video") {
        CHECK(rules(validate_triplet(v, testsupport::triplet_name(2, 0))) == std::vector<std::string>{"id-mismatch"});
    }
    SUBCASE("missing story") {
        fs::remove(v / "story" / (id + ".txt"));
        auto out = validate_triplet(v, id);
        REQUIRE(out.size() == 1);
        CHECK(out[0].rule == "missing-modality");
        CHECK(out[0].path == v / "story" / (id + ".txt"));
    }
    SUBCASE("duplicate sketch") {
        image_io::write_png(v / "sketch" / (id + "_sketch.png"), GrayImage(2, 2, std::uint8_t{0}));
        CHECK(rules(validate_triplet(v, id)) == std::vector<std::string>{"duplicate-modality"});
    }
    SUBCASE("wrong extension") {
        fs::rename(v / "static_prompt" / (id + ".txt"), v / "static_prompt" / (id + ".md"));
        CHECK(rules(validate_triplet(v, id)) == std::vector<std::string>{"name-mismatch"});
    }
    SUBCASE("whitespace-only appearance") {
        testsupport::write_text(v / "static_prompt" / (id + ".txt"), " \n\t ");
        auto out = validate_triplet(v, id);
        CHECK(rules(out) == std::vector<std::string>{"empty-text"});
        CHECK(out[0].path == v / "static_prompt" / (id + ".txt"));
    }
    SUBCASE("rgb sketch") {
        image_io::write_png(v / "sketch" / (id + ".png"), Frame::filled(4, 4, 1, 2, 3));
        CHECK(rules(validate_triplet(v, id)) == std::vector<std::string>{"not-single-channel"});
    }
    SUBCASE("undecodable sketch") {
        testsupport::write_text(v / "sketch" / (id + ".png"), "not a png");
        CHECK(rules(validate_triplet(v, id)) == std::vector<std::string>{"not-single-channel"});
    }
    SUBCASE("residual suffix") {
        fs::rename(v / "sketch" / (id + ".png"), v / "sketch" / (id + "_sketch.png"));
        CHECK(rules(validate_triplet(v, id)) == std::vector<std::string>{"residual-suffix"});
    }
    SUBCASE("several problems at once, in rule order") {
        fs::remove(v / "story" / (id + ".txt"));
        testsupport::write_text(v / "static_prompt" / (id + ".txt"), "");
        CHECK(rules(validate_triplet(v, id)) == std::vector<std::string>{"missing-modality", "empty-text"});
    }
    CHECK_THROWS_AS(validate_triplet(t / "absent", id), IoError);
}

TEST_CASE("assemble a small corpus") {
    TempDir t;
    for (int v : {1, 2})
        for (int k : {3, 1, 2}) testsupport::make_triplet(t.path(), "online", v, k);

    SUBCASE("all valid") {
        auto m = assemble_manifest(t.path());
        CHECK(m.sequence_count() == 2);
        CHECK(m.triplet_count() == 6);
        CHECK(m.violations.empty());
        const auto& seq = m.subsets.at("online")[0];
        CHECK(seq.video == "video_001");
        CHECK(seq.triplets[0].id.keyframe == 1);
        CHECK(seq.triplets[2].id.keyframe == 3);
        for (const auto& s : m.subsets.at("online"))
            for (const auto& tr : s.triplets)
                CHECK(validate_triplet(tr.sketch.parent_path().parent_path(), tr.id.str()).empty());
    }
    SUBCASE("one id mismatch") {
        // a video_002 triplet filed under video_001
        const fs::path v1 = testsupport::video_dir(t.path(), "online", 1);
        const fs::path v2 = testsupport::video_dir(t.path(), "online", 2);
        const std::string id = testsupport::triplet_name(2, 3);
        for (const char* d : {"sketch", "static_prompt", "story"}) {
            const std::string ext = std::string(d) == "sketch" ? ".png" : ".txt";
            fs::rename(v2 / d / (id + ext), v1 / d / (id + ext));
        }
        auto m = assemble_manifest(t.path());
        CHECK(m.triplet_count() == 5);
        REQUIRE(m.violations.size() == 1);
        CHECK(m.violations[0].rule == "id-mismatch");
    }
    SUBCASE("unexpected folders") {
        fs::create_directories(t / "online/video_001/masks");
        fs::create_directories(t / "online/clips");
        auto m = assemble_manifest(t.path());
        CHECK(m.triplet_count() == 6);
        CHECK(rules(m.violations) == std::vector<std::string>{"bad-video-dir", "extra-folder"});
    }
    SUBCASE("a sequence without valid triplets is dropped") {
        for (int k : {1, 2, 3})
            fs::remove(testsupport::video_dir(t.path(), "online", 2) / "story" /
                       (testsupport::triplet_name(2, k) + ".txt"));
        auto m = assemble_manifest(t.path());
        CHECK(m.sequence_count() == 1);
        CHECK(m.violations.size() == 3);
    }
}

TEST_CASE("assemble edge cases") {
    TempDir t;
    auto m = assemble_manifest(t.path());
    CHECK(m.triplet_count() == 0);
    CHECK(m.violations.empty());
    auto s = compute_stats(m);
    CHECK(s.triplet_count == 0);
    CHECK(s.mean_triplets_per_sequence == 0.0);
    CHECK(s.median_triplets_per_sequence == 0);
    CHECK(s.resolution_histogram.empty());
    CHECK_THROWS_AS(assemble_manifest(t / "missing"), InvalidArgument);
}

TEST_CASE("stats arithmetic") {
    CHECK(mean_2dp(5, 2) == 2.5);
    CHECK(mean_2dp(1233, 126) == 9.79);
    CHECK(mean_2dp(1, 3) == 0.33);
    CHECK(mean_2dp(2, 3) == 0.67);
    CHECK(mean_2dp(0, 0) == 0.0);
    CHECK(lower_median({2, 3}) == 2);
    CHECK(lower_median({5, 1, 3}) == 3);
    CHECK(lower_median({}) == 0);

    std::mt19937 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::size_t> v(1 + rng() % 30);
        for (auto& x : v) x = rng() % 20;
        const std::size_t med = lower_median(v);
        // lower middle: at least half the values are >= it, more than half are <= it
        const auto le = std::count_if(v.begin(), v.end(), [&](auto x) { return x <= med; });
        const auto ge = std::count_if(v.begin(), v.end(), [&](auto x) { return x >= med; });
        CHECK(2 * le >= static_cast<long>(v.size()));
        CHECK(2 * ge >= static_cast<long>(v.size()));
        std::shuffle(v.begin(), v.end(), rng);
        CHECK(lower_median(v) == med);
    }
}

TEST_CASE("stats of a mini corpus") {
    TempDir t;
    for (int k = 0; k < 2; ++k) testsupport::make_triplet(t.path(), "a", 1, k, 4, 2, 600, 338);
    for (int k = 0; k < 3; ++k) testsupport::make_triplet(t.path(), "b", 2, k, 7, 3, 600, 600);
    auto s = compute_stats(assemble_manifest(t.path()));
    CHECK(s.triplet_count == 5);
    CHECK(s.sequence_count == 2);
    CHECK(s.mean_triplets_per_sequence == 2.5);
    CHECK(s.median_triplets_per_sequence == 2);
    CHECK(s.mean_appearance_words == mean_2dp(2 * 4 + 3 * 7, 5));
    CHECK(s.mean_motion_words == mean_2dp(2 * 2 + 3 * 3, 5));
    CHECK(s.resolution_histogram.at("600x338") == 2);
    CHECK(s.resolution_histogram.at("600x600") == 3);
    CHECK(s.subset_triplets.at("a") + s.subset_triplets.at("b") == s.triplet_count);
    auto table = stats_table(s);
    CHECK(table.find("2.50") != std::string::npos);
    auto j = to_json(s);
    CHECK(j["triplet_count"] == 5);
    CHECK(j["median_triplets_per_sequence"] == 2);
}

TEST_CASE("published subset shape") {
    TempDir t;
    testsupport::make_published_corpus(t.path());
    auto m = assemble_manifest(t.path());
    CHECK(m.violations.empty());
    auto s = compute_stats(m);
    CHECK(s.triplet_count == 1233);
    CHECK(s.sequence_count == 126);
    CHECK(s.subset_triplets.at("self") == 201);
    CHECK(s.subset_triplets.at("anime") == 932);
    CHECK(s.subset_triplets.at("ai") == 100);
    CHECK(s.subset_sequences.at("self") == 20);
    CHECK(s.subset_sequences.at("anime") == 96);
    CHECK(s.subset_sequences.at("ai") == 10);
    CHECK(s.mean_triplets_per_sequence == 9.79);
    CHECK(s.median_triplets_per_sequence == 10);
}

TEST_CASE("manifest json round trip") {
    TempDir t;
    for (int k = 0; k < 3; ++k) testsupport::make_triplet(t.path(), "s", 4, k);
    fs::remove(testsupport::video_dir(t.path(), "s", 4) / "story" / (testsupport::triplet_name(4, 2) + ".txt"));
    auto m = assemble_manifest(t.path());
    auto j = to_json(m);
    CHECK(j["subsets"]["s"][0]["triplets"][0]["sketch"] == "s/video_004/sketch/video_004_keyframe_0000.png");
    auto back = manifest_from_json(j);
    CHECK(back.root == m.root);
    CHECK(back.triplet_count() == m.triplet_count());
    CHECK(back.violations == m.violations);
    const auto& a = m.subsets.at("s")[0].triplets[1];
    const auto& b = back.subsets.at("s")[0].triplets[1];
    CHECK(a.id == b.id);
    CHECK(a.sketch == b.sketch);
    CHECK(a.motion == b.motion);
    CHECK(compute_stats(back).triplet_count == 2);
    CHECK_THROWS_AS(manifest_from_json(nlohmann::json{{"subsets", 1}}), InvalidArgument);
}
