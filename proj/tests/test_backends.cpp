#include "doctest.h"
#include "protocol_fuzz.hpp"
#include "support.hpp"

#include "storyboard/backends/mocks.hpp"
#include "storyboard/backends/registry.hpp"
#include "storyboard/backends/remote.hpp"
#include "storyboard/backends/server.hpp"
#include "storyboard/backends/transport.hpp"
#include "storyboard/error.hpp"
#include "storyboard/hash.hpp"
#include "storyboard/metrics.hpp"

#include <cmath>
#include <map>
#include <random>
#include <thread>

using namespace storyboard;
using namespace storyboard::backends;
using nlohmann::json;
using testsupport::random_string;
using testsupport::random_value;
using testsupport::valid_payload;

namespace {

std::shared_ptr<Dispatcher> mock_dispatcher() {
    const auto m = mock_manifest();
    return std::make_shared<Dispatcher>(mock_provider_set(), m.embedding_dim, m.models);
}

double norm(const EmbeddingVector& v) {
    double s = 0;
    for (double x : v.values()) s += x * x;
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("stage configuration defaults") {
    StageConfig c;
    CHECK(c.coloring.control_strength == 0.95);
    CHECK(c.coloring.steps == 15);
    CHECK(c.coloring.cfg == 7.0);
    CHECK(c.coloring.denoise == 0.8);
    CHECK(c.coloring.guidance == 3.5);
    CHECK(c.coloring.preprocess_resolution == 1024);
    CHECK(c.derivative.steps == 20);
    CHECK(c.derivative.cfg == 1.0);
    CHECK(c.derivative.guidance == 2.5);
    CHECK(c.derivative.sampler == "euler");
    CHECK(c.derivative.scheduler == "simple");
    CHECK(c.video.steps == 20);
    CHECK(c.video.cfg == 4.0);
    CHECK(c.video.high_noise_range == std::array<int, 2>{0, 10});
    CHECK(c.video.latent_frames == 81);
    CHECK(c.video.frames_per_clip() == 81);
    CHECK_NOTHROW(c.validate());

    json j = c;
    StageConfig back;
    from_json(j, back);
    CHECK(json(back) == j);

    StageConfig partial;
    from_json(json{{"video", {{"clip_frames", 9}, {"resolution", {640, 640}}}}}, partial);
    CHECK(partial.video.frames_per_clip() == 9);
    CHECK(partial.video.steps == 20);
    CHECK_NOTHROW(partial.validate());

    StageConfig bad;
    bad.video.resolution = {800, 600};
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = {};
    bad.coloring.control_strength = 0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = {};
    bad.video.clip_frames = 1;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("mock image embedding") {
    std::mt19937 rng(1);
    const Frame f = testsupport::random_frame(37, 23, rng);
    CHECK(mock_embed_image(f) == mock_embed_image(f));
    CHECK(metrics::cosine_sim(mock_embed_image(f), mock_embed_image(f)) == doctest::Approx(1.0));
    CHECK(mock_embed_image(Frame::filled(9, 9, 40, 50, 60)) == EmbeddingVector::basis(64, 0));

    // left half black, right half white: every cell is -127.5 or +127.5 before scaling
    Frame split = Frame::filled(16, 8, 0, 0, 0);
    for (int y = 0; y < 8; ++y)
        for (int x = 8; x < 16; ++x)
            for (int c = 0; c < 3; ++c) split.mutable_pixels()[(y * 16 + x) * 3 + c] = 255;
    const auto v = mock_embed_image(split);
    REQUIRE(v.dim() == 64);
    for (int cy = 0; cy < 8; ++cy)
        for (int cx = 0; cx < 8; ++cx) CHECK(v.values()[cy * 8 + cx] == doctest::Approx(cx < 4 ? -0.125 : 0.125));

    for (int t = 0; t < 50; ++t) {
        const int w = 1 + static_cast<int>(rng() % 30), h = 1 + static_cast<int>(rng() % 30);
        CHECK(norm(mock_embed_image(testsupport::random_frame(w, h, rng))) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("mock text embedding") {
    CHECK(mock_embed_text("") == EmbeddingVector::basis(64, 0));
    CHECK(mock_embed_text("ab") == EmbeddingVector::basis(64, 0));
    CHECK(metrics::cosine_sim(mock_embed_text("a fox"), mock_embed_text("a fox")) == doctest::Approx(1.0));

    // trigram-count oracle for "abc" against "abc abc"
    auto counts = [](const std::string& s) {
        std::map<std::uint32_t, double> bins;
        for (std::size_t i = 0; i + 3 <= s.size(); ++i) bins[fnv1a32(s.substr(i, 3)) % 64] += 1;
        return bins;
    };
    auto a = counts("abc"), b = counts("abc abc");
    double dot = 0, na = 0, nb = 0;
    for (auto& [k, x] : a) {
        na += x * x;
        if (b.count(k)) dot += x * b[k];
    }
    for (auto& [k, x] : b) nb += x * x;
    const double expect = dot / std::sqrt(na * nb);
    CHECK(metrics::cosine_sim(mock_embed_text("abc"), mock_embed_text("abc abc")) ==
          doctest::Approx(expect).epsilon(1e-12));
    CHECK(norm(mock_embed_text("the quick brown fox")) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mock perceptual distance") {
    const Frame a = Frame::filled(10, 10, 100, 100, 100);
    CHECK(mock_perceptual(a, a) == 0.0);
    CHECK(mock_perceptual(Frame::filled(3, 3, 0, 0, 0), Frame::filled(3, 3, 255, 255, 255)) == 1.0);
    Frame half = a;
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 10; ++x)
            for (int c = 0; c < 3; ++c) half.mutable_pixels()[(y * 10 + x) * 3 + c] = 151;
    CHECK(mock_perceptual(a, half) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK_THROWS_AS(mock_perceptual(a, Frame::filled(9, 10, 0, 0, 0)), InvalidArgument);
}

TEST_CASE("mock generation suite") {
    std::mt19937 rng(3);
    const GrayImage sk = testsupport::random_gray(12, 9, rng);
    const Frame colored = mock_color_sketch(sk, "a red fox");
    const std::uint32_t h = fnv1a32("a red fox");
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 12; ++x) {
            REQUIRE(colored.at(x, y, 0) == sk.at(x, y));
            REQUIRE(colored.at(x, y, 1) == (h & 0xff));
            REQUIRE(colored.at(x, y, 2) == ((h >> 8) & 0xff));
        }

    const Frame ref = testsupport::random_frame(12, 9, rng);
    const Frame d1 = mock_derive_keyframe(ref, "raise the arm");
    CHECK(d1.same_pixels(mock_derive_keyframe(ref, "raise the arm")));
    const int offset = static_cast<int>(fnv1a32("raise the arm") % 33) - 16;
    for (std::size_t i = 0; i < ref.pixels().size(); ++i)
        REQUIRE(d1.pixels()[i] == std::clamp(ref.pixels()[i] + offset, 0, 255));

    const Frame last = testsupport::random_frame(12, 9, rng);
    for (int J : {2, 3, 9, 81}) {
        auto clip = mock_generate_clip(ref, last, J);
        REQUIRE(static_cast<int>(clip.size()) == J);
        CHECK(clip.front().same_pixels(ref));
        CHECK(clip.back().same_pixels(last));
        // interior frames match the rational cross-fade oracle
        const int j = J / 2;
        for (std::size_t i = 0; i < ref.pixels().size(); ++i) {
            const int num = (J - 1 - j) * ref.pixels()[i] + j * last.pixels()[i];
            REQUIRE(clip[j].pixels()[i] == (2 * num + (J - 1)) / (2 * (J - 1)));
        }
    }
    for (const Frame& f : mock_generate_clip(ref, ref, 7)) CHECK(f.same_pixels(ref));
    CHECK_THROWS_AS(mock_generate_clip(ref, ref, 1), InvalidArgument);
    CHECK_THROWS_AS(mock_generate_clip(ref, Frame::filled(3, 3, 0, 0, 0), 4), InvalidArgument);

    const std::string stages = mock_generate_text({"s", "a cat jumps", 3});
    CHECK(json::parse(stages).size() == 3);
    CHECK(mock_generate_text({"s", "a cat jumps", std::nullopt}).rfind("a cat jumps", 0) == 0);
}

TEST_CASE("protocol encode/decode round trip") {
    std::mt19937 rng(5);
    for (int t = 0; t < 1000; ++t) {
        protocol::Request r{1 + rng() % 100000, protocol::kOps[rng() % 8], json::object()};
        for (unsigned k = rng() % 4; k > 0; --k) r.payload[random_string(rng)] = random_value(rng, 0);
        const std::string line = protocol::encode(r);
        REQUIRE(line.find('\n') == std::string::npos);
        const auto back = protocol::decode_request(line);
        REQUIRE(back == r);
        REQUIRE(protocol::encode(back) == line);

        protocol::Response ok = protocol::Response::success(r.id, r.payload);
        const std::string ok_line = protocol::encode(ok);
        REQUIRE(protocol::encode(protocol::decode_response(ok_line)) == ok_line);
        protocol::Response bad = protocol::Response::failure(r.id, "x" + random_string(rng));
        REQUIRE(protocol::decode_response(protocol::encode(bad)) == bad);
    }
    const auto m = mock_manifest();
    CHECK(protocol::decode_manifest(protocol::encode(m)) == m);
    CHECK(m.capabilities.size() == 8);
    CHECK(m.embedding_dim == 64);
}

TEST_CASE("protocol rejects malformed messages") {
    for (const auto& line : testsupport::malformed_requests()) CHECK_THROWS_AS(protocol::decode_request(line), ProtocolError);
    CHECK_THROWS_AS(protocol::decode_response(R"({"id":1,"ok":false,"error":""})"), ProtocolError);
    CHECK_THROWS_AS(protocol::decode_response(R"({"id":1,"ok":true})"), ProtocolError);
    CHECK_THROWS_AS(protocol::decode_response(R"({"id":1,"ok":true,"result":{},"error":"x"})"), ProtocolError);
    CHECK_THROWS_AS(protocol::decode_manifest(R"({"manifest":{"capabilities":[1],"embedding_dim":3}})"),
                    ProtocolError);
    CHECK_THROWS_AS(protocol::encode(protocol::Request{0, "embed_text", json::object()}), InvalidArgument);
    CHECK_THROWS_AS(protocol::decode_frame("!!notbase64"), ProtocolError);
}

TEST_CASE("dispatcher") {
    auto d = mock_dispatcher();
    std::mt19937 rng(7);

    SUBCASE("unknown op") {
        auto r = d->handle({3, "teleport", json::object()});
        CHECK_FALSE(r.ok);
        CHECK(r.id == 3);
        CHECK(r.error == "unsupported op");
    }
    SUBCASE("malformed line answers with id 0") {
        auto r = protocol::decode_response(d->handle_line("{broken"));
        CHECK(r.id == 0);
        CHECK_FALSE(r.ok);
        CHECK(r.error.rfind("malformed request", 0) == 0);
    }
    SUBCASE("bad payload") {
        auto r = d->handle({4, "embed_image", json{{"image", 5}}});
        CHECK_FALSE(r.ok);
        CHECK(r.error.rfind("invalid payload", 0) == 0);
        r = d->handle({5, "embed_image", json{{"image", "AAAA"}}});
        CHECK_FALSE(r.ok);
    }
    SUBCASE("capabilities follow the provider set") {
        ProviderSet partial;
        partial.text_embedder = std::make_shared<MockProviders>();
        Dispatcher only_text(partial, 64);
        CHECK(only_text.manifest().capabilities == std::vector<std::string>{"embed_text"});
        CHECK(only_text.handle({1, "embed_image", valid_payload("embed_image", rng)}).error == "unsupported op");
        CHECK(only_text.handle({2, "embed_text", json{{"text", "hi there"}}}).ok);
    }
    SUBCASE("every valid request is answered") {
        for (int t = 0; t < 200; ++t) {
            const std::string op = protocol::kOps[t % 8];
            const auto resp = protocol::decode_response(
                d->handle_line(protocol::encode(protocol::Request{static_cast<std::uint64_t>(t + 1), op, valid_payload(op, rng)})));
            CAPTURE(op);
            CHECK(resp.ok);
            CHECK(resp.id == static_cast<std::uint64_t>(t + 1));
        }
    }
}

TEST_CASE("remote provider over an in-process connection matches the mocks") {
    auto conn = std::make_shared<InProcessConnection>(mock_dispatcher());
    RemoteProvider remote(conn, Seconds(5));
    std::mt19937 rng(9);
    const Frame a = testsupport::random_frame(20, 14, rng), b = testsupport::random_frame(20, 14, rng);
    const GrayImage sk = testsupport::random_gray(20, 14, rng);

    CHECK(remote.embed_image(a) == mock_embed_image(a));
    CHECK(remote.embed_text("hello world") == mock_embed_text("hello world"));
    CHECK(remote.perceptual_distance(a, b) == mock_perceptual(a, b));
    CHECK(remote.color_sketch(sk, "blue", {}).same_pixels(mock_color_sketch(sk, "blue")));
    CHECK(remote.derive_keyframe(a, "turn", {}).same_pixels(mock_derive_keyframe(a, "turn")));
    auto clip = remote.generate_clip(a, b, {"p", "a", "f", "b", "s"}, 5, {});
    auto expect = mock_generate_clip(a, b, 5);
    REQUIRE(clip.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(clip[i].same_pixels(expect[i]));
        CHECK(clip[i].index() == i);
    }
    CHECK(remote.generate_text({"s", "p", 2}) == mock_generate_text({"s", "p", 2}));
    CHECK(remote.describe_image(a, "subject?") == mock_describe_image(a, "subject?"));
    CHECK_THROWS_AS(remote.generate_clip(a, testsupport::random_frame(3, 3, rng), {}, 4, {}), ProviderError);

    auto batch = conn->call_batch({{"embed_text", json{{"text", "x"}}}, {"teleport", json::object()}}, Seconds(5));
    REQUIRE(batch.size() == 2);
    CHECK(batch[0].ok);
    CHECK_FALSE(batch[1].ok);
    CHECK(batch[1].id == batch[0].id + 1);
}

TEST_CASE("stdio transport against the mock provider binary") {
    StdioConnection conn({MOCK_PROVIDER_PATH}, Seconds(10));
    CHECK(conn.manifest() == mock_manifest());
    std::mt19937 rng(11);

    SUBCASE("pipelined fuzz with id correlation") {
        std::vector<std::pair<std::string, json>> calls;
        for (int t = 0; t < 200; ++t) {
            const std::string op = protocol::kOps[rng() % 8];
            calls.emplace_back(op, valid_payload(op, rng));
        }
        auto responses = conn.call_batch(calls, Seconds(30));
        REQUIRE(responses.size() == calls.size());
        for (std::size_t i = 0; i < responses.size(); ++i) {
            CHECK(responses[i].ok);
            if (i) CHECK(responses[i].id == responses[i - 1].id + 1);
        }
    }
    SUBCASE("embedding through the remote provider") {
        RemoteProvider remote(std::shared_ptr<Connection>(&conn, [](Connection*) {}), Seconds(10));
        const Frame f = testsupport::random_frame(16, 16, rng);
        const auto v = remote.embed_image(f);
        CHECK(v.dim() == conn.manifest().embedding_dim);
        CHECK(norm(v) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(v == mock_embed_image(f));
    }
    SUBCASE("provider errors surface with their message") {
        try {
            conn.call("teleport", json::object(), Seconds(5));
            FAIL("expected a provider error");
        } catch (const ProviderError& e) {
            CHECK(std::string(e.what()).find("unsupported op") != std::string::npos);
        }
    }
}

TEST_CASE("stdio timeout against a sleeping provider") {
    StdioConnection conn({MOCK_PROVIDER_PATH, "--delay-ms", "300"}, Seconds(10));
    CHECK_THROWS_AS(conn.call("embed_text", json{{"text", "abc"}}, Seconds(0.001)), TimeoutError);
    // the late answer to the abandoned request is discarded, later calls still work
    auto r = conn.call("embed_text", json{{"text", "abc"}}, Seconds(10));
    CHECK(r["vector"].size() == 64);
}

TEST_CASE("stdio provider that dies or talks nonsense") {
    testsupport::TempDir tmp;
    const fs::path junk = tmp / "junk.sh";
    testsupport::write_text(junk, "#!/bin/sh\necho hello\n");
    fs::permissions(junk, fs::perms::owner_all);
    CHECK_THROWS_AS(StdioConnection({junk.string()}, Seconds(5)), ProtocolError);

    const fs::path quitter = tmp / "quit.sh";
    testsupport::write_text(quitter, "#!/bin/sh\nprintf '%s\\n' '{\"manifest\":{\"capabilities\":[\"embed_text\"],\"embedding_dim\":4,\"models\":{}}}'\nread line\nexit 0\n");
    fs::permissions(quitter, fs::perms::owner_all);
    StdioConnection conn({quitter.string()}, Seconds(5));
    CHECK(conn.manifest().embedding_dim == 4);
    CHECK_THROWS_AS(conn.call("embed_text", json{{"text", "a"}}, Seconds(5)), TransportError);
}

TEST_CASE("http transport") {
    auto dispatcher = mock_dispatcher();
    HttpServer server(dispatcher);
    const int port = server.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread runner([&] { server.run(); });

    {
        HttpConnection conn("http://127.0.0.1:" + std::to_string(port), Seconds(5));
        CHECK(conn.manifest() == mock_manifest());
        RemoteProvider remote(std::shared_ptr<Connection>(&conn, [](Connection*) {}), Seconds(5));
        std::mt19937 rng(13);
        const Frame f = testsupport::random_frame(10, 10, rng);
        CHECK(remote.embed_image(f) == mock_embed_image(f));
        CHECK(remote.embed_text("x y z") == mock_embed_text("x y z"));

        dispatcher->set_delay(std::chrono::milliseconds(300));
        CHECK_THROWS_AS(conn.call("embed_text", json{{"text", "abc"}}, Seconds(0.001)), TimeoutError);
        dispatcher->set_delay(std::chrono::milliseconds(0));
    }
    server.stop();
    runner.join();
    CHECK_THROWS_AS(HttpConnection("http://127.0.0.1:" + std::to_string(port), Seconds(1)), TransportError);
}

TEST_CASE("provider registry") {
    SUBCASE("parsing") {
        auto r = ProviderRegistry::from_json(json::parse(R"({
            "default": {"transport": "mock"},
            "embed_image": {"transport": "stdio", "command": "prov --flag  x", "dim": 512, "timeout": 5},
            "embed_text": {"transport": "http", "url": "http://h:1"}
        })"));
        CHECK(r.entry_for("embed_image")->command == std::vector<std::string>{"prov", "--flag", "x"});
        CHECK(r.entry_for("embed_image")->dim == 512u);
        CHECK(r.entry_for("embed_image")->timeout == 5.0);
        CHECK(r.entry_for("embed_text")->transport == "http");
        CHECK(r.entry_for("generate_clip")->transport == "mock");
        CHECK_FALSE(ProviderRegistry::from_json(json::object()).entry_for("embed_text"));
        CHECK_THROWS_AS(ProviderRegistry::from_json(json{{"teleport", json::object()}}), InvalidArgument);
        CHECK_THROWS_AS(ProviderRegistry::from_json(json{{"embed_text", {{"transport", "stdio"}}}}), InvalidArgument);
        CHECK_THROWS_AS(ProviderRegistry::from_json(json{{"embed_text", {{"transport", "pigeon"}}}}), InvalidArgument);
        CHECK_THROWS_AS(ProviderRegistry::from_json(json::array()), InvalidArgument);
    }
    SUBCASE("all mock") {
        auto set = ProviderRegistry::all_mock().connect();
        REQUIRE(set.image_embedder);
        REQUIRE(set.clips);
        std::mt19937 rng(1);
        const Frame f = testsupport::random_frame(8, 8, rng);
        CHECK(set.image_embedder->embed_image(f) == mock_embed_image(f));
        CHECK_THROWS_AS(ProviderRegistry::from_json(json{{"embed_text", {{"dim", 3}}}}).connect(), ProtocolError);
    }
    SUBCASE("identical commands share one provider process") {
        testsupport::TempDir tmp;
        const fs::path launches = tmp / "launches.log";
        const fs::path wrapper = tmp / "wrap.sh";
        testsupport::write_text(wrapper, "#!/bin/sh\necho start >> '" + launches.string() + "'\nexec '" +
                                             std::string(MOCK_PROVIDER_PATH) + "' \"$@\"\n");
        fs::permissions(wrapper, fs::perms::owner_all);
        const json entry{{"transport", "stdio"}, {"command", {wrapper.string()}}, {"dim", 64}};
        auto set = ProviderRegistry::from_json(json{{"embed_image", entry}, {"embed_text", entry}}).connect();
        REQUIRE(set.image_embedder);
        REQUIRE(set.text_embedder);
        CHECK_FALSE(set.clips);
        CHECK(set.text_embedder->embed_text("shared") == mock_embed_text("shared"));
        CHECK(set.image_embedder->embed_image(Frame::filled(4, 4, 1, 2, 3)) == EmbeddingVector::basis(64, 0));
        CHECK(image_io::read_text(launches) == "start\n");

        const json wrong_dim{{"transport", "stdio"}, {"command", {wrapper.string()}}, {"dim", 32}};
        CHECK_THROWS_AS(ProviderRegistry::from_json(json{{"embed_text", wrong_dim}}).connect(), ProtocolError);
    }
}
