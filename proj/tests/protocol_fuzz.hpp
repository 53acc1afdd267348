#pragma once

// Random wire-protocol traffic shared by the backend tests and the acceptance binary.

#include "support.hpp"

#include "storyboard/backends/protocol.hpp"
#include "storyboard/backends/stage_config.hpp"

#include "json.hpp"

#include <cmath>
#include <random>
#include <string>

namespace testsupport {

using nlohmann::json;
namespace protocol = storyboard::backends::protocol;

inline std::string random_string(std::mt19937& rng) {
    static const std::string alphabet = "abcXYZ 019\"\\/\n\t{}[]:,\x01\x1f~";
    std::string s(rng() % 12, ' ');
    for (auto& c : s) c = alphabet[rng() % alphabet.size()];
    return s;
}

inline json random_value(std::mt19937& rng, int depth) {
    switch (rng() % (depth > 2 ? 5 : 7)) {
        case 0: return static_cast<std::int64_t>(rng()) - (1LL << 31);
        case 1: return std::ldexp(static_cast<double>(rng()), -static_cast<int>(rng() % 40)) - 3.5;
        case 2: return random_string(rng);
        case 3: return rng() % 2 == 0;
        case 4: return nullptr;
        case 5: {
            json a = json::array();
            for (unsigned i = rng() % 4; i > 0; --i) a.push_back(random_value(rng, depth + 1));
            return a;
        }
        default: {
            json o = json::object();
            for (unsigned i = rng() % 4; i > 0; --i) o[random_string(rng)] = random_value(rng, depth + 1);
            return o;
        }
    }
}

// Valid request payload for each op, built from small random images.
inline json valid_payload(const std::string& op, std::mt19937& rng) {
    const int w = 2 + static_cast<int>(rng() % 12), h = 2 + static_cast<int>(rng() % 12);
    auto img = [&] { return protocol::encode_image(random_frame(w, h, rng)); };
    if (op == "embed_image") return {{"image", img()}};
    if (op == "embed_text") return {{"text", random_string(rng)}};
    if (op == "perceptual_distance") return {{"a", img()}, {"b", img()}};
    if (op == "generate_text") {
        json p{{"system", "s"}, {"prompt", random_string(rng)}};
        if (rng() % 2) p["stage_count"] = 1 + rng() % 5;
        return p;
    }
    if (op == "describe_image") return {{"image", img()}, {"question", "Describe the scene"}};
    if (op == "color_sketch")
        return {{"sketch", protocol::encode_image(random_gray(w, h, rng))}, {"appearance", "a"},
                {"config", storyboard::backends::ColoringConfig{}}};
    if (op == "derive_keyframe") return {{"reference", img()}, {"conversion", random_string(rng)}};
    return {{"first", img()},
            {"last", img()},
            {"frames", 2 + rng() % 4},
            {"dynamic", {{"positive", "p"}, {"action", "a"}, {"face", "f"}, {"body", "b"}, {"style", "s"}}}};
}

/// Lines that no conforming peer may accept as a request.
inline const std::vector<std::string>& malformed_requests() {
    static const std::vector<std::string> lines = {
        "", "nope", "[1,2]", "{}", R"({"id":1,"op":"embed_text"})", R"({"id":0,"op":"embed_text","payload":{}})",
        R"({"id":-3,"op":"x","payload":{}})", R"({"id":1.5,"op":"embed_text","payload":{}})",
        R"({"id":1,"op":7,"payload":{}})", R"({"id":1,"op":"embed_text","payload":[]})",
        R"({"id":1,"op":"embed_text","payload":{},"extra":1})", R"({"id":1,"op":"embed_text","payload":{})"};
    return lines;
}

}  // namespace testsupport
