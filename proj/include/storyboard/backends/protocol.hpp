#pragma once

// Newline-delimited JSON provider protocol. One message per line, compact,
// keys sorted. See docs/protocol.md for the schemas.

#include "storyboard/frames.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace storyboard::backends::protocol {

inline constexpr std::array<const char*, 8> kOps = {
    "embed_image",   "embed_text",    "perceptual_distance", "generate_text",
    "describe_image", "color_sketch", "derive_keyframe",     "generate_clip"};

bool is_known_op(const std::string& op);

struct Request {
    std::uint64_t id = 0;  // >= 1
    std::string op;
    nlohmann::json payload = nlohmann::json::object();

    friend bool operator==(const Request&, const Request&) = default;
};

struct Response {
    std::uint64_t id = 0;  // 0 answers an unparseable request
    bool ok = true;
    nlohmann::json result;  // object when ok
    std::string error;      // non-empty when !ok

    static Response success(std::uint64_t id, nlohmann::json result);
    static Response failure(std::uint64_t id, std::string error);

    friend bool operator==(const Response&, const Response&) = default;
};

/// First line a provider writes on stdio; body of GET /manifest over HTTP.
struct Manifest {
    std::vector<std::string> capabilities;
    std::size_t embedding_dim = 0;
    nlohmann::json models = nlohmann::json::object();

    bool supports(const std::string& op) const;
    friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// Canonical single-line encodings. Decoders throw ProtocolError on any
/// schema violation; encode(decode(line)) == line for canonical input.
std::string encode(const Request& r);
std::string encode(const Response& r);
std::string encode(const Manifest& m);
Request decode_request(const std::string& line);
Response decode_response(const std::string& line);
Manifest decode_manifest(const std::string& line);

/// Base64 PNG payload fields.
std::string encode_image(const Frame& frame);
std::string encode_image(const GrayImage& image);
Frame decode_frame(const std::string& b64);
GrayImage decode_gray(const std::string& b64);

/// Reads a required field of the given JSON type; throws ProtocolError naming it.
const nlohmann::json& field(const nlohmann::json& object, const char* key, nlohmann::json::value_t type);

}  // namespace storyboard::backends::protocol
