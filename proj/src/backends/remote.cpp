#include "storyboard/backends/remote.hpp"

#include "storyboard/error.hpp"

#include <cmath>

namespace storyboard::backends {

using nlohmann::json;
using protocol::field;
using value_t = json::value_t;

RemoteProvider::RemoteProvider(std::shared_ptr<Connection> connection, Seconds timeout)
    : connection_(std::move(connection)), timeout_(timeout) {
    if (!connection_) throw InvalidArgument("null provider connection");
    if (timeout_.count() <= 0) throw InvalidArgument("provider timeout must be positive");
}

json RemoteProvider::call(const char* op, json payload) { return connection_->call(op, std::move(payload), timeout_); }

EmbeddingVector RemoteProvider::vector_result(const json& result) {
    std::vector<double> values;
    for (const auto& v : field(result, "vector", value_t::array)) {
        if (!v.is_number()) throw ProtocolError("embedding entries must be numbers");
        values.push_back(v.get<double>());
    }
    const std::size_t dim = manifest().embedding_dim;
    if (dim != 0 && values.size() != dim)
        throw ProtocolError("embedding has " + std::to_string(values.size()) + " entries, manifest declares " +
                            std::to_string(dim));
    try {
        return EmbeddingVector(std::move(values));
    } catch (const InvalidArgument& e) {
        throw ProtocolError(e.what());
    }
}

std::string RemoteProvider::generate_text(const TextRequest& request) {
    json payload = {{"system", request.system}, {"prompt", request.prompt}};
    if (request.stage_count) payload["stage_count"] = *request.stage_count;
    return field(call("generate_text", payload), "text", value_t::string).get<std::string>();
}

std::string RemoteProvider::describe_image(const Frame& image, const std::string& question) {
    const json r = call("describe_image", {{"image", protocol::encode_image(image)}, {"question", question}});
    return field(r, "text", value_t::string).get<std::string>();
}

EmbeddingVector RemoteProvider::embed_image(const Frame& image) {
    return vector_result(call("embed_image", {{"image", protocol::encode_image(image)}}));
}

EmbeddingVector RemoteProvider::embed_text(const std::string& text) {
    return vector_result(call("embed_text", {{"text", text}}));
}

double RemoteProvider::perceptual_distance(const Frame& a, const Frame& b) {
    const json r = call("perceptual_distance", {{"a", protocol::encode_image(a)}, {"b", protocol::encode_image(b)}});
    const double d = field(r, "distance", value_t::number_float).get<double>();
    if (!std::isfinite(d) || d < 0) throw ProtocolError("perceptual distance must be finite and nonnegative");
    return d;
}

Frame RemoteProvider::color_sketch(const GrayImage& sketch, const std::string& appearance,
                                   const ColoringConfig& config) {
    const json r = call("color_sketch", {{"sketch", protocol::encode_image(sketch)},
                                         {"appearance", appearance},
                                         {"negative", config.negative_prompt},
                                         {"config", config}});
    return protocol::decode_frame(field(r, "image", value_t::string).get<std::string>());
}

Frame RemoteProvider::derive_keyframe(const Frame& reference, const std::string& conversion,
                                      const DerivativeConfig& config) {
    const json r = call("derive_keyframe",
                        {{"reference", protocol::encode_image(reference)}, {"conversion", conversion}, {"config", config}});
    return protocol::decode_frame(field(r, "image", value_t::string).get<std::string>());
}

std::vector<Frame> RemoteProvider::generate_clip(const Frame& first, const Frame& last,
                                                 const prompts::StructuredDynamicPrompt& dynamic, int frames,
                                                 const VideoConfig& config) {
    const json d = {{"positive", dynamic.positive},
                    {"action", dynamic.action},
                    {"face", dynamic.face},
                    {"body", dynamic.body},
                    {"style", dynamic.style}};
    const json r = call("generate_clip", {{"first", protocol::encode_image(first)},
                                          {"last", protocol::encode_image(last)},
                                          {"dynamic", d},
                                          {"negative", config.negative_prompt},
                                          {"frames", frames},
                                          {"config", config}});
    std::vector<Frame> out;
    std::size_t j = 0;
    for (const auto& f : field(r, "frames", value_t::array)) {
        if (!f.is_string()) throw ProtocolError("clip frames must be base64 strings");
        out.push_back(protocol::decode_frame(f.get<std::string>()).with_index(j++));
    }
    if (static_cast<int>(out.size()) != frames)
        throw ProtocolError("clip has " + std::to_string(out.size()) + " frames, requested " + std::to_string(frames));
    return out;
}

}  // namespace storyboard::backends
