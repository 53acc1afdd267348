#include "storyboard/backends/protocol.hpp"

#include "storyboard/error.hpp"
#include "storyboard/hash.hpp"
#include "storyboard/image_io.hpp"

#include <algorithm>

namespace storyboard::backends::protocol {

using nlohmann::json;

namespace {

json parse_line(const std::string& line) {
    if (line.find('\n') != std::string::npos) throw ProtocolError("message spans several lines");
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ProtocolError("message is not valid JSON");
    if (!j.is_object()) throw ProtocolError("message is not a JSON object");
    return j;
}

void only_keys(const json& j, std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            throw ProtocolError("unexpected field '" + key + "'");
    }
}

std::uint64_t read_id(const json& j) {
    const json& id = field(j, "id", json::value_t::number_unsigned);
    return id.get<std::uint64_t>();
}

std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

}  // namespace

bool is_known_op(const std::string& op) {
    return std::any_of(kOps.begin(), kOps.end(), [&](const char* o) { return op == o; });
}

const json& field(const json& object, const char* key, json::value_t type) {
    auto it = object.find(key);
    if (it == object.end()) throw ProtocolError(std::string("missing field '") + key + "'");
    const bool matches = it->type() == type ||
                         (type == json::value_t::number_float && it->is_number()) ||
                         (type == json::value_t::number_integer && it->is_number_integer());
    if (!matches) throw ProtocolError(std::string("field '") + key + "' has the wrong type");
    return *it;
}

Response Response::success(std::uint64_t id, json result) {
    return {id, true, std::move(result), {}};
}

Response Response::failure(std::uint64_t id, std::string error) {
    return {id, false, nullptr, std::move(error)};
}

bool Manifest::supports(const std::string& op) const {
    return std::find(capabilities.begin(), capabilities.end(), op) != capabilities.end();
}

std::string encode(const Request& r) {
    if (r.id == 0) throw InvalidArgument("request ids start at 1");
    if (!r.payload.is_object()) throw InvalidArgument("request payload must be an object");
    return dump({{"id", r.id}, {"op", r.op}, {"payload", r.payload}});
}

std::string encode(const Response& r) {
    if (r.ok) {
        if (!r.result.is_object()) throw InvalidArgument("response result must be an object");
        return dump({{"id", r.id}, {"ok", true}, {"result", r.result}});
    }
    if (r.error.empty()) throw InvalidArgument("failed response needs an error message");
    return dump({{"id", r.id}, {"ok", false}, {"error", r.error}});
}

std::string encode(const Manifest& m) {
    return dump({{"manifest",
                  {{"capabilities", m.capabilities}, {"embedding_dim", m.embedding_dim}, {"models", m.models}}}});
}

Request decode_request(const std::string& line) {
    json j = parse_line(line);
    only_keys(j, {"id", "op", "payload"});
    Request r;
    r.id = read_id(j);
    if (r.id == 0) throw ProtocolError("request ids start at 1");
    r.op = field(j, "op", json::value_t::string).get<std::string>();
    r.payload = field(j, "payload", json::value_t::object);
    return r;
}

Response decode_response(const std::string& line) {
    json j = parse_line(line);
    Response r;
    r.id = read_id(j);
    r.ok = field(j, "ok", json::value_t::boolean).get<bool>();
    if (r.ok) {
        only_keys(j, {"id", "ok", "result"});
        r.result = field(j, "result", json::value_t::object);
    } else {
        only_keys(j, {"id", "ok", "error"});
        r.result = nullptr;
        r.error = field(j, "error", json::value_t::string).get<std::string>();
        if (r.error.empty()) throw ProtocolError("failed response carries an empty error");
    }
    return r;
}

Manifest decode_manifest(const std::string& line) {
    json j = parse_line(line);
    only_keys(j, {"manifest"});
    const json& m = field(j, "manifest", json::value_t::object);
    Manifest out;
    for (const auto& c : field(m, "capabilities", json::value_t::array)) {
        if (!c.is_string()) throw ProtocolError("capability names must be strings");
        out.capabilities.push_back(c.get<std::string>());
    }
    out.embedding_dim = field(m, "embedding_dim", json::value_t::number_unsigned).get<std::size_t>();
    if (m.contains("models")) out.models = m["models"];
    return out;
}

std::string encode_image(const Frame& frame) { return base64_encode(image_io::encode_png(frame)); }

std::string encode_image(const GrayImage& image) { return base64_encode(image_io::encode_png(image)); }

Frame decode_frame(const std::string& b64) {
    try {
        return image_io::decode_png_rgb(base64_decode(b64));
    } catch (const Error& e) {
        throw ProtocolError(std::string("bad image payload: ") + e.what());
    }
}

GrayImage decode_gray(const std::string& b64) {
    try {
        return image_io::decode_png_gray(base64_decode(b64));
    } catch (const Error& e) {
        throw ProtocolError(std::string("bad image payload: ") + e.what());
    }
}

}  // namespace storyboard::backends::protocol
