#include "storyboard/backends/server.hpp"

#include "storyboard/error.hpp"

#include "httplib.h"

#include <istream>
#include <ostream>
#include <thread>

namespace storyboard::backends {

using nlohmann::json;
using protocol::field;
using value_t = json::value_t;

namespace {

std::string text_field(const json& p, const char* key) { return field(p, key, value_t::string).get<std::string>(); }

Frame frame_field(const json& p, const char* key) { return protocol::decode_frame(text_field(p, key)); }

json vector_result(const EmbeddingVector& v) {
    return {{"vector", std::vector<double>(v.values().begin(), v.values().end())}};
}

template <typename Config>
Config config_field(const json& p) {
    Config c;
    if (p.contains("config")) from_json(field(p, "config", value_t::object), c);
    return c;
}

}  // namespace

Dispatcher::Dispatcher(ProviderSet providers, std::size_t embedding_dim, json models)
    : providers_(std::move(providers)) {
    const std::pair<const char*, bool> present[] = {
        {"embed_image", providers_.image_embedder != nullptr},
        {"embed_text", providers_.text_embedder != nullptr},
        {"perceptual_distance", providers_.perceptual != nullptr},
        {"generate_text", providers_.text != nullptr},
        {"describe_image", providers_.describer != nullptr},
        {"color_sketch", providers_.colorizer != nullptr},
        {"derive_keyframe", providers_.deriver != nullptr},
        {"generate_clip", providers_.clips != nullptr},
    };
    for (const auto& [op, ok] : present)
        if (ok) manifest_.capabilities.emplace_back(op);
    manifest_.embedding_dim = embedding_dim;
    manifest_.models = std::move(models);
}

json Dispatcher::dispatch(const std::string& op, const json& p) {
    if (op == "embed_image") return vector_result(providers_.image_embedder->embed_image(frame_field(p, "image")));
    if (op == "embed_text") return vector_result(providers_.text_embedder->embed_text(text_field(p, "text")));
    if (op == "perceptual_distance")
        return {{"distance", providers_.perceptual->perceptual_distance(frame_field(p, "a"), frame_field(p, "b"))}};
    if (op == "generate_text") {
        TextRequest req{text_field(p, "system"), text_field(p, "prompt"), std::nullopt};
        if (p.contains("stage_count")) {
            req.stage_count = field(p, "stage_count", value_t::number_integer).get<int>();
            if (*req.stage_count < 1) throw ProtocolError("stage_count must be >= 1");
        }
        return {{"text", providers_.text->generate_text(req)}};
    }
    if (op == "describe_image")
        return {{"text", providers_.describer->describe_image(frame_field(p, "image"), text_field(p, "question"))}};
    if (op == "color_sketch") {
        auto cfg = config_field<ColoringConfig>(p);
        if (p.contains("negative")) cfg.negative_prompt = text_field(p, "negative");
        const Frame out = providers_.colorizer->color_sketch(protocol::decode_gray(text_field(p, "sketch")),
                                                             text_field(p, "appearance"), cfg);
        return {{"image", protocol::encode_image(out)}};
    }
    if (op == "derive_keyframe") {
        const Frame out = providers_.deriver->derive_keyframe(frame_field(p, "reference"), text_field(p, "conversion"),
                                                              config_field<DerivativeConfig>(p));
        return {{"image", protocol::encode_image(out)}};
    }
    if (op == "generate_clip") {
        auto cfg = config_field<VideoConfig>(p);
        if (p.contains("negative")) cfg.negative_prompt = text_field(p, "negative");
        const json& d = field(p, "dynamic", value_t::object);
        prompts::StructuredDynamicPrompt dynamic{text_field(d, "positive"), text_field(d, "action"),
                                                 text_field(d, "face"), text_field(d, "body"), text_field(d, "style")};
        const int frames = field(p, "frames", value_t::number_integer).get<int>();
        json encoded = json::array();
        for (const Frame& f : providers_.clips->generate_clip(frame_field(p, "first"), frame_field(p, "last"), dynamic,
                                                              frames, cfg))
            encoded.push_back(protocol::encode_image(f));
        return {{"frames", encoded}};
    }
    throw ProtocolError("unsupported op");
}

protocol::Response Dispatcher::handle(const protocol::Request& request) {
    if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
    if (!manifest_.supports(request.op)) return protocol::Response::failure(request.id, "unsupported op");
    try {
        return protocol::Response::success(request.id, dispatch(request.op, request.payload));
    } catch (const ProtocolError& e) {
        return protocol::Response::failure(request.id, std::string("invalid payload: ") + e.what());
    } catch (const json::exception& e) {
        return protocol::Response::failure(request.id, std::string("invalid payload: ") + e.what());
    } catch (const std::exception& e) {
        return protocol::Response::failure(request.id, e.what());
    }
}

std::string Dispatcher::handle_line(const std::string& line) {
    protocol::Request request;
    try {
        request = protocol::decode_request(line);
    } catch (const ProtocolError& e) {
        return protocol::encode(protocol::Response::failure(0, std::string("malformed request: ") + e.what()));
    }
    return protocol::encode(handle(request));
}

void serve_stdio(Dispatcher& dispatcher, std::istream& in, std::ostream& out) {
    out << protocol::encode(dispatcher.manifest()) << '\n' << std::flush;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        out << dispatcher.handle_line(line) << '\n' << std::flush;
    }
}

HttpServer::HttpServer(std::shared_ptr<Dispatcher> dispatcher)
    : dispatcher_(std::move(dispatcher)), server_(std::make_unique<httplib::Server>()) {
    server_->Get("/manifest", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(protocol::encode(dispatcher_->manifest()) + "\n", "application/json");
    });
    server_->Post("/rpc", [this](const httplib::Request& req, httplib::Response& res) {
        std::string line = req.body;
        while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
        res.set_content(dispatcher_->handle_line(line) + "\n", "application/json");
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = server_->bind_to_any_port(host);
        if (bound < 0) throw TransportError("cannot bind " + host);
        return bound;
    }
    if (!server_->bind_to_port(host, port)) throw TransportError("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpServer::run() { server_->listen_after_bind(); }

void HttpServer::stop() {
    if (server_) server_->stop();
}

}  // namespace storyboard::backends
