#include "storyboard/backends/registry.hpp"

#include "storyboard/backends/mocks.hpp"
#include "storyboard/backends/protocol.hpp"
#include "storyboard/backends/remote.hpp"
#include "storyboard/backends/transport.hpp"
#include "storyboard/error.hpp"
#include "storyboard/image_io.hpp"

#include <sstream>

namespace storyboard::backends {

using nlohmann::json;

void ProviderEntry::validate() const {
    if (transport == "stdio") {
        if (command.empty()) throw InvalidArgument("stdio provider needs a command");
    } else if (transport == "http") {
        if (url.empty()) throw InvalidArgument("http provider needs a url");
    } else if (transport != "mock") {
        throw InvalidArgument("unknown provider transport '" + transport + "'");
    }
    if (!(timeout > 0)) throw InvalidArgument("provider timeout must be positive");
    if (dim && *dim == 0) throw InvalidArgument("provider dim must be positive");
}

ProviderRegistry::ProviderRegistry(std::map<std::string, ProviderEntry> entries) : entries_(std::move(entries)) {
    for (const auto& [op, e] : entries_) {
        if (op != "default" && !protocol::is_known_op(op)) throw InvalidArgument("unknown capability '" + op + "'");
        e.validate();
    }
}

ProviderRegistry ProviderRegistry::from_json(const json& j) {
    if (!j.is_object()) throw InvalidArgument("providers file must hold a JSON object");
    std::map<std::string, ProviderEntry> entries;
    try {
        for (const auto& [op, ej] : j.items()) {
            ProviderEntry e;
            e.transport = ej.value("transport", e.transport);
            if (ej.contains("command")) {
                if (ej["command"].is_string()) {
                    std::istringstream words(ej["command"].get<std::string>());
                    for (std::string w; words >> w;) e.command.push_back(w);
                } else {
                    e.command = ej["command"].get<std::vector<std::string>>();
                }
            }
            e.url = ej.value("url", "");
            if (ej.contains("dim")) e.dim = ej["dim"].get<std::size_t>();
            e.timeout = ej.value("timeout", e.timeout);
            entries.emplace(op, std::move(e));
        }
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("malformed providers file: ") + e.what());
    }
    return ProviderRegistry(std::move(entries));
}

ProviderRegistry ProviderRegistry::load(const std::filesystem::path& file) {
    json j = json::parse(image_io::read_text(file), nullptr, false);
    if (j.is_discarded()) throw InvalidArgument("providers file is not valid JSON: " + file.string());
    return from_json(j);
}

ProviderRegistry ProviderRegistry::all_mock() { return ProviderRegistry({{"default", ProviderEntry{}}}); }

std::optional<ProviderEntry> ProviderRegistry::entry_for(const std::string& op) const {
    if (auto it = entries_.find(op); it != entries_.end()) return it->second;
    if (auto it = entries_.find("default"); it != entries_.end()) return it->second;
    return std::nullopt;
}

ProviderSet ProviderRegistry::connect() const {
    ProviderSet set;
    std::shared_ptr<MockProviders> mocks;
    std::map<std::string, std::shared_ptr<Connection>> connections;

    for (const char* op_name : protocol::kOps) {
        const std::string op = op_name;
        auto entry = entry_for(op);
        if (!entry) continue;

        std::shared_ptr<void> provider;
        TextGenerator* text = nullptr;
        ImageDescriber* describer = nullptr;
        ImageEmbedder* image_embedder = nullptr;
        TextEmbedder* text_embedder = nullptr;
        PerceptualMetric* perceptual = nullptr;
        SketchColorizer* colorizer = nullptr;
        KeyframeDeriver* deriver = nullptr;
        ClipGenerator* clips = nullptr;
        auto bind_all = [&](auto* p) {
            text = p;
            describer = p;
            image_embedder = p;
            text_embedder = p;
            perceptual = p;
            colorizer = p;
            deriver = p;
            clips = p;
        };

        if (entry->transport == "mock") {
            if (!mocks) mocks = std::make_shared<MockProviders>();
            if (entry->dim && (op == "embed_image" || op == "embed_text") && *entry->dim != kMockEmbeddingDim)
                throw ProtocolError("mock embeddings have dim " + std::to_string(kMockEmbeddingDim));
            provider = mocks;
            bind_all(mocks.get());
        } else {
            std::string key = entry->transport + "\n" + entry->url;
            for (const auto& w : entry->command) key += "\n" + w;
            auto& conn = connections[key];
            if (!conn) {
                if (entry->transport == "stdio")
                    conn = std::make_shared<StdioConnection>(entry->command, Seconds(entry->timeout));
                else
                    conn = std::make_shared<HttpConnection>(entry->url, Seconds(entry->timeout));
            }
            if (!conn->manifest().supports(op))
                throw ProviderError("provider for " + op + " does not advertise it");
            if (entry->dim && (op == "embed_image" || op == "embed_text") && conn->manifest().embedding_dim != *entry->dim)
                throw ProtocolError("provider for " + op + " declares dim " +
                                    std::to_string(conn->manifest().embedding_dim) + ", expected " +
                                    std::to_string(*entry->dim));
            auto remote = std::make_shared<RemoteProvider>(conn, Seconds(entry->timeout));
            provider = remote;
            bind_all(remote.get());
        }

        // aliasing constructors keep the concrete provider alive through the interface pointer
        if (op == "generate_text") set.text = std::shared_ptr<TextGenerator>(provider, text);
        else if (op == "describe_image") set.describer = std::shared_ptr<ImageDescriber>(provider, describer);
        else if (op == "embed_image") set.image_embedder = std::shared_ptr<ImageEmbedder>(provider, image_embedder);
        else if (op == "embed_text") set.text_embedder = std::shared_ptr<TextEmbedder>(provider, text_embedder);
        else if (op == "perceptual_distance") set.perceptual = std::shared_ptr<PerceptualMetric>(provider, perceptual);
        else if (op == "color_sketch") set.colorizer = std::shared_ptr<SketchColorizer>(provider, colorizer);
        else if (op == "derive_keyframe") set.deriver = std::shared_ptr<KeyframeDeriver>(provider, deriver);
        else if (op == "generate_clip") set.clips = std::shared_ptr<ClipGenerator>(provider, clips);
    }
    return set;
}

}  // namespace storyboard::backends
