#pragma once

#include "storyboard/backends/capabilities.hpp"
#include "storyboard/backends/transport.hpp"

#include <memory>

namespace storyboard::backends {

/// Every capability forwarded over one Connection.
class RemoteProvider final : public TextGenerator,
                             public ImageDescriber,
                             public ImageEmbedder,
                             public TextEmbedder,
                             public PerceptualMetric,
                             public SketchColorizer,
                             public KeyframeDeriver,
                             public ClipGenerator {
public:
    RemoteProvider(std::shared_ptr<Connection> connection, Seconds timeout);

    const protocol::Manifest& manifest() const { return connection_->manifest(); }

    std::string generate_text(const TextRequest& request) override;
    std::string describe_image(const Frame& image, const std::string& question) override;
    EmbeddingVector embed_image(const Frame& image) override;
    EmbeddingVector embed_text(const std::string& text) override;
    double perceptual_distance(const Frame& a, const Frame& b) override;
    Frame color_sketch(const GrayImage& sketch, const std::string& appearance, const ColoringConfig& config) override;
    Frame derive_keyframe(const Frame& reference, const std::string& conversion,
                          const DerivativeConfig& config) override;
    std::vector<Frame> generate_clip(const Frame& first, const Frame& last,
                                     const prompts::StructuredDynamicPrompt& dynamic, int frames,
                                     const VideoConfig& config) override;

private:
    nlohmann::json call(const char* op, nlohmann::json payload);
    EmbeddingVector vector_result(const nlohmann::json& result);

    std::shared_ptr<Connection> connection_;
    Seconds timeout_;
};

}  // namespace storyboard::backends
