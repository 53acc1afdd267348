#pragma once

// Abstract neural capabilities. Every one of them is served either by the
// in-process mocks or by an external provider speaking the wire protocol.

#include "storyboard/backends/stage_config.hpp"
#include "storyboard/embedding.hpp"
#include "storyboard/error.hpp"
#include "storyboard/frames.hpp"
#include "storyboard/prompt_types.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace storyboard::backends {

struct TextRequest {
    std::string system;
    std::string prompt;
    /// When set, the provider must answer with a JSON stage list of this length.
    std::optional<int> stage_count;
};

class TextGenerator {
public:
    virtual ~TextGenerator() = default;
    virtual std::string generate_text(const TextRequest& request) = 0;
};

class ImageDescriber {
public:
    virtual ~ImageDescriber() = default;
    virtual std::string describe_image(const Frame& image, const std::string& question) = 0;
};

class ImageEmbedder {
public:
    virtual ~ImageEmbedder() = default;
    virtual EmbeddingVector embed_image(const Frame& image) = 0;
    virtual EmbeddingVector embed_sketch(const GrayImage& sketch) { return embed_image(to_rgb(sketch)); }
};

class TextEmbedder {
public:
    virtual ~TextEmbedder() = default;
    virtual EmbeddingVector embed_text(const std::string& text) = 0;
};

/// Frame pair to nonnegative distance (LPIPS in production).
class PerceptualMetric {
public:
    virtual ~PerceptualMetric() = default;
    virtual double perceptual_distance(const Frame& a, const Frame& b) = 0;
};

class SketchColorizer {
public:
    virtual ~SketchColorizer() = default;
    virtual Frame color_sketch(const GrayImage& sketch, const std::string& appearance,
                               const ColoringConfig& config) = 0;
};

class KeyframeDeriver {
public:
    virtual ~KeyframeDeriver() = default;
    virtual Frame derive_keyframe(const Frame& reference, const std::string& conversion,
                                  const DerivativeConfig& config) = 0;
};

class ClipGenerator {
public:
    virtual ~ClipGenerator() = default;
    virtual std::vector<Frame> generate_clip(const Frame& first, const Frame& last,
                                             const prompts::StructuredDynamicPrompt& dynamic,
                                             int frames, const VideoConfig& config) = 0;
};

struct ProviderSet {
    std::shared_ptr<TextGenerator> text;
    std::shared_ptr<ImageDescriber> describer;
    std::shared_ptr<ImageEmbedder> image_embedder;
    std::shared_ptr<TextEmbedder> text_embedder;
    std::shared_ptr<PerceptualMetric> perceptual;
    std::shared_ptr<SketchColorizer> colorizer;
    std::shared_ptr<KeyframeDeriver> deriver;
    std::shared_ptr<ClipGenerator> clips;
};

/// Dereferences a capability or throws ProviderError naming it.
template <typename T>
T& require(const std::shared_ptr<T>& p, const char* capability) {
    if (!p) throw ProviderError(std::string("no provider configured for ") + capability);
    return *p;
}

}  // namespace storyboard::backends
