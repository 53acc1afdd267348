#pragma once

// Deterministic stand-ins for every capability. Pure functions of their
// inputs, so a pipeline run on mocks is reproducible byte for byte.

#include "storyboard/backends/capabilities.hpp"
#include "storyboard/backends/protocol.hpp"

namespace storyboard::backends {

inline constexpr std::size_t kMockEmbeddingDim = 64;

/// Luma, 8x8 area average (cell c spans [c*w/8, max((c+1)*w/8, c*w/8+1)) per axis,
/// clamped to the image), mean removed, L2-normalized; e_0 when the norm is below 1e-9.
EmbeddingVector mock_embed_image(const Frame& f);
/// Byte trigrams hashed into 64 bins by fnv1a32 % 64, L2-normalized; e_0 without trigrams.
EmbeddingVector mock_embed_text(const std::string& text);
/// Mean |a - b| / 255 over all channels. Throws InvalidArgument on a size mismatch.
double mock_perceptual(const Frame& a, const Frame& b);
/// R = sketch, G and B = the two low bytes of fnv1a32(appearance).
Frame mock_color_sketch(const GrayImage& sketch, const std::string& appearance);
/// Every channel shifted by (fnv1a32(conversion) % 33) - 16, clamped to 0..255.
Frame mock_derive_keyframe(const Frame& reference, const std::string& conversion);
/// f_j = round_half_up(((J-1-j) first + j last) / (J-1)); J >= 2.
std::vector<Frame> mock_generate_clip(const Frame& first, const Frame& last, int frames);
/// With stage_count: a JSON stage list built from the prompt. Otherwise the
/// prompt followed by a fixed continuation sentence.
std::string mock_generate_text(const TextRequest& request);
/// Canned answer selected by the question topic, with the image's mean color.
std::string mock_describe_image(const Frame& image, const std::string& question);

class MockProviders final : public TextGenerator,
                            public ImageDescriber,
                            public ImageEmbedder,
                            public TextEmbedder,
                            public PerceptualMetric,
                            public SketchColorizer,
                            public KeyframeDeriver,
                            public ClipGenerator {
public:
    std::string generate_text(const TextRequest& request) override { return mock_generate_text(request); }
    std::string describe_image(const Frame& image, const std::string& question) override {
        return mock_describe_image(image, question);
    }
    EmbeddingVector embed_image(const Frame& image) override { return mock_embed_image(image); }
    EmbeddingVector embed_text(const std::string& text) override { return mock_embed_text(text); }
    double perceptual_distance(const Frame& a, const Frame& b) override { return mock_perceptual(a, b); }
    Frame color_sketch(const GrayImage& sketch, const std::string& appearance, const ColoringConfig&) override {
        return mock_color_sketch(sketch, appearance);
    }
    Frame derive_keyframe(const Frame& reference, const std::string& conversion, const DerivativeConfig&) override {
        return mock_derive_keyframe(reference, conversion);
    }
    std::vector<Frame> generate_clip(const Frame& first, const Frame& last, const prompts::StructuredDynamicPrompt&,
                                     int frames, const VideoConfig&) override {
        return mock_generate_clip(first, last, frames);
    }
};

/// All eight capabilities backed by one MockProviders instance.
ProviderSet mock_provider_set();
protocol::Manifest mock_manifest();

}  // namespace storyboard::backends
