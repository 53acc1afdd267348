#pragma once

#include "json.hpp"

#include <array>
#include <string>

namespace storyboard::backends {

/// Sketch coloring: structure-conditioned text-to-image.
struct ColoringConfig {
    double control_strength = 0.95;
    double control_start = 0.0;
    double control_end = 1.0;
    int steps = 15;
    double cfg = 7.0;
    double denoise = 0.8;
    double guidance = 3.5;
    int preprocess_resolution = 1024;
    std::string sampler = "dpmpp_2m";
    std::string scheduler = "sgm_uniform";
    std::string negative_prompt =
        "blurry, low quality, distorted face, extra limbs, wrong anatomy, duplicate characters, "
        "text, watermark, background drift, camera motion, flicker";
};

/// Reference-conditioned derivative keyframes. Negative conditioning is zeroed.
struct DerivativeConfig {
    int steps = 20;
    double cfg = 1.0;
    double guidance = 2.5;
    std::string sampler = "euler";
    std::string scheduler = "simple";
};

/// First-last-frame clip synthesis.
struct VideoConfig {
    int steps = 20;
    double cfg = 4.0;
    std::array<int, 2> high_noise_range{0, 10};
    std::array<int, 2> low_noise_range{10, 10000};
    int latent_frames = 81;
    /// Frames emitted per clip; 0 means latent_frames.
    int clip_frames = 0;
    std::array<int, 2> resolution{640, 480};
    double fps = 16.0;
    std::string sampler = "euler";
    std::string scheduler = "simple";
    std::string negative_prompt =
        "background change, camera movement, flicker, unstable outlines, identity drift, face drift, "
        "deformed anatomy, static pose, frozen motion, weak action, "
        "no visible transition between start and end pose";

    int frames_per_clip() const noexcept { return clip_frames > 0 ? clip_frames : latent_frames; }
};

struct StageConfig {
    ColoringConfig coloring;
    DerivativeConfig derivative;
    VideoConfig video;

    /// Throws InvalidArgument when a parameter is out of range.
    void validate() const;
};

void to_json(nlohmann::json& j, const ColoringConfig& c);
void from_json(const nlohmann::json& j, ColoringConfig& c);
void to_json(nlohmann::json& j, const DerivativeConfig& c);
void from_json(const nlohmann::json& j, DerivativeConfig& c);
void to_json(nlohmann::json& j, const VideoConfig& c);
void from_json(const nlohmann::json& j, VideoConfig& c);
void to_json(nlohmann::json& j, const StageConfig& c);
/// Missing keys keep their defaults.
void from_json(const nlohmann::json& j, StageConfig& c);

}  // namespace storyboard::backends
