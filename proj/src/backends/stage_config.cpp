#include "storyboard/backends/stage_config.hpp"

#include "storyboard/error.hpp"

namespace storyboard::backends {

using nlohmann::json;

void StageConfig::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw InvalidArgument(std::string("stage config: ") + name + " must be > 0");
    };
    positive(coloring.control_strength, "coloring.control_strength");
    if (coloring.control_strength > 1.0) throw InvalidArgument("stage config: coloring.control_strength must be <= 1");
    if (coloring.control_start < 0.0 || coloring.control_end > 1.0 || coloring.control_start >= coloring.control_end)
        throw InvalidArgument("stage config: coloring control range must satisfy 0 <= start < end <= 1");
    positive(coloring.steps, "coloring.steps");
    positive(coloring.cfg, "coloring.cfg");
    positive(coloring.denoise, "coloring.denoise");
    if (coloring.denoise > 1.0) throw InvalidArgument("stage config: coloring.denoise must be <= 1");
    positive(coloring.guidance, "coloring.guidance");
    positive(coloring.preprocess_resolution, "coloring.preprocess_resolution");

    positive(derivative.steps, "derivative.steps");
    positive(derivative.cfg, "derivative.cfg");
    positive(derivative.guidance, "derivative.guidance");

    positive(video.steps, "video.steps");
    positive(video.cfg, "video.cfg");
    positive(video.fps, "video.fps");
    if (video.high_noise_range[0] < 0 || video.high_noise_range[0] >= video.high_noise_range[1])
        throw InvalidArgument("stage config: video.high_noise_range must be an increasing pair");
    if (video.low_noise_range[0] < 0 || video.low_noise_range[0] >= video.low_noise_range[1])
        throw InvalidArgument("stage config: video.low_noise_range must be an increasing pair");
    if (video.latent_frames < 2) throw InvalidArgument("stage config: video.latent_frames must be >= 2");
    if (video.clip_frames < 0 || video.clip_frames == 1)
        throw InvalidArgument("stage config: video.clip_frames must be 0 (use latent_frames) or >= 2");
    const bool known = (video.resolution == std::array<int, 2>{640, 480}) ||
                       (video.resolution == std::array<int, 2>{640, 640});
    if (!known) throw InvalidArgument("stage config: video.resolution must be 640x480 or 640x640");
}

void to_json(json& j, const ColoringConfig& c) {
    j = json{{"control_strength", c.control_strength},
             {"control_start", c.control_start},
             {"control_end", c.control_end},
             {"steps", c.steps},
             {"cfg", c.cfg},
             {"denoise", c.denoise},
             {"guidance", c.guidance},
             {"preprocess_resolution", c.preprocess_resolution},
             {"sampler", c.sampler},
             {"scheduler", c.scheduler},
             {"negative_prompt", c.negative_prompt}};
}

void from_json(const json& j, ColoringConfig& c) {
    const ColoringConfig d;
    c.control_strength = j.value("control_strength", d.control_strength);
    c.control_start = j.value("control_start", d.control_start);
    c.control_end = j.value("control_end", d.control_end);
    c.steps = j.value("steps", d.steps);
    c.cfg = j.value("cfg", d.cfg);
    c.denoise = j.value("denoise", d.denoise);
    c.guidance = j.value("guidance", d.guidance);
    c.preprocess_resolution = j.value("preprocess_resolution", d.preprocess_resolution);
    c.sampler = j.value("sampler", d.sampler);
    c.scheduler = j.value("scheduler", d.scheduler);
    c.negative_prompt = j.value("negative_prompt", d.negative_prompt);
}

void to_json(json& j, const DerivativeConfig& c) {
    j = json{{"steps", c.steps},
             {"cfg", c.cfg},
             {"guidance", c.guidance},
             {"sampler", c.sampler},
             {"scheduler", c.scheduler}};
}

void from_json(const json& j, DerivativeConfig& c) {
    const DerivativeConfig d;
    c.steps = j.value("steps", d.steps);
    c.cfg = j.value("cfg", d.cfg);
    c.guidance = j.value("guidance", d.guidance);
    c.sampler = j.value("sampler", d.sampler);
    c.scheduler = j.value("scheduler", d.scheduler);
}

void to_json(json& j, const VideoConfig& c) {
    j = json{{"steps", c.steps},
             {"cfg", c.cfg},
             {"high_noise_range", c.high_noise_range},
             {"low_noise_range", c.low_noise_range},
             {"latent_frames", c.latent_frames},
             {"clip_frames", c.clip_frames},
             {"resolution", c.resolution},
             {"fps", c.fps},
             {"sampler", c.sampler},
             {"scheduler", c.scheduler},
             {"negative_prompt", c.negative_prompt}};
}

void from_json(const json& j, VideoConfig& c) {
    const VideoConfig d;
    c.steps = j.value("steps", d.steps);
    c.cfg = j.value("cfg", d.cfg);
    c.high_noise_range = j.value("high_noise_range", d.high_noise_range);
    c.low_noise_range = j.value("low_noise_range", d.low_noise_range);
    c.latent_frames = j.value("latent_frames", d.latent_frames);
    c.clip_frames = j.value("clip_frames", d.clip_frames);
    c.resolution = j.value("resolution", d.resolution);
    c.fps = j.value("fps", d.fps);
    c.sampler = j.value("sampler", d.sampler);
    c.scheduler = j.value("scheduler", d.scheduler);
    c.negative_prompt = j.value("negative_prompt", d.negative_prompt);
}

void to_json(json& j, const StageConfig& c) {
    j = json{{"coloring", c.coloring}, {"derivative", c.derivative}, {"video", c.video}};
}

void from_json(const json& j, StageConfig& c) {
    c = StageConfig{};
    if (j.contains("coloring")) c.coloring = j.at("coloring").get<ColoringConfig>();
    if (j.contains("derivative")) c.derivative = j.at("derivative").get<DerivativeConfig>();
    if (j.contains("video")) c.video = j.at("video").get<VideoConfig>();
}

}  // namespace storyboard::backends
