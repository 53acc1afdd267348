#pragma once

#include "storyboard/backends/capabilities.hpp"
#include "storyboard/embedding.hpp"
#include "storyboard/frames.hpp"
#include "storyboard/sketch.hpp"

#include "json.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace storyboard::metrics {

struct MetricWeights {
    double lambda = 0.4;  // R_s
    double mu = 0.3;      // R_o
    double nu = 0.3;      // R_c
    double alpha = 0.4;   // mean adjacent change
    double beta = 0.3;    // long-range change
    double eta = 0.3;     // coverage
    double gamma = 0.02;  // coverage threshold on adjacent change

    /// Each triple nonnegative and summing to 1 within 1e-9; gamma >= 0.
    void validate() const;
};

/// dot(a,b)/(|a||b|) clamped to [-1,1]. Throws on dimension mismatch or a zero vector.
double cosine_sim(const EmbeddingVector& a, const EmbeddingVector& b);

struct EdgeScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// `sketch_edges` plays E_S, `generated_edges` plays E_I. E_S is dilated by
/// `dilate_radius` before intersecting. Every 0/0 ratio is 0.
EdgeScores edge_f1(const sketch::EdgeMap& sketch_edges, const sketch::EdgeMap& generated_edges,
                   int dilate_radius = 0);

/// round_half_up(k(n-1)/(T-1)) for k = 0..T-1; all of 0..n-1 when n <= T.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count);
std::vector<Frame> sample_frames(const FrameSequence& seq, std::size_t count);

/// Mean cosine similarity of anchor against each sample.
double temporal_clip(const Frame& anchor, std::span<const Frame> samples, backends::ImageEmbedder& embed);
double temporal_clip(const EmbeddingVector& anchor, std::span<const EmbeddingVector> samples);

/// Mean perceptual distance of anchor against each sample.
double temporal_lpips(const Frame& anchor, std::span<const Frame> samples, backends::PerceptualMetric& perceptual);

/// One image gives static alignment, several give their mean (story alignment).
double text_image_align(const std::string& text, std::span<const Frame> images,
                        backends::TextEmbedder& embed_text, backends::ImageEmbedder& embed_image);
double text_image_align(const EmbeddingVector& text, std::span<const EmbeddingVector> images);

struct EventSpec {
    std::vector<std::string> events;
    double match_threshold = 0.3;

    void validate() const;
};

struct EventSegment {
    std::vector<Frame> frames;
    int position = 0;
};

struct EventMatchResult {
    std::vector<double> best_scores;
    std::vector<bool> matched;
    std::vector<int> positions;
};

/// Sim(e_i, segment_j) = max over the segment's frames of text-image cosine.
EventMatchResult match_events(const EventSpec& spec, std::span<const EventSegment> segments,
                              backends::TextEmbedder& embed_text, backends::ImageEmbedder& embed_image);

/// table[i][j] = Sim(e_i, segment_j); positions[j] labels segment j.
/// Ties resolve to the earliest segment.
EventMatchResult match_events(const std::vector<std::vector<double>>& table,
                              std::span<const int> positions, double threshold);

struct EventScores {
    double completion = 0.0;
    int order = 1;
    double controllability = 0.0;
    double r_s = 0.0;
    double r_o = 1.0;
    double r_c = 0.0;
};

/// R_s = completion, R_o = ordered fraction of adjacent pairs among matched
/// events (1 when there is no pair), R_c = mean best score over all events.
EventScores event_scores(const EventMatchResult& match, const MetricWeights& w = {});

/// alpha * mean(1 - adjacent sim) + beta * (1 - first/last sim) + eta * coverage(1 - adjacent sim >= gamma).
double dynamic_progression(std::span<const double> adjacent_sims, double first_last_sim,
                           const MetricWeights& w = {});
double dynamic_progression(std::span<const EmbeddingVector> samples, const MetricWeights& w = {});
double dynamic_progression(std::span<const Frame> samples, backends::ImageEmbedder& embed,
                           const MetricWeights& w = {});

struct MetricSlot {
    std::optional<double> value;
    std::string error;

    bool ok() const noexcept { return value.has_value(); }
};

struct MetricReport {
    MetricSlot lpips_shot;
    MetricSlot clip_image_sim;
    MetricSlot edge_f1;
    MetricSlot temp_clip;
    MetricSlot temp_lpips;
    MetricSlot static_align;
    MetricSlot story_align;
    MetricSlot event_completion;
    MetricSlot dynamic_controllability;
    MetricSlot event_order;
    MetricSlot dynamic_progression;

    /// (name, slot) in reporting order.
    std::vector<std::pair<std::string, const MetricSlot*>> slots() const;
};

struct EvaluateOptions {
    std::size_t sample_count = 16;
    int dilate_radius = 0;
    sketch::CannyParams canny;
    /// First video frame index of each event segment. Empty splits the sampled
    /// frames into one equal chunk per event.
    std::vector<std::size_t> segment_starts;

    void validate() const;
};

/// Sketch-vs-frame-0 control metrics, frame-0-anchored consistency metrics,
/// text alignment and event dynamics. A failing provider leaves an error in
/// the affected slots only. Throws InvalidArgument for an empty video.
MetricReport evaluate_shot(const GrayImage& sketch, const FrameSequence& video,
                           const std::string& appearance_text, const std::string& motion_text,
                           const std::optional<EventSpec>& events, const backends::ProviderSet& providers,
                           const MetricWeights& w = {}, const EvaluateOptions& options = {});

/// Reads `<dir>/frame_%06d.json` (keyed by Frame::index) and `<dir>/sketch.json`,
/// each a JSON array of numbers, instead of running an image model.
class PrecomputedImageEmbedder final : public backends::ImageEmbedder {
public:
    explicit PrecomputedImageEmbedder(std::filesystem::path dir);
    EmbeddingVector embed_image(const Frame& image) override;
    EmbeddingVector embed_sketch(const GrayImage& sketch) override;

private:
    EmbeddingVector load(const std::filesystem::path& file) const;
    std::filesystem::path dir_;
};

nlohmann::json to_json(const MetricReport& r);
EventSpec event_spec_from_json(const nlohmann::json& j);

}  // namespace storyboard::metrics
