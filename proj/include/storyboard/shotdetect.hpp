#pragma once

#include "storyboard/frames.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace storyboard::shotdetect {

struct ShotDetectConfig {
    double threshold = 25.0;   // boundary when the score strictly exceeds this
    int min_shot_len = 2;      // shorter shots fold into their predecessor

    void validate() const;
};

/// Inclusive frame interval.
struct Shot {
    std::int64_t start = 0;
    std::int64_t end = 0;

    std::int64_t length() const noexcept { return end - start + 1; }
    friend bool operator==(const Shot&, const Shot&) = default;
};

/// scores[t-1] and flags[t-1] describe the transition into frame t.
struct BoundaryTrace {
    std::vector<double> scores;
    std::vector<std::uint8_t> flags;
};

struct Segmentation {
    std::vector<Shot> shots;
    BoundaryTrace trace;
};

enum class KeyframePolicy { center, center_and_endpoints };

/// Mean absolute HSV channel difference in [0, 255], circular on hue.
double content_difference(const Frame& a, const Frame& b);

/// Thresholds a precomputed score list (one per frame after the first).
Segmentation segment_scores(std::span<const double> scores, const ShotDetectConfig& cfg);

Segmentation detect_shots(const FrameSequence& seq, const ShotDetectConfig& cfg = {});

std::vector<std::int64_t> select_keyframes(const Shot& shot,
                                           KeyframePolicy policy = KeyframePolicy::center);

KeyframePolicy parse_keyframe_policy(const std::string& name);

}  // namespace storyboard::shotdetect
