#include "storyboard/shotdetect.hpp"

#include "storyboard/error.hpp"
#include "storyboard/kernels.hpp"

#include <algorithm>

namespace storyboard::shotdetect {

void ShotDetectConfig::validate() const {
    if (!(threshold > 0.0)) throw InvalidArgument("shot threshold must be > 0");
    if (min_shot_len < 1) throw InvalidArgument("min_shot_len must be >= 1");
}

namespace {

std::vector<std::uint8_t> hsv_of(const Frame& f) {
    std::vector<std::uint8_t> hsv(f.pixels().size());
    kernels::parallel::rgb_to_hsv(f.pixels(), hsv);
    return hsv;
}

double score_from_sums(const std::array<std::uint64_t, 3>& sums, std::size_t pixels) {
    const double total = static_cast<double>(sums[0] + sums[1] + sums[2]);
    return total / (3.0 * static_cast<double>(pixels));
}

}  // namespace

double content_difference(const Frame& a, const Frame& b) {
    if (a.width() != b.width() || a.height() != b.height())
        throw InvalidArgument("content_difference: dimension mismatch");
    const auto ha = hsv_of(a);
    const auto hb = hsv_of(b);
    return score_from_sums(kernels::parallel::hsv_abs_diff_sums(ha, hb),
                           static_cast<std::size_t>(a.width()) * a.height());
}

Segmentation segment_scores(std::span<const double> scores, const ShotDetectConfig& cfg) {
    cfg.validate();
    Segmentation out;
    out.trace.scores.assign(scores.begin(), scores.end());
    out.trace.flags.resize(scores.size());
    const auto n = static_cast<std::int64_t>(scores.size()) + 1;

    std::vector<Shot> raw;
    std::int64_t start = 0;
    for (std::int64_t t = 1; t < n; ++t) {
        const bool boundary = scores[t - 1] > cfg.threshold;
        out.trace.flags[t - 1] = boundary ? 1 : 0;
        if (boundary) {
            raw.push_back({start, t - 1});
            start = t;
        }
    }
    raw.push_back({start, n - 1});

    for (const Shot& s : raw) {
        if (!out.shots.empty() && s.length() < cfg.min_shot_len)
            out.shots.back().end = s.end;
        else
            out.shots.push_back(s);
    }
    return out;
}

Segmentation detect_shots(const FrameSequence& seq, const ShotDetectConfig& cfg) {
    cfg.validate();
    if (seq.empty()) throw InvalidArgument("detect_shots: empty sequence");
    const auto& frames = seq.frames();
    const auto n = static_cast<std::ptrdiff_t>(frames.size());

    std::vector<std::vector<std::uint8_t>> hsv(frames.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) hsv[i] = hsv_of(frames[i]);

    const std::size_t pixels = static_cast<std::size_t>(frames[0].width()) * frames[0].height();
    std::vector<double> scores(frames.size() - 1);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t t = 1; t < n; ++t)
        scores[t - 1] = score_from_sums(kernels::serial::hsv_abs_diff_sums(hsv[t - 1], hsv[t]), pixels);

    return segment_scores(scores, cfg);
}

std::vector<std::int64_t> select_keyframes(const Shot& shot, KeyframePolicy policy) {
    if (shot.start > shot.end) throw InvalidArgument("shot start after end");
    // floor of the midpoint without overflow, valid for negative sums too
    const std::int64_t center = shot.start + (shot.end - shot.start) / 2;
    if (policy == KeyframePolicy::center) return {center};
    std::vector<std::int64_t> out{shot.start, center, shot.end};
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

KeyframePolicy parse_keyframe_policy(const std::string& name) {
    if (name == "center") return KeyframePolicy::center;
    if (name == "center+endpoints") return KeyframePolicy::center_and_endpoints;
    throw InvalidArgument("unknown keyframe policy: " + name);
}

}  // namespace storyboard::shotdetect
