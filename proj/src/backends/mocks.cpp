#include "storyboard/backends/mocks.hpp"

#include "storyboard/error.hpp"
#include "storyboard/hash.hpp"
#include "storyboard/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace storyboard::backends {

using nlohmann::json;

namespace {

EmbeddingVector normalize_or_basis(std::vector<double> v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm < 1e-9) return EmbeddingVector::basis(v.size(), 0);
    for (double& x : v) x /= norm;
    return EmbeddingVector(std::move(v));
}

void require_same_size(const Frame& a, const Frame& b) {
    if (a.width() != b.width() || a.height() != b.height())
        throw InvalidArgument("frame sizes differ: " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                              " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
}

}  // namespace

EmbeddingVector mock_embed_image(const Frame& f) {
    const GrayImage g = to_grayscale(f);
    const int w = g.width();
    const int h = g.height();
    auto cell = [](int c, int extent) {
        const int begin = std::min(c * extent / 8, extent - 1);
        const int end = std::min(std::max((c + 1) * extent / 8, begin + 1), extent);
        return std::pair{begin, end};
    };
    std::vector<double> v(kMockEmbeddingDim);
    for (int cy = 0; cy < 8; ++cy) {
        const auto [y0, y1] = cell(cy, h);
        for (int cx = 0; cx < 8; ++cx) {
            const auto [x0, x1] = cell(cx, w);
            std::uint64_t sum = 0;
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x) sum += g.at(x, y);
            v[cy * 8 + cx] = static_cast<double>(sum) / static_cast<double>((y1 - y0) * (x1 - x0));
        }
    }
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    for (double& x : v) x -= mean;
    return normalize_or_basis(std::move(v));
}

EmbeddingVector mock_embed_text(const std::string& text) {
    std::vector<double> bins(kMockEmbeddingDim, 0.0);
    for (std::size_t i = 0; i + 3 <= text.size(); ++i)
        bins[fnv1a32(std::string_view(text).substr(i, 3)) % kMockEmbeddingDim] += 1.0;
    return normalize_or_basis(std::move(bins));
}

double mock_perceptual(const Frame& a, const Frame& b) {
    require_same_size(a, b);
    const auto sum = kernels::parallel::abs_diff_sum(a.pixels(), b.pixels());
    return static_cast<double>(sum) / (255.0 * static_cast<double>(a.pixels().size()));
}

Frame mock_color_sketch(const GrayImage& sketch, const std::string& appearance) {
    const std::uint32_t h = fnv1a32(appearance);
    const auto green = static_cast<std::uint8_t>(h & 0xffu);
    const auto blue = static_cast<std::uint8_t>((h >> 8) & 0xffu);
    std::vector<std::uint8_t> rgb(sketch.size() * 3);
    const auto values = sketch.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
        rgb[3 * i] = values[i];
        rgb[3 * i + 1] = green;
        rgb[3 * i + 2] = blue;
    }
    return Frame(sketch.width(), sketch.height(), std::move(rgb));
}

Frame mock_derive_keyframe(const Frame& reference, const std::string& conversion) {
    const int offset = static_cast<int>(fnv1a32(conversion) % 33u) - 16;
    Frame out = reference.with_index(0);
    for (auto& p : out.mutable_pixels()) p = static_cast<std::uint8_t>(std::clamp(p + offset, 0, 255));
    return out;
}

std::vector<Frame> mock_generate_clip(const Frame& first, const Frame& last, int frames) {
    require_same_size(first, last);
    if (frames < 2) throw InvalidArgument("a clip needs at least 2 frames");
    const auto a = first.pixels();
    const auto b = last.pixels();
    const std::uint64_t span = static_cast<std::uint64_t>(frames) - 1;
    std::vector<Frame> out;
    out.reserve(static_cast<std::size_t>(frames));
    for (int j = 0; j < frames; ++j) {
        const std::uint64_t wb = static_cast<std::uint64_t>(j);
        const std::uint64_t wa = span - wb;
        std::vector<std::uint8_t> px(a.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            px[i] = static_cast<std::uint8_t>(((wa * a[i] + wb * b[i]) * 2 + span) / (2 * span));
        out.emplace_back(first.width(), first.height(), std::move(px), static_cast<std::size_t>(j));
    }
    return out;
}

std::string mock_generate_text(const TextRequest& request) {
    if (!request.stage_count) return request.prompt + " The motion unfolds smoothly and continuously within the same shot.";
    const int n = *request.stage_count;
    json stages = json::array();
    for (int i = 1; i <= n; ++i) {
        const std::string tag = "state " + std::to_string(i) + " of " + std::to_string(n);
        stages.push_back({{"stage", i},
                          {"conversion", tag + ": " + request.prompt},
                          {"positive", "same character, same scene, consistent framing"},
                          {"action", "move continuously into " + tag + ": " + request.prompt},
                          {"face", "steady expression"},
                          {"body", "stable proportions, smooth limb motion"},
                          {"style", "clean outlines, stable colors"}});
    }
    return stages.dump();
}

std::string mock_describe_image(const Frame& image, const std::string& question) {
    std::array<std::uint64_t, 3> sums{};
    const auto px = image.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) sums[i % 3] += px[i];
    const std::uint64_t n = px.size() / 3;
    const std::string color = "(" + std::to_string(sums[0] / n) + ", " + std::to_string(sums[1] / n) + ", " +
                              std::to_string(sums[2] / n) + ")";
    if (question.find("subject") != std::string::npos) return "a cartoon character in mean color " + color;
    if (question.find("style") != std::string::npos) return "flat 2D animation style";
    if (question.find("scene") != std::string::npos) return "a plain backdrop in mean color " + color;
    if (question.find("action") != std::string::npos) return "the character shifts its weight";
    return "an image in mean color " + color;
}

ProviderSet mock_provider_set() {
    auto m = std::make_shared<MockProviders>();
    return {m, m, m, m, m, m, m, m};
}

protocol::Manifest mock_manifest() {
    protocol::Manifest m;
    m.capabilities.assign(protocol::kOps.begin(), protocol::kOps.end());
    m.embedding_dim = kMockEmbeddingDim;
    m.models = {{"image", "mock-pool8x8"}, {"text", "mock-trigram64"}, {"perceptual", "mock-mad"},
                {"generation", "mock-crossfade"}};
    return m;
}

}  // namespace storyboard::backends
