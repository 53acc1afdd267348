#include "storyboard/sketch.hpp"

#include "storyboard/error.hpp"
#include "storyboard/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace storyboard::sketch {

namespace k = kernels::parallel;

void SketchConfig::validate() const {
    if (!(epsilon > 0.0)) throw InvalidArgument("sketch epsilon must be > 0");
    if (erosion_passes < 1) throw InvalidArgument("erosion_passes must be >= 1");
}

EdgeMap::EdgeMap(int width, int height)
    : EdgeMap(width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                                       static_cast<std::size_t>(std::max(height, 0)))) {}

EdgeMap::EdgeMap(int width, int height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
    if (width <= 0 || height <= 0) throw InvalidArgument("edge map dimensions must be positive");
    if (bits_.size() != static_cast<std::size_t>(width) * height)
        throw InvalidArgument("edge map buffer does not match width*height");
    for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t EdgeMap::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

GrayImage invert(const GrayImage& g) {
    GrayImage out(g.width(), g.height(), std::uint8_t{0});
    k::invert(g.values(), out.mutable_values());
    return out;
}

GrayImage erode3x3(const GrayImage& g, int passes) {
    if (passes < 1) throw InvalidArgument("erosion passes must be >= 1");
    GrayImage src = g;
    GrayImage dst(g.width(), g.height(), std::uint8_t{0});
    for (int p = 0; p < passes; ++p) {
        k::erode3x3(src.values(), dst.mutable_values(), g.width(), g.height());
        std::swap(src, dst);
    }
    return src;
}

GrayImage color_dodge(const GrayImage& g, const GrayImage& e, const SketchConfig& cfg) {
    cfg.validate();
    if (g.width() != e.width() || g.height() != e.height())
        throw InvalidArgument("color_dodge: dimension mismatch");
    GrayImage out(g.width(), g.height(), std::uint8_t{0});
    k::color_dodge(g.values(), e.values(), out.mutable_values(), cfg.epsilon);
    return out;
}

SketchStages sketchify_stages(const Frame& f, const SketchConfig& cfg) {
    cfg.validate();
    GrayImage gray = to_grayscale(f);
    GrayImage inverted = invert(gray);
    GrayImage eroded = erode3x3(inverted, cfg.erosion_passes);
    GrayImage result = color_dodge(gray, eroded, cfg);
    return {std::move(gray), std::move(inverted), std::move(eroded), std::move(result)};
}

GrayImage sketchify(const Frame& f, const SketchConfig& cfg) { return sketchify_stages(f, cfg).sketch; }

std::vector<double> gaussian_taps(double sigma) {
    if (!(sigma > 0.0)) return {1.0};
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        taps[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += taps[i + radius];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

GrayImage gaussian_blur(const GrayImage& g, double sigma) {
    if (!(sigma > 0.0)) return g;
    const auto taps = gaussian_taps(sigma);
    GrayImage out(g.width(), g.height(), std::uint8_t{0});
    k::convolve_separable(g.values(), out.mutable_values(), g.width(), g.height(), taps);
    return out;
}

EdgeMap canny_edges(const GrayImage& g, const CannyParams& params) {
    if (params.low < 0.0 || params.low > params.high)
        throw InvalidArgument("canny thresholds must satisfy 0 <= low <= high");
    const int w = g.width(), h = g.height();
    const std::size_t n = g.size();
    const GrayImage blurred = gaussian_blur(g, params.blur_sigma);

    std::vector<std::int32_t> gx(n), gy(n);
    k::sobel(blurred.values(), gx, gy, w, h);
    std::vector<kernels::EdgeClass> cls(n);
    k::suppress_non_maxima(gx, gy, cls, w, h, params.low, params.high);

    // hysteresis: grow strong pixels through 8-connected weak ones
    std::vector<std::uint8_t> bits(n, 0);
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < n; ++i)
        if (cls[i] == kernels::EdgeClass::strong) {
            bits[i] = 1;
            stack.push_back(i);
        }
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int xx = x + dx, yy = y + dy;
                if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
                const std::size_t j = static_cast<std::size_t>(yy) * w + xx;
                if (!bits[j] && cls[j] == kernels::EdgeClass::weak) {
                    bits[j] = 1;
                    stack.push_back(j);
                }
            }
    }
    return EdgeMap(w, h, std::move(bits));
}

}  // namespace storyboard::sketch
