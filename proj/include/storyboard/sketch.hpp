#pragma once

#include "storyboard/frames.hpp"

#include <cstdint>
#include <vector>

namespace storyboard::sketch {

struct SketchConfig {
    double epsilon = 1.0;
    int erosion_passes = 1;

    void validate() const;
};

/// Binary raster; bits are stored one per byte (0 or 1).
class EdgeMap {
public:
    EdgeMap(int width, int height);
    EdgeMap(int width, int height, std::vector<std::uint8_t> bits);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::span<const std::uint8_t> bits() const noexcept { return bits_; }
    bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
    void set(int x, int y, bool v) { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }
    std::size_t count() const noexcept;

    friend bool operator==(const EdgeMap&, const EdgeMap&) = default;

private:
    int width_;
    int height_;
    std::vector<std::uint8_t> bits_;
};

struct CannyParams {
    double low = 100.0;
    double high = 200.0;
    double blur_sigma = 1.4;
};

/// Intermediates of the keyframe-to-sketch chain.
struct SketchStages {
    GrayImage gray;
    GrayImage inverted;
    GrayImage eroded;
    GrayImage sketch;
};

GrayImage invert(const GrayImage& g);
GrayImage erode3x3(const GrayImage& g, int passes = 1);
GrayImage color_dodge(const GrayImage& g, const GrayImage& e, const SketchConfig& cfg = {});

SketchStages sketchify_stages(const Frame& f, const SketchConfig& cfg = {});
GrayImage sketchify(const Frame& f, const SketchConfig& cfg = {});

/// Normalized Gaussian taps with radius ceil(3 sigma); a single 1.0 tap when sigma <= 0.
std::vector<double> gaussian_taps(double sigma);
GrayImage gaussian_blur(const GrayImage& g, double sigma);

/// Gaussian blur, Sobel, non-maximum suppression and 8-connected hysteresis.
EdgeMap canny_edges(const GrayImage& g, const CannyParams& params = {});

}  // namespace storyboard::sketch
