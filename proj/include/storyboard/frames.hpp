#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace storyboard {

/// Row-major 8-bit RGB raster with its position in a sequence.
class Frame {
public:
    Frame(int width, int height, std::vector<std::uint8_t> rgb, std::size_t index = 0,
          std::optional<double> timestamp = std::nullopt);
    /// Uniform fill.
    static Frame filled(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b,
                        std::size_t index = 0);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t index() const noexcept { return index_; }
    std::optional<double> timestamp() const noexcept { return timestamp_; }
    std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
    std::span<std::uint8_t> mutable_pixels() noexcept { return pixels_; }

    std::uint8_t at(int x, int y, int channel) const {
        return pixels_[(static_cast<std::size_t>(y) * width_ + x) * 3 + channel];
    }

    Frame with_index(std::size_t index, std::optional<double> timestamp = std::nullopt) const;
    bool same_pixels(const Frame& other) const noexcept;

private:
    int width_;
    int height_;
    std::vector<std::uint8_t> pixels_;
    std::size_t index_;
    std::optional<double> timestamp_;
};

/// Row-major single-channel 8-bit raster.
class GrayImage {
public:
    GrayImage(int width, int height, std::vector<std::uint8_t> values);
    GrayImage(int width, int height, std::uint8_t fill);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const std::uint8_t> values() const noexcept { return values_; }
    std::span<std::uint8_t> mutable_values() noexcept { return values_; }

    std::uint8_t at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
    std::uint8_t& at(int x, int y) { return values_[static_cast<std::size_t>(y) * width_ + x]; }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    int width_;
    int height_;
    std::vector<std::uint8_t> values_;
};

/// Immutable ordered frames sharing one resolution.
class FrameSequence {
public:
    FrameSequence() = default;
    FrameSequence(std::vector<Frame> frames, double fps);

    const std::vector<Frame>& frames() const noexcept { return frames_; }
    const Frame& operator[](std::size_t i) const { return frames_.at(i); }
    std::size_t size() const noexcept { return frames_.size(); }
    bool empty() const noexcept { return frames_.empty(); }
    double fps() const noexcept { return fps_; }

private:
    std::vector<Frame> frames_;
    double fps_ = 24.0;
};

struct LoadOptions {
    std::optional<double> fps_hint;
    /// argv template for video sources; "{input}" and "{outdir}" are substituted.
    std::vector<std::string> decoder_command{"ffmpeg", "-i", "{input}", "{outdir}/%06d.png"};
};

/// Loads a directory of PNG/JPEG images (lexicographic order) or decodes a
/// video file through the configured external decoder.
FrameSequence load_frames(const std::filesystem::path& source, const LoadOptions& options = {});

Frame resize_to_width(const Frame& frame, int target_width = 600);
Frame resize(const Frame& frame, int width, int height);
GrayImage resize(const GrayImage& image, int width, int height);

/// BT.601 luma, rounded half-up.
GrayImage to_grayscale(const Frame& frame);
/// Replicates the gray value into all three channels.
Frame to_rgb(const GrayImage& image, std::size_t index = 0);

}  // namespace storyboard
