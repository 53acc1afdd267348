#pragma once

#include "storyboard/frames.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace storyboard::image_io {

struct PngInfo {
    int width = 0;
    int height = 0;
    int channels = 0;  // 1 gray, 2 gray+alpha, 3 rgb, 4 rgba
    int bit_depth = 0;
};

/// Reads only the header. Throws IoError if the file is not a PNG.
PngInfo read_png_info(const std::filesystem::path& path);

Frame read_image(const std::filesystem::path& path);
GrayImage read_gray_png(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const Frame& frame);
std::vector<std::uint8_t> encode_png(const GrayImage& image);
Frame decode_png_rgb(std::span<const std::uint8_t> bytes);
GrayImage decode_png_gray(std::span<const std::uint8_t> bytes);

void write_png(const std::filesystem::path& path, const Frame& frame);
void write_png(const std::filesystem::path& path, const GrayImage& image);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace storyboard::image_io
