#include "storyboard/kernels.hpp"

#include "pixel_ops.hpp"

#include <vector>

namespace storyboard::kernels::serial {

using namespace storyboard::kernels::detail;

void rgb_to_luma(std::span<const std::uint8_t> rgb, std::span<std::uint8_t> out) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = luma(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
}

void invert(std::span<const std::uint8_t> in, std::span<std::uint8_t> out) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<std::uint8_t>(255 - in[i]);
}

void erode3x3(std::span<const std::uint8_t> in, std::span<std::uint8_t> out, int width, int height) {
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            std::uint8_t m = 255;
            for (int dy = -1; dy <= 1; ++dy) {
                const int yy = clamp_index(y + dy, height);
                for (int dx = -1; dx <= 1; ++dx) {
                    const int xx = clamp_index(x + dx, width);
                    m = std::min(m, in[static_cast<std::size_t>(yy) * width + xx]);
                }
            }
            out[static_cast<std::size_t>(y) * width + x] = m;
        }
    }
}

void color_dodge(std::span<const std::uint8_t> g, std::span<const std::uint8_t> e,
                 std::span<std::uint8_t> out, double epsilon) {
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = dodge(g[i], e[i], epsilon);
}

void rgb_to_hsv(std::span<const std::uint8_t> rgb, std::span<std::uint8_t> out) {
    for (std::size_t i = 0; i < rgb.size(); i += 3) hsv(rgb[i], rgb[i + 1], rgb[i + 2], &out[i]);
}

std::array<std::uint64_t, 3> hsv_abs_diff_sums(std::span<const std::uint8_t> a,
                                               std::span<const std::uint8_t> b) {
    std::uint64_t dh = 0, ds = 0, dv = 0;
    for (std::size_t i = 0; i < a.size(); i += 3) {
        dh += static_cast<std::uint64_t>(circular_hue_distance(a[i], b[i]));
        ds += static_cast<std::uint64_t>(std::abs(a[i + 1] - b[i + 1]));
        dv += static_cast<std::uint64_t>(std::abs(a[i + 2] - b[i + 2]));
    }
    return {dh, ds, dv};
}

std::uint64_t abs_diff_sum(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += static_cast<std::uint64_t>(std::abs(a[i] - b[i]));
    return sum;
}

void convolve_separable(std::span<const std::uint8_t> in, std::span<std::uint8_t> out, int width,
                        int height, std::span<const double> taps) {
    const int radius = static_cast<int>(taps.size() / 2);
    std::vector<double> tmp(in.size());
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += taps[k + radius] * in[static_cast<std::size_t>(y) * width + clamp_index(x + k, width)];
            tmp[static_cast<std::size_t>(y) * width + x] = acc;
        }
    }
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += taps[k + radius] * tmp[static_cast<std::size_t>(clamp_index(y + k, height)) * width + x];
            out[static_cast<std::size_t>(y) * width + x] = round_clamp(acc);
        }
    }
}

void sobel(std::span<const std::uint8_t> in, std::span<std::int32_t> gx, std::span<std::int32_t> gy,
           int width, int height) {
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * width + x;
            sobel_at(in, width, height, x, y, gx[i], gy[i]);
        }
}

void suppress_non_maxima(std::span<const std::int32_t> gx, std::span<const std::int32_t> gy,
                         std::span<EdgeClass> out, int width, int height, double low, double high) {
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            out[static_cast<std::size_t>(y) * width + x] = classify_at(gx, gy, width, height, x, y, low, high);
}

void resize_bilinear(std::span<const std::uint8_t> in, int in_width, int in_height,
                     std::span<std::uint8_t> out, int out_width, int out_height, int channels) {
    for (int y = 0; y < out_height; ++y) {
        const BilinearTap ty = bilinear_tap(y, in_height, out_height);
        for (int x = 0; x < out_width; ++x) {
            const BilinearTap tx = bilinear_tap(x, in_width, out_width);
            for (int c = 0; c < channels; ++c)
                out[(static_cast<std::size_t>(y) * out_width + x) * channels + c] =
                    bilinear_at(in, in_width, channels, tx, ty, c);
        }
    }
}

void dilate_binary(std::span<const std::uint8_t> in, std::span<std::uint8_t> out, int width,
                   int height, int radius) {
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            out[static_cast<std::size_t>(y) * width + x] = dilated_at(in, width, height, x, y, radius);
}

std::uint64_t count_both(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    std::uint64_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) n += (a[i] && b[i]) ? 1 : 0;
    return n;
}

}  // namespace storyboard::kernels::serial
