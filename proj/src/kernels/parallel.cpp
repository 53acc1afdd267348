#include "storyboard/kernels.hpp"

#include "pixel_ops.hpp"

#include <omp.h>

#include <vector>

namespace storyboard::kernels {

int parallel_threads() noexcept { return omp_get_max_threads(); }

namespace parallel {

using namespace storyboard::kernels::detail;

namespace {

// Below this many elements the fork/join overhead dominates.
constexpr std::ptrdiff_t kMinParallel = 1 << 14;

}  // namespace

void rgb_to_luma(std::span<const std::uint8_t> rgb, std::span<std::uint8_t> out) {
    const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static) if (n >= kMinParallel)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = luma(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
}

void invert(std::span<const std::uint8_t> in, std::span<std::uint8_t> out) {
    const auto n = static_cast<std::ptrdiff_t>(in.size());
#pragma omp parallel for schedule(static) if (n >= kMinParallel)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = static_cast<std::uint8_t>(255 - in[i]);
}

void erode3x3(std::span<const std::uint8_t> in, std::span<std::uint8_t> out, int width, int height) {
#pragma omp parallel for schedule(static) if (static_cast<std::ptrdiff_t>(in.size()) >= kMinParallel)
    for (int y = 0; y < height; ++y) {
        const std::uint8_t* rows[3] = {
            in.data() + static_cast<std::size_t>(clamp_index(y - 1, height)) * width,
            in.data() + static_cast<std::size_t>(y) * width,
            in.data() + static_cast<std::size_t>(clamp_index(y + 1, height)) * width};
        std::uint8_t* dst = out.data() + static_cast<std::size_t>(y) * width;
        for (int x = 0; x < width; ++x) {
            const int xm = clamp_index(x - 1, width), xp = clamp_index(x + 1, width);
            std::uint8_t m = 255;
            for (const std::uint8_t* r : rows) m = std::min({m, r[xm], r[x], r[xp]});
            dst[x] = m;
        }
    }
}

void color_dodge(std::span<const std::uint8_t> g, std::span<const std::uint8_t> e,
                 std::span<std::uint8_t> out, double epsilon) {
    const auto n = static_cast<std::ptrdiff_t>(g.size());
#pragma omp parallel for schedule(static) if (n >= kMinParallel)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = dodge(g[i], e[i], epsilon);
}

void rgb_to_hsv(std::span<const std::uint8_t> rgb, std::span<std::uint8_t> out) {
    const auto n = static_cast<std::ptrdiff_t>(rgb.size() / 3);
#pragma omp parallel for schedule(static) if (n >= kMinParallel)
    for (std::ptrdiff_t i = 0; i < n; ++i) hsv(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2], &out[3 * i]);
}

std::array<std::uint64_t, 3> hsv_abs_diff_sums(std::span<const std::uint8_t> a,
                                               std::span<const std::uint8_t> b) {
    std::uint64_t dh = 0, ds = 0, dv = 0;
    const auto n = static_cast<std::ptrdiff_t>(a.size() / 3);
#pragma omp parallel for schedule(static) reduction(+ : dh, ds, dv) if (n >= kMinParallel)
    for (std::ptrdiff_t p = 0; p < n; ++p) {
        const std::ptrdiff_t i = 3 * p;
        dh += static_cast<std::uint64_t>(circular_hue_distance(a[i], b[i]));
        ds += static_cast<std::uint64_t>(std::abs(a[i + 1] - b[i + 1]));
        dv += static_cast<std::uint64_t>(std::abs(a[i + 2] - b[i + 2]));
    }
    return {dh, ds, dv};
}

std::uint64_t abs_diff_sum(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    std::uint64_t sum = 0;
    const auto n = static_cast<std::ptrdiff_t>(a.size());
#pragma omp parallel for schedule(static) reduction(+ : sum) if (n >= kMinParallel)
    for (std::ptrdiff_t i = 0; i < n; ++i) sum += static_cast<std::uint64_t>(std::abs(a[i] - b[i]));
    return sum;
}

void convolve_separable(std::span<const std::uint8_t> in, std::span<std::uint8_t> out, int width,
                        int height, std::span<const double> taps) {
    const int radius = static_cast<int>(taps.size() / 2);
    std::vector<double> tmp(in.size());
    const bool go = static_cast<std::ptrdiff_t>(in.size()) >= kMinParallel;
#pragma omp parallel if (go)
    {
#pragma omp for schedule(static)
        for (int y = 0; y < height; ++y) {
            const std::uint8_t* src = in.data() + static_cast<std::size_t>(y) * width;
            double* dst = tmp.data() + static_cast<std::size_t>(y) * width;
            for (int x = 0; x < width; ++x) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) acc += taps[k + radius] * src[clamp_index(x + k, width)];
                dst[x] = acc;
            }
        }
#pragma omp for schedule(static)
        for (int y = 0; y < height; ++y) {
            std::uint8_t* dst = out.data() + static_cast<std::size_t>(y) * width;
            for (int x = 0; x < width; ++x) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k)
                    acc += taps[k + radius] * tmp[static_cast<std::size_t>(clamp_index(y + k, height)) * width + x];
                dst[x] = round_clamp(acc);
            }
        }
    }
}

void sobel(std::span<const std::uint8_t> in, std::span<std::int32_t> gx, std::span<std::int32_t> gy,
           int width, int height) {
#pragma omp parallel for schedule(static) if (static_cast<std::ptrdiff_t>(in.size()) >= kMinParallel)
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * width + x;
            sobel_at(in, width, height, x, y, gx[i], gy[i]);
        }
}

void suppress_non_maxima(std::span<const std::int32_t> gx, std::span<const std::int32_t> gy,
                         std::span<EdgeClass> out, int width, int height, double low, double high) {
#pragma omp parallel for schedule(static) if (static_cast<std::ptrdiff_t>(gx.size()) >= kMinParallel)
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            out[static_cast<std::size_t>(y) * width + x] = classify_at(gx, gy, width, height, x, y, low, high);
}

void resize_bilinear(std::span<const std::uint8_t> in, int in_width, int in_height,
                     std::span<std::uint8_t> out, int out_width, int out_height, int channels) {
    std::vector<BilinearTap> xtaps(out_width);
    for (int x = 0; x < out_width; ++x) xtaps[x] = bilinear_tap(x, in_width, out_width);
#pragma omp parallel for schedule(static) if (static_cast<std::ptrdiff_t>(out.size()) >= kMinParallel)
    for (int y = 0; y < out_height; ++y) {
        const BilinearTap ty = bilinear_tap(y, in_height, out_height);
        for (int x = 0; x < out_width; ++x)
            for (int c = 0; c < channels; ++c)
                out[(static_cast<std::size_t>(y) * out_width + x) * channels + c] =
                    bilinear_at(in, in_width, channels, xtaps[x], ty, c);
    }
}

void dilate_binary(std::span<const std::uint8_t> in, std::span<std::uint8_t> out, int width,
                   int height, int radius) {
#pragma omp parallel for schedule(static) if (static_cast<std::ptrdiff_t>(in.size()) >= kMinParallel)
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            out[static_cast<std::size_t>(y) * width + x] = dilated_at(in, width, height, x, y, radius);
}

std::uint64_t count_both(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    std::uint64_t n = 0;
    const auto size = static_cast<std::ptrdiff_t>(a.size());
#pragma omp parallel for schedule(static) reduction(+ : n) if (size >= kMinParallel)
    for (std::ptrdiff_t i = 0; i < size; ++i) n += (a[i] && b[i]) ? 1 : 0;
    return n;
}

}  // namespace parallel
}  // namespace storyboard::kernels
