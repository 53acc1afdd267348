#pragma once

// Per-pixel arithmetic shared by the serial and OpenMP kernel loops.

#include "storyboard/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <span>

namespace storyboard::kernels::detail {

inline std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
    return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b + 500u) / 1000u);
}

inline std::uint8_t round_clamp(double v) noexcept {
    if (!(v > 0.0)) return 0;
    if (v >= 255.0) return 255;
    return static_cast<std::uint8_t>(std::floor(v + 0.5));
}

inline std::uint8_t dodge(std::uint8_t g, std::uint8_t e, double epsilon) noexcept {
    const double s = std::min(255.0, g * 255.0 / (255.0 - e + epsilon));
    return round_clamp(s);
}

inline void hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b, std::uint8_t* out) noexcept {
    const int mx = std::max({r, g, b});
    const int mn = std::min({r, g, b});
    const int delta = mx - mn;
    out[2] = static_cast<std::uint8_t>(mx);
    out[1] = mx == 0 ? 0 : static_cast<std::uint8_t>((2 * 255 * delta + mx) / (2 * mx));
    if (delta == 0) {
        out[0] = 0;
        return;
    }
    // hue in sixths of the circle: num / delta in [0, 6)
    int num;
    if (mx == r)
        num = g - b;
    else if (mx == g)
        num = 2 * delta + (b - r);
    else
        num = 4 * delta + (r - g);
    if (num < 0) num += 6 * delta;
    int h = (2 * 255 * num + 6 * delta) / (12 * delta);
    out[0] = static_cast<std::uint8_t>(h >= 255 ? h - 255 : h);
}

inline int circular_hue_distance(int a, int b) noexcept {
    const int d = std::abs(a - b);
    return std::min(d, 255 - d);
}

inline int clamp_index(int i, int n) noexcept { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

inline void sobel_at(std::span<const std::uint8_t> in, int width, int height, int x, int y,
                     std::int32_t& gx, std::int32_t& gy) noexcept {
    const int xm = clamp_index(x - 1, width), xp = clamp_index(x + 1, width);
    const int ym = clamp_index(y - 1, height), yp = clamp_index(y + 1, height);
    auto p = [&](int xx, int yy) { return static_cast<std::int32_t>(in[static_cast<std::size_t>(yy) * width + xx]); };
    gx = (p(xp, ym) + 2 * p(xp, y) + p(xp, yp)) - (p(xm, ym) + 2 * p(xm, y) + p(xm, yp));
    gy = (p(xm, yp) + 2 * p(x, yp) + p(xp, yp)) - (p(xm, ym) + 2 * p(x, ym) + p(xp, ym));
}

inline double magnitude(std::int32_t gx, std::int32_t gy) noexcept {
    return std::sqrt(static_cast<double>(gx) * gx + static_cast<double>(gy) * gy);
}

inline EdgeClass classify_at(std::span<const std::int32_t> gx, std::span<const std::int32_t> gy,
                             int width, int height, int x, int y, double low,
                             double high) noexcept {
    const std::size_t i = static_cast<std::size_t>(y) * width + x;
    const double m = magnitude(gx[i], gy[i]);
    if (!(m > low)) return EdgeClass::none;
    auto mag = [&](int xx, int yy) {
        if (xx < 0 || yy < 0 || xx >= width || yy >= height) return 0.0;
        const std::size_t j = static_cast<std::size_t>(yy) * width + xx;
        return magnitude(gx[j], gy[j]);
    };
    // tan(22.5 deg) in Q15, as in the classical integer direction test
    constexpr std::int64_t kTan22 = 13573;
    const std::int64_t ax = std::abs(static_cast<std::int64_t>(gx[i]));
    const std::int64_t ay = std::abs(static_cast<std::int64_t>(gy[i])) << 15;
    const std::int64_t tg22x = ax * kTan22;
    bool keep;
    if (ay < tg22x) {
        keep = m > mag(x - 1, y) && m >= mag(x + 1, y);
    } else if (ay > tg22x + (ax << 16)) {
        keep = m > mag(x, y - 1) && m >= mag(x, y + 1);
    } else {
        const int s = ((gx[i] ^ gy[i]) < 0) ? -1 : 1;
        keep = m > mag(x - s, y - 1) && m > mag(x + s, y + 1);
    }
    if (!keep) return EdgeClass::none;
    return m > high ? EdgeClass::strong : EdgeClass::weak;
}

struct BilinearTap {
    int i0;
    int i1;
    double frac;
};

inline BilinearTap bilinear_tap(int dst, int in_size, int out_size) noexcept {
    double src = (dst + 0.5) * static_cast<double>(in_size) / out_size - 0.5;
    if (src < 0.0) src = 0.0;
    if (src > in_size - 1) src = in_size - 1;
    const int i0 = static_cast<int>(std::floor(src));
    const int i1 = std::min(i0 + 1, in_size - 1);
    return {i0, i1, src - i0};
}

inline std::uint8_t bilinear_at(std::span<const std::uint8_t> in, int in_width, int channels,
                                const BilinearTap& tx, const BilinearTap& ty, int c) noexcept {
    auto p = [&](int xx, int yy) {
        return static_cast<double>(in[(static_cast<std::size_t>(yy) * in_width + xx) * channels + c]);
    };
    const double top = p(tx.i0, ty.i0) * (1.0 - tx.frac) + p(tx.i1, ty.i0) * tx.frac;
    const double bottom = p(tx.i0, ty.i1) * (1.0 - tx.frac) + p(tx.i1, ty.i1) * tx.frac;
    return round_clamp(top * (1.0 - ty.frac) + bottom * ty.frac);
}

inline std::uint8_t dilated_at(std::span<const std::uint8_t> in, int width, int height, int x,
                               int y, int radius) noexcept {
    const int y0 = std::max(0, y - radius), y1 = std::min(height - 1, y + radius);
    const int x0 = std::max(0, x - radius), x1 = std::min(width - 1, x + radius);
    for (int yy = y0; yy <= y1; ++yy)
        for (int xx = x0; xx <= x1; ++xx)
            if (in[static_cast<std::size_t>(yy) * width + xx]) return 1;
    return 0;
}

}  // namespace storyboard::kernels::detail
