#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace storyboard {

constexpr std::uint32_t fnv1a32(std::string_view bytes) noexcept {
    std::uint32_t h = 2166136261u;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 16777619u;
    }
    return h;
}

/// Incremental 64-bit FNV-1a, used for content-addressed artifact keys.
class Fnv64 {
public:
    Fnv64& update(std::span<const std::uint8_t> bytes) noexcept;
    Fnv64& update(std::string_view text) noexcept;
    Fnv64& update(std::uint64_t value) noexcept;
    std::uint64_t digest() const noexcept { return state_; }
    std::string hex() const;

private:
    std::uint64_t state_ = 14695981039346656037ull;
};

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws InvalidArgument on characters outside the standard alphabet.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace storyboard
