#pragma once

// Pixel kernels shared by the frame, sketch, shot-detection and metric code.
//
// Every kernel exists twice with identical signatures: `serial` is the plain
// reference loop kept for testing, `parallel` is the OpenMP version used by
// the public API. Both must produce bit-identical output; reductions are done
// in integer arithmetic so the result does not depend on thread scheduling.

#include <array>
#include <cstdint>
#include <span>

namespace storyboard::kernels {

/// Per-pixel class emitted by non-maximum suppression.
enum class EdgeClass : std::uint8_t { none = 0, weak = 1, strong = 2 };

namespace serial {
#include "storyboard/detail/kernel_decls.inc"
}  // namespace serial

namespace parallel {
#include "storyboard/detail/kernel_decls.inc"
}  // namespace parallel

/// Number of worker threads the parallel kernels will use.
int parallel_threads() noexcept;

}  // namespace storyboard::kernels
