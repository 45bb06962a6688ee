#pragma once

#include <cstdint>
#include <vector>

#include "semcont/tensor.hpp"

namespace semcont::synth {

// Deterministic procedural image generators used to materialize datasets
// when canonical raw files are not on disk. Content is a pure function of
// (generator, split, index); pixels are quantized to 8 bits.

/// 28x28 grayscale handwriting-style digits, white strokes on black.
/// Returns u8 pixel rows (count*28*28) and labels in [0,10).
void digits_28(const std::string& split, int64_t count, std::vector<uint8_t>& pixels,
               std::vector<int64_t>& labels);

/// 32x32 RGB object scenes; `classes` of 10 gives shape categories,
/// 100 gives shape x texture pairs. Object color and background are
/// nuisance variables uncorrelated with the label.
void objects_32(const std::string& split, int64_t count, int classes,
                std::vector<uint8_t>& pixels, std::vector<int64_t>& labels);

/// 32x32 RGB colored digits over textured backgrounds.
void color_digits_32(const std::string& split, int64_t count, std::vector<uint8_t>& pixels,
                     std::vector<int64_t>& labels);

}  // namespace semcont::synth
