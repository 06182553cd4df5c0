#pragma once

#include <array>

#include "oto/image.hpp"

namespace oto {

// Baseline luminance quantization matrix scaled by the libjpeg quality knob:
// scale = 5000/q below 50, else 200 - 2q, each entry (base*scale + 50)/100
// clamped to [1, 255]. quality itself is clamped to [1, 100].
std::array<int, 64> luma_quant_table(int quality);

// Grayscale blockwise DCT quantization round trip: pad to a multiple of 8 by
// mirroring the border, level shift by -128, transform each 8x8 block,
// quantize (round half away from zero), dequantize, inverse transform, crop,
// clamp to [0, 255] and round to integers like a real decoder would.
// Entropy coding is skipped; only the lossy part is modeled.
ImagePlane jpeg_roundtrip(const ImagePlane& img, int quality);

}  // namespace oto
