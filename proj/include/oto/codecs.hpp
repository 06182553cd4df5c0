#pragma once

#include <string>
#include <vector>

#include "oto/image.hpp"
#include "oto/jpeg_sim.hpp"
#include "oto/spiht.hpp"

namespace oto {

// Bit budget for one 32x32 tile at a given compression ratio, floor of 16
// bits so the header always fits.
std::size_t spiht_tile_budget(double ratio);

struct SpihtImageResult {
  ImagePlane restored;
  std::size_t total_bits = 0;
  double bits_per_pixel = 0.0;
  std::vector<SpihtStream> tiles;  // row-major tile order
};

// Wavelet + set-partitioning round trip: the plane is split into 32x32
// tiles (dimensions must be multiples of 32), each tile is level shifted,
// transformed with a 4-level 9/7 wavelet, coded to the tile budget, decoded
// and inverse transformed. Output is clamped and rounded to integers.
SpihtImageResult spiht_roundtrip_image(const ImagePlane& img, double ratio);

// Degradation used when building training data. kind is "jpeg" (param =
// quality) or "spiht" (param = ratio).
ImagePlane degrade_plane(const ImagePlane& img, const std::string& kind,
                         double param);

}  // namespace oto
