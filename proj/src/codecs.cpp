#include "oto/codecs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "oto/wavelet.hpp"

namespace oto {

namespace {
constexpr int kTile = 32;
constexpr int kLevels = 4;
}  // namespace

std::size_t spiht_tile_budget(double ratio) {
  if (!(ratio > 0.0))
    throw std::invalid_argument("spiht_tile_budget: ratio must be positive");
  const double bits = kTile * kTile * 8.0 / ratio;
  const auto b = static_cast<std::size_t>(std::llround(bits));
  return std::max<std::size_t>(b, 16);
}

SpihtImageResult spiht_roundtrip_image(const ImagePlane& img, double ratio) {
  if (img.width <= 0 || img.height <= 0 || img.width % kTile != 0 ||
      img.height % kTile != 0)
    throw std::invalid_argument(
        "spiht_roundtrip_image: dimensions must be multiples of 32");
  const std::size_t budget = spiht_tile_budget(ratio);

  SpihtImageResult res;
  res.restored = ImagePlane(img.height, img.width);
  std::vector<double> tile(kTile * kTile);
  for (int ty = 0; ty < img.height; ty += kTile)
    for (int tx = 0; tx < img.width; tx += kTile) {
      for (int y = 0; y < kTile; ++y)
        for (int x = 0; x < kTile; ++x)
          tile[y * kTile + x] = img.at(ty + y, tx + x) - 128.0;
      dwt2d_forward(tile, kTile, kLevels);
      SpihtStream st = spiht_encode(tile, kTile, kLevels, budget);
      std::vector<double> rec = spiht_decode(st, kTile, kLevels);
      dwt2d_inverse(rec, kTile, kLevels);
      for (int y = 0; y < kTile; ++y)
        for (int x = 0; x < kTile; ++x)
          res.restored.at(ty + y, tx + x) = rec[y * kTile + x] + 128.0;
      res.total_bits += st.bits;
      res.tiles.push_back(std::move(st));
    }
  clamp_plane(res.restored);
  quantize_to_bytes(res.restored);
  res.bits_per_pixel =
      static_cast<double>(res.total_bits) / (static_cast<double>(img.width) * img.height);
  return res;
}

ImagePlane degrade_plane(const ImagePlane& img, const std::string& kind,
                         double param) {
  if (kind == "jpeg")
    return jpeg_roundtrip(img, static_cast<int>(std::lround(param)));
  if (kind == "spiht") return spiht_roundtrip_image(img, param).restored;
  throw std::invalid_argument("degrade_plane: unknown kind '" + kind + "'");
}

}  // namespace oto
