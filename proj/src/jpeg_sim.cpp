#include "oto/jpeg_sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "oto/dct.hpp"

namespace oto {

namespace {

constexpr std::array<int, 64> kLumaBase = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99,
};

int mirror(int i, int n) { return i < n ? i : 2 * n - 1 - i; }

}  // namespace

std::array<int, 64> luma_quant_table(int quality) {
  quality = std::clamp(quality, 1, 100);
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<int, 64> q{};
  for (int i = 0; i < 64; ++i)
    q[i] = std::clamp((kLumaBase[i] * scale + 50) / 100, 1, 255);
  return q;
}

ImagePlane jpeg_roundtrip(const ImagePlane& img, int quality) {
  if (img.width < 4 || img.height < 4)
    throw std::invalid_argument("jpeg_roundtrip: image smaller than 4x4");
  const std::array<int, 64> q = luma_quant_table(quality);
  const int ph = (img.height + 7) / 8 * 8;
  const int pw = (img.width + 7) / 8 * 8;

  ImagePlane out(img.height, img.width);
  std::array<double, 64> block{}, coef{}, back{};
  for (int by = 0; by < ph; by += 8)
    for (int bx = 0; bx < pw; bx += 8) {
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
          block[y * 8 + x] =
              img.at(mirror(by + y, img.height), mirror(bx + x, img.width)) - 128.0;
      dct8x8_forward(block, coef);
      for (int i = 0; i < 64; ++i)
        coef[i] = static_cast<double>(std::lround(coef[i] / q[i])) * q[i];
      dct8x8_inverse(coef, back);
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
          const int iy = by + y, ix = bx + x;
          if (iy < img.height && ix < img.width)
            out.at(iy, ix) = back[y * 8 + x] + 128.0;
        }
    }
  clamp_plane(out);
  quantize_to_bytes(out);
  return out;
}

}  // namespace oto
