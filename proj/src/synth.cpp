#include "oto/image.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "oto/rng.hpp"

namespace oto {

SynthKind synth_kind_from_string(const std::string& s) {
  if (s == "gradient") return SynthKind::gradient;
  if (s == "checker") return SynthKind::checker;
  if (s == "texture") return SynthKind::texture;
  throw std::runtime_error("unknown synthetic kind '" + s + "' (want gradient/checker/texture)");
}

namespace {

ImagePlane synth_gradient(int size, Rng& rng) {
  ImagePlane img(size, size);
  // integer slopes keep first differences exactly constant after byte
  // quantization; candidates are limited so the whole ramp fits in range
  std::vector<std::pair<int, int>> cand;
  for (int sx = -2; sx <= 2; ++sx)
    for (int sy = -2; sy <= 2; ++sy) {
      if (sx == 0 && sy == 0) continue;
      if ((std::abs(sx) + std::abs(sy)) * (size - 1) <= 240) cand.emplace_back(sx, sy);
    }
  if (cand.empty()) cand.emplace_back(1, 0);  // huge image: ramp will clip at the ends
  const auto [sx, sy] = cand[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<int>(cand.size()) - 1))];
  const double ext_x = static_cast<double>(sx) * (size - 1);
  const double ext_y = static_cast<double>(sy) * (size - 1);
  const double lo = std::min(0.0, ext_x) + std::min(0.0, ext_y);
  const double hi = std::max(0.0, ext_x) + std::max(0.0, ext_y);
  const double base = std::floor(128.0 - (lo + hi) / 2.0);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) img.at(y, x) = base + sx * x + sy * y;
  clamp_plane(img);
  return img;
}

ImagePlane synth_checker(int size, Rng& rng) {
  static const int cells[] = {4, 8, 16, 32};
  int cell = cells[rng.uniform_int(0, 3)];
  while (cell >= size && cell > 4) cell /= 2;
  const int px = rng.uniform_int(0, cell - 1);
  const int py = rng.uniform_int(0, cell - 1);
  const double lo = 10.0 + rng.uniform_double() * 90.0;
  const double hi = 150.0 + rng.uniform_double() * 95.0;
  ImagePlane img(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const int parity = ((x + px) / cell + (y + py) / cell) & 1;
      img.at(y, x) = parity ? hi : lo;
    }
  return img;
}

ImagePlane synth_texture(int size, Rng& rng) {
  ImagePlane img(size, size);
  const double base = 60.0 + rng.uniform_double() * 130.0;
  for (double& v : img.data) v = base;
  const double tau = 6.283185307179586;
  for (int wave = 0; wave < 3; ++wave) {
    const double amp = 5.0 + rng.uniform_double() * 35.0;
    const double fx = rng.uniform_int(0, size / 8) * tau / size;
    const double fy = rng.uniform_int(0, size / 8) * tau / size;
    const double phase = rng.uniform_double() * tau;
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) img.at(y, x) += amp * std::sin(fx * x + fy * y + phase);
  }
  const double step = (20.0 + rng.uniform_double() * 40.0) * (rng.uniform() < 0.5f ? -1.0 : 1.0);
  const int pos = rng.uniform_int(size / 4, 3 * size / 4);
  const bool horizontal_edge = rng.uniform() < 0.5f;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      if ((horizontal_edge ? y : x) >= pos) img.at(y, x) += step;
  clamp_plane(img);
  return img;
}

}  // namespace

std::vector<ImagePlane> make_synthetic_corpus(SynthKind kind, int count, int size,
                                              std::uint32_t seed) {
  if (count <= 0 || size < 8) throw std::runtime_error("make_synthetic_corpus: bad count/size");
  Rng rng(seed);
  std::vector<ImagePlane> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    ImagePlane img;
    switch (kind) {
      case SynthKind::gradient:
        img = synth_gradient(size, rng);
        break;
      case SynthKind::checker:
        img = synth_checker(size, rng);
        break;
      case SynthKind::texture:
        img = synth_texture(size, rng);
        break;
    }
    quantize_to_bytes(img);
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace oto
