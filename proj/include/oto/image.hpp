#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace oto {

// Grayscale plane with real-valued samples on the [0,255] scale. Codec and
// network outputs stay real; quantize_to_bytes snaps back to integers when a
// stage needs byte-exact data.
struct ImagePlane {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  ImagePlane() = default;
  ImagePlane(int h, int w) : width(w), height(h), data(static_cast<std::size_t>(h) * w, 0.0) {}

  double& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::size_t count() const { return data.size(); }
};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // interleaved r,g,b
};

ImagePlane load_pgm(const std::string& path);
void save_pgm(const ImagePlane& img, const std::string& path);
RgbImage load_ppm(const std::string& path);

// BT.601 studio swing: white maps to 235, black to 16.
ImagePlane rgb_to_luma(const RgbImage& rgb);

// Loads a PGM or PPM (detected by magic), converts color to luma, and crops
// to even dimensions.
ImagePlane load_and_prepare(const std::string& path);

ImagePlane crop_to_multiple(const ImagePlane& img, int multiple);

// Clockwise quarter turn: top-left corner lands at the top-right.
ImagePlane rotate90_cw(const ImagePlane& img);
ImagePlane rotate(const ImagePlane& img, int degrees_cw);

void clamp_plane(ImagePlane& img, double lo = 0.0, double hi = 255.0);

// Rounds every sample to the nearest integer in [0,255] (half away from zero).
void quantize_to_bytes(ImagePlane& img);

double mean_abs_diff(const ImagePlane& a, const ImagePlane& b);

struct PatchSpec {
  int patch_size = 0;
  int stride = 0;
  std::vector<int> rotations;  // subset of {90, 180, 270}, degrees clockwise
};

struct PatchPair {
  ImagePlane clean;
  ImagePlane degraded;
};

// Aligned patch grid over both planes, repeated for each requested rotation
// of the full images, then shuffled with the given seed. Grid positions step
// by stride and keep only fully interior patches.
std::vector<PatchPair> extract_patches(const ImagePlane& clean, const ImagePlane& degraded,
                                       const PatchSpec& spec, std::uint32_t seed);

enum class SynthKind { gradient, checker, texture };

SynthKind synth_kind_from_string(const std::string& s);

// Deterministic synthetic grayscale images, already quantized to bytes.
// gradient: planar ramp (constant first differences along x and y).
// checker: two-level checkerboard with random cell size, levels and phase.
// texture: sum of sinusoids plus one step edge, clamped.
std::vector<ImagePlane> make_synthetic_corpus(SynthKind kind, int count, int size,
                                              std::uint32_t seed);

}  // namespace oto
