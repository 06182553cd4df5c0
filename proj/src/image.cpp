#include "oto/image.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "oto/rng.hpp"

namespace oto {

namespace {

// Reads the next header token, skipping whitespace and # comments.
std::string next_token(std::istream& in, const std::string& path) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) throw std::runtime_error("truncated header in " + path);
  return tok;
}

int header_int(std::istream& in, const std::string& path) {
  const std::string tok = next_token(in, path);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("bad header field '" + tok + "' in " + path);
  }
}

void read_header(std::istream& in, const std::string& path, const char* magic,
                 int& w, int& h) {
  const std::string m = next_token(in, path);
  if (m != magic)
    throw std::runtime_error(path + ": expected " + std::string(magic) + " magic, got " + m);
  w = header_int(in, path);
  h = header_int(in, path);
  const int maxval = header_int(in, path);
  if (w <= 0 || h <= 0) throw std::runtime_error(path + ": bad dimensions");
  if (maxval != 255) throw std::runtime_error(path + ": only maxval 255 supported");
  // single whitespace byte separates header from raster
}

std::uint8_t byte_of(double v) {
  const long r = std::lround(v);
  if (r < 0) return 0;
  if (r > 255) return 255;
  return static_cast<std::uint8_t>(r);
}

}  // namespace

ImagePlane load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  int w = 0, h = 0;
  read_header(in, path, "P5", w, h);
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size()))
    throw std::runtime_error(path + ": truncated pixel data");
  ImagePlane img(h, w);
  for (std::size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i];
  return img;
}

void save_pgm(const ImagePlane& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<std::uint8_t> raw(img.count());
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = byte_of(img.data[i]);
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

RgbImage load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  int w = 0, h = 0;
  read_header(in, path, "P6", w, h);
  RgbImage img;
  img.width = w;
  img.height = h;
  img.data.resize(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.data.size()))
    throw std::runtime_error(path + ": truncated pixel data");
  return img;
}

ImagePlane rgb_to_luma(const RgbImage& rgb) {
  ImagePlane img(rgb.height, rgb.width);
  const std::size_t n = static_cast<std::size_t>(rgb.width) * rgb.height;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = rgb.data[3 * i + 0];
    const double g = rgb.data[3 * i + 1];
    const double b = rgb.data[3 * i + 2];
    img.data[i] = 16.0 + (65.481 * r + 128.553 * g + 24.966 * b) / 255.0;
  }
  return img;
}

ImagePlane load_and_prepare(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw std::runtime_error("cannot open " + path);
  char magic[2] = {0, 0};
  probe.read(magic, 2);
  probe.close();
  ImagePlane img;
  if (magic[0] == 'P' && magic[1] == '5') {
    img = load_pgm(path);
  } else if (magic[0] == 'P' && magic[1] == '6') {
    img = rgb_to_luma(load_ppm(path));
  } else {
    throw std::runtime_error(path + ": not a binary PGM/PPM file");
  }
  return crop_to_multiple(img, 2);
}

ImagePlane crop_to_multiple(const ImagePlane& img, int multiple) {
  if (multiple <= 0) throw std::runtime_error("crop_to_multiple: bad multiple");
  const int h = img.height - img.height % multiple;
  const int w = img.width - img.width % multiple;
  if (h <= 0 || w <= 0)
    throw std::runtime_error("crop_to_multiple: image smaller than " + std::to_string(multiple));
  if (h == img.height && w == img.width) return img;
  ImagePlane out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out.at(y, x) = img.at(y, x);
  return out;
}

ImagePlane rotate90_cw(const ImagePlane& img) {
  ImagePlane out(img.width, img.height);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) out.at(y, x) = img.at(img.height - 1 - x, y);
  return out;
}

ImagePlane rotate(const ImagePlane& img, int degrees_cw) {
  switch (degrees_cw) {
    case 0:
      return img;
    case 90:
      return rotate90_cw(img);
    case 180:
      return rotate90_cw(rotate90_cw(img));
    case 270:
      return rotate90_cw(rotate90_cw(rotate90_cw(img)));
    default:
      throw std::runtime_error("rotate: angle must be one of 0/90/180/270");
  }
}

void clamp_plane(ImagePlane& img, double lo, double hi) {
  for (double& v : img.data) v = v < lo ? lo : (v > hi ? hi : v);
}

void quantize_to_bytes(ImagePlane& img) {
  for (double& v : img.data) v = byte_of(v);
}

double mean_abs_diff(const ImagePlane& a, const ImagePlane& b) {
  if (a.width != b.width || a.height != b.height)
    throw std::runtime_error("mean_abs_diff: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.count(); ++i) s += std::abs(a.data[i] - b.data[i]);
  return s / static_cast<double>(a.count());
}

std::vector<PatchPair> extract_patches(const ImagePlane& clean, const ImagePlane& degraded,
                                       const PatchSpec& spec, std::uint32_t seed) {
  if (clean.width != degraded.width || clean.height != degraded.height)
    throw std::runtime_error("extract_patches: pair size mismatch");
  const int p = spec.patch_size;
  const int stride = spec.stride > 0 ? spec.stride : p;
  if (p <= 0) throw std::runtime_error("extract_patches: patch_size must be positive");
  if (p > clean.width || p > clean.height)
    throw std::runtime_error("extract_patches: patch larger than image");
  for (int r : spec.rotations)
    if (r != 90 && r != 180 && r != 270)
      throw std::runtime_error("extract_patches: rotations must be 90/180/270");

  std::vector<PatchPair> out;
  std::vector<int> angles{0};
  angles.insert(angles.end(), spec.rotations.begin(), spec.rotations.end());
  for (int angle : angles) {
    const ImagePlane rc = rotate(clean, angle);
    const ImagePlane rd = rotate(degraded, angle);
    for (int y0 = 0; y0 + p <= rc.height; y0 += stride) {
      for (int x0 = 0; x0 + p <= rc.width; x0 += stride) {
        PatchPair pair;
        pair.clean = ImagePlane(p, p);
        pair.degraded = ImagePlane(p, p);
        for (int y = 0; y < p; ++y) {
          for (int x = 0; x < p; ++x) {
            pair.clean.at(y, x) = rc.at(y0 + y, x0 + x);
            pair.degraded.at(y, x) = rd.at(y0 + y, x0 + x);
          }
        }
        out.push_back(std::move(pair));
      }
    }
  }
  Rng rng(seed);
  rng.shuffle(out);
  return out;
}

}  // namespace oto
