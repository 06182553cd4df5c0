#include "oto/wavelet.hpp"

#include <stdexcept>
#include <string>

namespace oto {

namespace {

constexpr double kA = -1.586134342059924;
constexpr double kB = -0.052980118572961;
constexpr double kG = 0.882911075530934;
constexpr double kD = 0.443506852043971;
constexpr double kZ = 1.149604398860241;

// One lifting pass over a strided line of even length n. Split into even
// samples s and odd samples d, predict/update twice with symmetric border
// extension, scale, then store s in the first half and d in the second.
void lift_forward(double* p, int n, int stride) {
  const int h = n / 2;
  std::vector<double> s(h), d(h);
  for (int i = 0; i < h; ++i) {
    s[i] = p[(2 * i) * stride];
    d[i] = p[(2 * i + 1) * stride];
  }
  auto sp = [&](int i) { return s[i < h ? i : h - 1]; };
  auto dp = [&](int i) { return d[i < 0 ? 0 : i]; };
  for (int i = 0; i < h; ++i) d[i] += kA * (s[i] + sp(i + 1));
  for (int i = 0; i < h; ++i) s[i] += kB * (dp(i - 1) + d[i]);
  for (int i = 0; i < h; ++i) d[i] += kG * (s[i] + sp(i + 1));
  for (int i = 0; i < h; ++i) s[i] += kD * (dp(i - 1) + d[i]);
  for (int i = 0; i < h; ++i) {
    p[i * stride] = s[i] * kZ;
    p[(h + i) * stride] = d[i] / kZ;
  }
}

void lift_inverse(double* p, int n, int stride) {
  const int h = n / 2;
  std::vector<double> s(h), d(h);
  for (int i = 0; i < h; ++i) {
    s[i] = p[i * stride] / kZ;
    d[i] = p[(h + i) * stride] * kZ;
  }
  auto sp = [&](int i) { return s[i < h ? i : h - 1]; };
  auto dp = [&](int i) { return d[i < 0 ? 0 : i]; };
  for (int i = 0; i < h; ++i) s[i] -= kD * (dp(i - 1) + d[i]);
  for (int i = 0; i < h; ++i) d[i] -= kG * (s[i] + sp(i + 1));
  for (int i = 0; i < h; ++i) s[i] -= kB * (dp(i - 1) + d[i]);
  for (int i = 0; i < h; ++i) d[i] -= kA * (s[i] + sp(i + 1));
  for (int i = 0; i < h; ++i) {
    p[(2 * i) * stride] = s[i];
    p[(2 * i + 1) * stride] = d[i];
  }
}

void check_args(const std::vector<double>& a, int size, int levels) {
  if (size < 4 || a.size() != static_cast<std::size_t>(size) * size)
    throw std::invalid_argument("dwt2d: array is not size*size");
  if (levels < 1) throw std::invalid_argument("dwt2d: levels must be positive");
  int n = size;
  for (int l = 0; l < levels; ++l) {
    if (n % 2 != 0 || n / 2 < 2)
      throw std::invalid_argument("dwt2d: size " + std::to_string(size) +
                                  " does not support " + std::to_string(levels) +
                                  " levels");
    n /= 2;
  }
}

}  // namespace

void dwt2d_forward(std::vector<double>& a, int size, int levels) {
  check_args(a, size, levels);
  int n = size;
  for (int l = 0; l < levels; ++l) {
    for (int r = 0; r < n; ++r) lift_forward(a.data() + r * size, n, 1);
    for (int c = 0; c < n; ++c) lift_forward(a.data() + c, n, size);
    n /= 2;
  }
}

void dwt2d_inverse(std::vector<double>& a, int size, int levels) {
  check_args(a, size, levels);
  int n = size >> (levels - 1);
  for (int l = 0; l < levels; ++l) {
    for (int c = 0; c < n; ++c) lift_inverse(a.data() + c, n, size);
    for (int r = 0; r < n; ++r) lift_inverse(a.data() + r * size, n, 1);
    n *= 2;
  }
}

double region_energy(const std::vector<double>& a, int size, int row0, int col0,
                     int rows, int cols) {
  double e = 0.0;
  for (int r = row0; r < row0 + rows; ++r)
    for (int c = col0; c < col0 + cols; ++c) {
      const double v = a[static_cast<std::size_t>(r) * size + c];
      e += v * v;
    }
  return e;
}

}  // namespace oto
