#include "oto/dct.hpp"

#include <cmath>

namespace oto {

namespace {

// basis[k][n] = c(k) * cos((2n+1) k pi / 16), rows orthonormal
const std::array<std::array<double, 8>, 8>& basis() {
  static const std::array<std::array<double, 8>, 8> m = [] {
    std::array<std::array<double, 8>, 8> b{};
    const double pi = std::acos(-1.0);
    for (int k = 0; k < 8; ++k) {
      const double c = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int n = 0; n < 8; ++n)
        b[k][n] = c * std::cos((2 * n + 1) * k * pi / 16.0);
    }
    return b;
  }();
  return m;
}

}  // namespace

void dct8x8_forward(const std::array<double, 64>& in, std::array<double, 64>& out) {
  const auto& m = basis();
  std::array<double, 64> tmp{};
  // rows: tmp = in * m^T
  for (int r = 0; r < 8; ++r)
    for (int k = 0; k < 8; ++k) {
      double acc = 0.0;
      for (int n = 0; n < 8; ++n) acc += in[r * 8 + n] * m[k][n];
      tmp[r * 8 + k] = acc;
    }
  // columns: out = m * tmp
  for (int k = 0; k < 8; ++k)
    for (int c = 0; c < 8; ++c) {
      double acc = 0.0;
      for (int n = 0; n < 8; ++n) acc += m[k][n] * tmp[n * 8 + c];
      out[k * 8 + c] = acc;
    }
}

void dct8x8_inverse(const std::array<double, 64>& in, std::array<double, 64>& out) {
  const auto& m = basis();
  std::array<double, 64> tmp{};
  // columns: tmp = m^T * in
  for (int n = 0; n < 8; ++n)
    for (int c = 0; c < 8; ++c) {
      double acc = 0.0;
      for (int k = 0; k < 8; ++k) acc += m[k][n] * in[k * 8 + c];
      tmp[n * 8 + c] = acc;
    }
  // rows: out = tmp * m
  for (int r = 0; r < 8; ++r)
    for (int n = 0; n < 8; ++n) {
      double acc = 0.0;
      for (int k = 0; k < 8; ++k) acc += tmp[r * 8 + k] * m[k][n];
      out[r * 8 + n] = acc;
    }
}

}  // namespace oto
