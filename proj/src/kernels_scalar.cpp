#include "oto/kernels.hpp"

#include <cmath>

// Reference backend. Written for clarity, and every SIMD backend is tested
// bit-for-bit against it, including the 8-lane blocked reduction order and
// the +0.0f contributions of tail slots.

namespace oto::kernels {
namespace {

void k_add(std::size_t n, const float* a, const float* b, float* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void k_sub(std::size_t n, const float* a, const float* b, float* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void k_scale(std::size_t n, float s, const float* x, float* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = s * x[i];
}

void k_axpy(std::size_t n, float a, const float* x, float* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::fmaf(a, x[i], y[i]);
}

void k_affine(std::size_t n, float a, float b, const float* x, float* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::fmaf(a, x[i], b);
}

void k_lincomb(std::size_t n, float a, const float* p, float b, const float* q,
               float c, float* out) {
  for (std::size_t i = 0; i < n; ++i)
    out[i] = std::fmaf(a, p[i], std::fmaf(b, q[i], c));
}

void k_relu(std::size_t n, const float* x, float* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void k_relu_bwd(std::size_t n, const float* x, const float* g, float* gx) {
  for (std::size_t i = 0; i < n; ++i)
    gx[i] = gx[i] + (x[i] > 0.0f ? g[i] : 0.0f);
}

float combine_lanes(const float lane[8]) {
  float s = lane[0];
  for (int l = 1; l < 8; ++l) s += lane[l];
  return s;
}

float k_sum(std::size_t n, const float* x) {
  float lane[8] = {};
  for (std::size_t i0 = 0; i0 < n; i0 += 8) {
    for (std::size_t l = 0; l < 8; ++l)
      lane[l] = lane[l] + (i0 + l < n ? x[i0 + l] : 0.0f);
  }
  return combine_lanes(lane);
}

float k_dot(std::size_t n, const float* a, const float* b) {
  float lane[8] = {};
  for (std::size_t i0 = 0; i0 < n; i0 += 8) {
    for (std::size_t l = 0; l < 8; ++l) {
      if (i0 + l < n)
        lane[l] = std::fmaf(a[i0 + l], b[i0 + l], lane[l]);
      else
        lane[l] = std::fmaf(0.0f, 0.0f, lane[l]);
    }
  }
  return combine_lanes(lane);
}

void k_conv3x3_accum(int h, int w, const float* src, int src_stride,
                     const float* taps, float* dst) {
  for (int y = 0; y < h; ++y) {
    const float* r0 = src + static_cast<std::size_t>(y) * src_stride;
    const float* r1 = r0 + src_stride;
    const float* r2 = r1 + src_stride;
    float* d = dst + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      float v = d[x];
      v = std::fmaf(taps[0], r0[x], v);
      v = std::fmaf(taps[1], r0[x + 1], v);
      v = std::fmaf(taps[2], r0[x + 2], v);
      v = std::fmaf(taps[3], r1[x], v);
      v = std::fmaf(taps[4], r1[x + 1], v);
      v = std::fmaf(taps[5], r1[x + 2], v);
      v = std::fmaf(taps[6], r2[x], v);
      v = std::fmaf(taps[7], r2[x + 1], v);
      v = std::fmaf(taps[8], r2[x + 2], v);
      d[x] = v;
    }
  }
}

void k_conv3x3_taps(int h, int w, const float* g, const float* src,
                    int src_stride, float* taps_out) {
  float lane[9][8] = {};
  for (int y = 0; y < h; ++y) {
    const float* gr = g + static_cast<std::size_t>(y) * w;
    const float* rows[3] = {
        src + static_cast<std::size_t>(y) * src_stride,
        src + static_cast<std::size_t>(y + 1) * src_stride,
        src + static_cast<std::size_t>(y + 2) * src_stride,
    };
    for (int x0 = 0; x0 < w; x0 += 8) {
      for (int t = 0; t < 9; ++t) {
        const float* r = rows[t / 3] + t % 3;
        for (int l = 0; l < 8; ++l) {
          if (x0 + l < w)
            lane[t][l] = std::fmaf(gr[x0 + l], r[x0 + l], lane[t][l]);
          else
            lane[t][l] = std::fmaf(0.0f, 0.0f, lane[t][l]);
        }
      }
    }
  }
  for (int t = 0; t < 9; ++t) taps_out[t] += combine_lanes(lane[t]);
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops table = {
      .name = "scalar",
      .add = k_add,
      .sub = k_sub,
      .scale = k_scale,
      .axpy = k_axpy,
      .affine = k_affine,
      .lincomb = k_lincomb,
      .relu = k_relu,
      .relu_bwd = k_relu_bwd,
      .sum = k_sum,
      .dot = k_dot,
      .conv3x3_accum = k_conv3x3_accum,
      .conv3x3_taps = k_conv3x3_taps,
  };
  return table;
}

}  // namespace oto::kernels
