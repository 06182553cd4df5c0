#include "oto/kernels.hpp"

#ifdef OTO_HAVE_NEON

#include <arm_neon.h>

#include <cmath>

// NEON backend. An 8-lane reduction block is modelled as a low and a high
// float32x4, so the lane accumulation order matches the scalar reference
// exactly. Tails fall back to scalar code that replicates the +0.0f
// contributions of dead lanes.

namespace oto::kernels {
namespace {

void k_add(std::size_t n, const float* a, const float* b, float* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    vst1q_f32(out + i, vaddq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void k_sub(std::size_t n, const float* a, const float* b, float* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    vst1q_f32(out + i, vsubq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void k_scale(std::size_t n, float s, const float* x, float* out) {
  const float32x4_t vs = vdupq_n_f32(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(out + i, vmulq_f32(vs, vld1q_f32(x + i)));
  for (; i < n; ++i) out[i] = s * x[i];
}

void k_axpy(std::size_t n, float a, const float* x, float* y) {
  const float32x4_t va = vdupq_n_f32(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    vst1q_f32(y + i, vfmaq_f32(vld1q_f32(y + i), va, vld1q_f32(x + i)));
  for (; i < n; ++i) y[i] = std::fmaf(a, x[i], y[i]);
}

void k_affine(std::size_t n, float a, float b, const float* x, float* out) {
  const float32x4_t va = vdupq_n_f32(a);
  const float32x4_t vb = vdupq_n_f32(b);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    vst1q_f32(out + i, vfmaq_f32(vb, va, vld1q_f32(x + i)));
  for (; i < n; ++i) out[i] = std::fmaf(a, x[i], b);
}

void k_lincomb(std::size_t n, float a, const float* p, float b, const float* q,
               float c, float* out) {
  const float32x4_t va = vdupq_n_f32(a);
  const float32x4_t vb = vdupq_n_f32(b);
  const float32x4_t vc = vdupq_n_f32(c);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float32x4_t t = vfmaq_f32(vc, vb, vld1q_f32(q + i));
    vst1q_f32(out + i, vfmaq_f32(t, va, vld1q_f32(p + i)));
  }
  for (; i < n; ++i) out[i] = std::fmaf(a, p[i], std::fmaf(b, q[i], c));
}

void k_relu(std::size_t n, const float* x, float* out) {
  const float32x4_t zero = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) vst1q_f32(out + i, vmaxq_f32(vld1q_f32(x + i), zero));
  for (; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void k_relu_bwd(std::size_t n, const float* x, const float* g, float* gx) {
  const float32x4_t zero = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    uint32x4_t mask = vcgtq_f32(vld1q_f32(x + i), zero);
    float32x4_t pass = vreinterpretq_f32_u32(
        vandq_u32(mask, vreinterpretq_u32_f32(vld1q_f32(g + i))));
    vst1q_f32(gx + i, vaddq_f32(vld1q_f32(gx + i), pass));
  }
  for (; i < n; ++i) gx[i] = gx[i] + (x[i] > 0.0f ? g[i] : 0.0f);
}

float combine_lanes(float32x4_t lo, float32x4_t hi) {
  float lane[8];
  vst1q_f32(lane, lo);
  vst1q_f32(lane + 4, hi);
  float s = lane[0];
  for (int l = 1; l < 8; ++l) s += lane[l];
  return s;
}

float k_sum(std::size_t n, const float* x) {
  float32x4_t lo = vdupq_n_f32(0.0f);
  float32x4_t hi = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    lo = vaddq_f32(lo, vld1q_f32(x + i));
    hi = vaddq_f32(hi, vld1q_f32(x + i + 4));
  }
  if (i < n) {
    float lane[8];
    vst1q_f32(lane, lo);
    vst1q_f32(lane + 4, hi);
    for (int l = 0; l < 8; ++l)
      lane[l] = lane[l] + (i + l < n ? x[i + l] : 0.0f);
    float s = lane[0];
    for (int l = 1; l < 8; ++l) s += lane[l];
    return s;
  }
  return combine_lanes(lo, hi);
}

float k_dot(std::size_t n, const float* a, const float* b) {
  float32x4_t lo = vdupq_n_f32(0.0f);
  float32x4_t hi = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    lo = vfmaq_f32(lo, vld1q_f32(a + i), vld1q_f32(b + i));
    hi = vfmaq_f32(hi, vld1q_f32(a + i + 4), vld1q_f32(b + i + 4));
  }
  if (i < n) {
    float lane[8];
    vst1q_f32(lane, lo);
    vst1q_f32(lane + 4, hi);
    for (int l = 0; l < 8; ++l) {
      if (i + l < n)
        lane[l] = std::fmaf(a[i + l], b[i + l], lane[l]);
      else
        lane[l] = std::fmaf(0.0f, 0.0f, lane[l]);
    }
    float s = lane[0];
    for (int l = 1; l < 8; ++l) s += lane[l];
    return s;
  }
  return combine_lanes(lo, hi);
}

void k_conv3x3_accum(int h, int w, const float* src, int src_stride,
                     const float* taps, float* dst) {
  float32x4_t t[9];
  for (int k = 0; k < 9; ++k) t[k] = vdupq_n_f32(taps[k]);
  for (int y = 0; y < h; ++y) {
    const float* r0 = src + static_cast<std::size_t>(y) * src_stride;
    const float* r1 = r0 + src_stride;
    const float* r2 = r1 + src_stride;
    float* d = dst + static_cast<std::size_t>(y) * w;
    int x = 0;
    for (; x + 4 <= w; x += 4) {
      float32x4_t acc = vld1q_f32(d + x);
      acc = vfmaq_f32(acc, t[0], vld1q_f32(r0 + x));
      acc = vfmaq_f32(acc, t[1], vld1q_f32(r0 + x + 1));
      acc = vfmaq_f32(acc, t[2], vld1q_f32(r0 + x + 2));
      acc = vfmaq_f32(acc, t[3], vld1q_f32(r1 + x));
      acc = vfmaq_f32(acc, t[4], vld1q_f32(r1 + x + 1));
      acc = vfmaq_f32(acc, t[5], vld1q_f32(r1 + x + 2));
      acc = vfmaq_f32(acc, t[6], vld1q_f32(r2 + x));
      acc = vfmaq_f32(acc, t[7], vld1q_f32(r2 + x + 1));
      acc = vfmaq_f32(acc, t[8], vld1q_f32(r2 + x + 2));
      vst1q_f32(d + x, acc);
    }
    for (; x < w; ++x) {
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
  float32x4_t lo[9], hi[9];
  for (int t = 0; t < 9; ++t) {
    lo[t] = vdupq_n_f32(0.0f);
    hi[t] = vdupq_n_f32(0.0f);
  }
  for (int y = 0; y < h; ++y) {
    const float* gr = g + static_cast<std::size_t>(y) * w;
    const float* rows[3] = {
        src + static_cast<std::size_t>(y) * src_stride,
        src + static_cast<std::size_t>(y + 1) * src_stride,
        src + static_cast<std::size_t>(y + 2) * src_stride,
    };
    int x0 = 0;
    for (; x0 + 8 <= w; x0 += 8) {
      float32x4_t g_lo = vld1q_f32(gr + x0);
      float32x4_t g_hi = vld1q_f32(gr + x0 + 4);
      for (int t = 0; t < 9; ++t) {
        const float* r = rows[t / 3] + t % 3;
        lo[t] = vfmaq_f32(lo[t], g_lo, vld1q_f32(r + x0));
        hi[t] = vfmaq_f32(hi[t], g_hi, vld1q_f32(r + x0 + 4));
      }
    }
    if (x0 < w) {
      for (int t = 0; t < 9; ++t) {
        const float* r = rows[t / 3] + t % 3;
        float lane[8];
        vst1q_f32(lane, lo[t]);
        vst1q_f32(lane + 4, hi[t]);
        for (int l = 0; l < 8; ++l) {
          if (x0 + l < w)
            lane[l] = std::fmaf(gr[x0 + l], r[x0 + l], lane[l]);
          else
            lane[l] = std::fmaf(0.0f, 0.0f, lane[l]);
        }
        lo[t] = vld1q_f32(lane);
        hi[t] = vld1q_f32(lane + 4);
      }
    }
  }
  for (int t = 0; t < 9; ++t) taps_out[t] += combine_lanes(lo[t], hi[t]);
}

}  // namespace

const Ops& neon_ops() {
  static const Ops table = {
      .name = "neon",
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

#endif  // OTO_HAVE_NEON
