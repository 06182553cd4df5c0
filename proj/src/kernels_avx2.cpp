#include "oto/kernels.hpp"

#ifdef OTO_HAVE_AVX2

#include <immintrin.h>

#include <cmath>
#include <cstdint>

// AVX2 backend. Compiled with -mavx2 -mfma; only reached after a runtime
// CPU check. Tail slots are handled with masked loads so that, like the
// scalar reference, they contribute an exact +0.0f to reduction lanes.

namespace oto::kernels {
namespace {

__m256i tail_mask(int rem) {
  alignas(32) std::int32_t m[8];
  for (int i = 0; i < 8; ++i) m[i] = i < rem ? -1 : 0;
  return _mm256_load_si256(reinterpret_cast<const __m256i*>(m));
}

void k_add(std::size_t n, const float* a, const float* b, float* out) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i,
                     _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void k_sub(std::size_t n, const float* a, const float* b, float* out) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i,
                     _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void k_scale(std::size_t n, float s, const float* x, float* out) {
  const __m256 vs = _mm256_set1_ps(s);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_mul_ps(vs, _mm256_loadu_ps(x + i)));
  for (; i < n; ++i) out[i] = s * x[i];
}

void k_axpy(std::size_t n, float a, const float* x, float* y) {
  const __m256 va = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(
        y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) y[i] = std::fmaf(a, x[i], y[i]);
}

void k_affine(std::size_t n, float a, float b, const float* x, float* out) {
  const __m256 va = _mm256_set1_ps(a);
  const __m256 vb = _mm256_set1_ps(b);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), vb));
  for (; i < n; ++i) out[i] = std::fmaf(a, x[i], b);
}

void k_lincomb(std::size_t n, float a, const float* p, float b, const float* q,
               float c, float* out) {
  const __m256 va = _mm256_set1_ps(a);
  const __m256 vb = _mm256_set1_ps(b);
  const __m256 vc = _mm256_set1_ps(c);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 t = _mm256_fmadd_ps(vb, _mm256_loadu_ps(q + i), vc);
    _mm256_storeu_ps(out + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(p + i), t));
  }
  for (; i < n; ++i) out[i] = std::fmaf(a, p[i], std::fmaf(b, q[i], c));
}

void k_relu(std::size_t n, const float* x, float* out) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(out + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
  for (; i < n; ++i) out[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void k_relu_bwd(std::size_t n, const float* x, const float* g, float* gx) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
    __m256 pass = _mm256_and_ps(mask, _mm256_loadu_ps(g + i));
    _mm256_storeu_ps(gx + i, _mm256_add_ps(_mm256_loadu_ps(gx + i), pass));
  }
  for (; i < n; ++i) gx[i] = gx[i] + (x[i] > 0.0f ? g[i] : 0.0f);
}

float combine_lanes(__m256 acc) {
  alignas(32) float lane[8];
  _mm256_store_ps(lane, acc);
  float s = lane[0];
  for (int l = 1; l < 8; ++l) s += lane[l];
  return s;
}

float k_sum(std::size_t n, const float* x) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
  if (i < n) {
    __m256i m = tail_mask(static_cast<int>(n - i));
    acc = _mm256_add_ps(acc, _mm256_maskload_ps(x + i, m));
  }
  return combine_lanes(acc);
}

float k_dot(std::size_t n, const float* a, const float* b) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc);
  if (i < n) {
    __m256i m = tail_mask(static_cast<int>(n - i));
    acc = _mm256_fmadd_ps(_mm256_maskload_ps(a + i, m),
                          _mm256_maskload_ps(b + i, m), acc);
  }
  return combine_lanes(acc);
}

void k_conv3x3_accum(int h, int w, const float* src, int src_stride,
                     const float* taps, float* dst) {
  __m256 t[9];
  for (int k = 0; k < 9; ++k) t[k] = _mm256_set1_ps(taps[k]);
  for (int y = 0; y < h; ++y) {
    const float* r0 = src + static_cast<std::size_t>(y) * src_stride;
    const float* r1 = r0 + src_stride;
    const float* r2 = r1 + src_stride;
    float* d = dst + static_cast<std::size_t>(y) * w;
    int x = 0;
    for (; x + 8 <= w; x += 8) {
      __m256 acc = _mm256_loadu_ps(d + x);
      acc = _mm256_fmadd_ps(t[0], _mm256_loadu_ps(r0 + x), acc);
      acc = _mm256_fmadd_ps(t[1], _mm256_loadu_ps(r0 + x + 1), acc);
      acc = _mm256_fmadd_ps(t[2], _mm256_loadu_ps(r0 + x + 2), acc);
      acc = _mm256_fmadd_ps(t[3], _mm256_loadu_ps(r1 + x), acc);
      acc = _mm256_fmadd_ps(t[4], _mm256_loadu_ps(r1 + x + 1), acc);
      acc = _mm256_fmadd_ps(t[5], _mm256_loadu_ps(r1 + x + 2), acc);
      acc = _mm256_fmadd_ps(t[6], _mm256_loadu_ps(r2 + x), acc);
      acc = _mm256_fmadd_ps(t[7], _mm256_loadu_ps(r2 + x + 1), acc);
      acc = _mm256_fmadd_ps(t[8], _mm256_loadu_ps(r2 + x + 2), acc);
      _mm256_storeu_ps(d + x, acc);
    }
    if (x < w) {
      __m256i m = tail_mask(w - x);
      __m256 acc = _mm256_maskload_ps(d + x, m);
      acc = _mm256_fmadd_ps(t[0], _mm256_loadu_ps(r0 + x), acc);
      acc = _mm256_fmadd_ps(t[1], _mm256_loadu_ps(r0 + x + 1), acc);
      acc = _mm256_fmadd_ps(t[2], _mm256_loadu_ps(r0 + x + 2), acc);
      acc = _mm256_fmadd_ps(t[3], _mm256_loadu_ps(r1 + x), acc);
      acc = _mm256_fmadd_ps(t[4], _mm256_loadu_ps(r1 + x + 1), acc);
      acc = _mm256_fmadd_ps(t[5], _mm256_loadu_ps(r1 + x + 2), acc);
      acc = _mm256_fmadd_ps(t[6], _mm256_loadu_ps(r2 + x), acc);
      acc = _mm256_fmadd_ps(t[7], _mm256_loadu_ps(r2 + x + 1), acc);
      acc = _mm256_fmadd_ps(t[8], _mm256_loadu_ps(r2 + x + 2), acc);
      _mm256_maskstore_ps(d + x, m, acc);
    }
  }
}

void k_conv3x3_taps(int h, int w, const float* g, const float* src,
                    int src_stride, float* taps_out) {
  __m256 acc[9];
  for (int t = 0; t < 9; ++t) acc[t] = _mm256_setzero_ps();
  for (int y = 0; y < h; ++y) {
    const float* gr = g + static_cast<std::size_t>(y) * w;
    const float* rows[3] = {
        src + static_cast<std::size_t>(y) * src_stride,
        src + static_cast<std::size_t>(y + 1) * src_stride,
        src + static_cast<std::size_t>(y + 2) * src_stride,
    };
    int x0 = 0;
    for (; x0 + 8 <= w; x0 += 8) {
      __m256 gv = _mm256_loadu_ps(gr + x0);
      for (int t = 0; t < 9; ++t) {
        const float* r = rows[t / 3] + t % 3;
        acc[t] = _mm256_fmadd_ps(gv, _mm256_loadu_ps(r + x0), acc[t]);
      }
    }
    if (x0 < w) {
      __m256i m = tail_mask(w - x0);
      __m256 gv = _mm256_maskload_ps(gr + x0, m);
      for (int t = 0; t < 9; ++t) {
        const float* r = rows[t / 3] + t % 3;
        acc[t] = _mm256_fmadd_ps(gv, _mm256_maskload_ps(r + x0, m), acc[t]);
      }
    }
  }
  for (int t = 0; t < 9; ++t) taps_out[t] += combine_lanes(acc[t]);
}

}  // namespace

const Ops& avx2_ops() {
  static const Ops table = {
      .name = "avx2",
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

#endif  // OTO_HAVE_AVX2
