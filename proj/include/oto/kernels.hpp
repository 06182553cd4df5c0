#pragma once

#include <cstddef>
#include <string>

namespace oto::kernels {

// Float kernel table. Every backend must be bit-identical to the scalar
// reference table, so the numeric contract is part of the interface:
//
//  - elementwise ops round once per stated operation; fused multiply-adds are
//    always explicit (std::fmaf on the scalar path, vfmadd/vfma on SIMD).
//  - reductions (sum, dot, conv3x3_taps) accumulate into 8 interleaved lane
//    accumulators (lane = element index mod 8 inside each contiguous run) and
//    combine the lanes left to right at the end.  Slots past the end of a
//    short tail contribute an exact +0.0f to their lane.
//
// Buffers documented as "slack" must stay readable 8 floats past their last
// addressed element; conv scratch pads are allocated that way.
struct Ops {
  const char* name;

  void (*add)(std::size_t n, const float* a, const float* b, float* out);
  void (*sub)(std::size_t n, const float* a, const float* b, float* out);
  // out[i] = s * x[i]
  void (*scale)(std::size_t n, float s, const float* x, float* out);
  // y[i] = fma(a, x[i], y[i])
  void (*axpy)(std::size_t n, float a, const float* x, float* y);
  // out[i] = fma(a, x[i], b)
  void (*affine)(std::size_t n, float a, float b, const float* x, float* out);
  // out[i] = fma(a, p[i], fma(b, q[i], c))
  void (*lincomb)(std::size_t n, float a, const float* p, float b,
                  const float* q, float c, float* out);
  void (*relu)(std::size_t n, const float* x, float* out);
  // gx[i] += x[i] > 0 ? g[i] : +0.0f
  void (*relu_bwd)(std::size_t n, const float* x, const float* g, float* gx);

  float (*sum)(std::size_t n, const float* x);
  float (*dot)(std::size_t n, const float* a, const float* b);

  // dst[y*w+x] += sum_t taps[t] * src[(y+ty)*src_stride + x + tx], taps in
  // row-major (ty,tx) order, one fused step per tap.  src needs slack.
  void (*conv3x3_accum)(int h, int w, const float* src, int src_stride,
                        const float* taps, float* dst);
  // taps_out[t] += sum_{y,x} g[y*w+x] * src[(y+ty)*src_stride + x + tx],
  // each tap reduced in the 8-lane blocked order.  src needs slack.
  void (*conv3x3_taps)(int h, int w, const float* g, const float* src,
                       int src_stride, float* taps_out);
};

enum class Isa { scalar, avx2, neon };

const Ops& scalar_ops();

// Active table.  Defaults to the fastest supported backend, or whatever the
// OTO_KERNELS environment variable names (scalar | avx2 | neon | auto).
const Ops& ops();
Isa active_isa();
bool supported(Isa isa);
// Throws if the backend is not compiled in or the CPU lacks it.
void select(Isa isa);
const Ops& table(Isa isa);

std::string isa_name(Isa isa);

}  // namespace oto::kernels
