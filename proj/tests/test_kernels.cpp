#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <vector>

#include "oto/kernels.hpp"
#include "oto/rng.hpp"

using namespace oto;
using kernels::Isa;
using kernels::Ops;

namespace {

std::vector<float> random_vec(Rng& rng, std::size_t n, float lo = -2.0f,
                              float hi = 2.0f) {
  std::vector<float> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

bool bitwise_equal(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size()) return false;
  return std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

bool bitwise_equal(float a, float b) {
  return std::memcmp(&a, &b, sizeof(float)) == 0;
}

std::vector<Isa> backends_under_test() {
  std::vector<Isa> v = {Isa::scalar};
  if (kernels::supported(Isa::avx2)) v.push_back(Isa::avx2);
  if (kernels::supported(Isa::neon)) v.push_back(Isa::neon);
  return v;
}

const std::size_t kSizes[] = {1, 3, 7, 8, 9, 16, 31, 64, 100, 1024, 4097};

}  // namespace

TEST_CASE("elementwise kernels agree bitwise across backends") {
  Rng rng(42);
  const Ops& ref = kernels::scalar_ops();
  for (Isa isa : backends_under_test()) {
    const Ops& k = kernels::table(isa);
    for (std::size_t n : kSizes) {
      auto a = random_vec(rng, n);
      auto b = random_vec(rng, n);
      std::vector<float> r1(n), r2(n);

      ref.add(n, a.data(), b.data(), r1.data());
      k.add(n, a.data(), b.data(), r2.data());
      CHECK(bitwise_equal(r1, r2));

      ref.sub(n, a.data(), b.data(), r1.data());
      k.sub(n, a.data(), b.data(), r2.data());
      CHECK(bitwise_equal(r1, r2));

      ref.scale(n, 0.37f, a.data(), r1.data());
      k.scale(n, 0.37f, a.data(), r2.data());
      CHECK(bitwise_equal(r1, r2));

      ref.affine(n, 1.7f, -0.3f, a.data(), r1.data());
      k.affine(n, 1.7f, -0.3f, a.data(), r2.data());
      CHECK(bitwise_equal(r1, r2));

      ref.lincomb(n, 0.9f, a.data(), -1.1f, b.data(), 0.25f, r1.data());
      k.lincomb(n, 0.9f, a.data(), -1.1f, b.data(), 0.25f, r2.data());
      CHECK(bitwise_equal(r1, r2));

      ref.relu(n, a.data(), r1.data());
      k.relu(n, a.data(), r2.data());
      CHECK(bitwise_equal(r1, r2));

      r1 = b;
      r2 = b;
      ref.axpy(n, -0.77f, a.data(), r1.data());
      k.axpy(n, -0.77f, a.data(), r2.data());
      CHECK(bitwise_equal(r1, r2));

      auto g = random_vec(rng, n);
      r1 = b;
      r2 = b;
      ref.relu_bwd(n, a.data(), g.data(), r1.data());
      k.relu_bwd(n, a.data(), g.data(), r2.data());
      CHECK(bitwise_equal(r1, r2));
    }
  }
}

TEST_CASE("reduction kernels agree bitwise across backends") {
  Rng rng(7);
  const Ops& ref = kernels::scalar_ops();
  for (Isa isa : backends_under_test()) {
    const Ops& k = kernels::table(isa);
    for (std::size_t n : kSizes) {
      auto a = random_vec(rng, n);
      auto b = random_vec(rng, n);
      CHECK(bitwise_equal(ref.sum(n, a.data()), k.sum(n, a.data())));
      CHECK(bitwise_equal(ref.dot(n, a.data(), b.data()),
                          k.dot(n, a.data(), b.data())));
    }
  }
}

TEST_CASE("sum and dot match double accumulation closely") {
  Rng rng(11);
  const Ops& k = kernels::ops();
  auto a = random_vec(rng, 4096);
  auto b = random_vec(rng, 4096);
  double s = 0.0, d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i];
    d += static_cast<double>(a[i]) * b[i];
  }
  CHECK(std::abs(k.sum(a.size(), a.data()) - s) < 1e-2);
  CHECK(std::abs(k.dot(a.size(), a.data(), b.data()) - d) < 1e-2);
}

namespace {

// independent dense evaluation of the 3x3 correlation in double
void conv3x3_oracle(int h, int w, const std::vector<float>& src, int ss,
                    const float taps[9], std::vector<double>& dst) {
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = 0.0;
      for (int ty = 0; ty < 3; ++ty)
        for (int tx = 0; tx < 3; ++tx)
          v += static_cast<double>(taps[ty * 3 + tx]) *
               src[static_cast<std::size_t>(y + ty) * ss + x + tx];
      dst[static_cast<std::size_t>(y) * w + x] += v;
    }
}

}  // namespace

TEST_CASE("conv3x3 kernels: backend equivalence and oracle agreement") {
  Rng rng(123);
  const Ops& ref = kernels::scalar_ops();
  const int shapes[][2] = {{1, 1}, {2, 5}, {3, 8}, {7, 7}, {8, 32}, {13, 19}, {32, 32}};
  for (auto [h, w] : shapes) {
    const int ss = w + 2;
    // 8 floats of slack past the padded plane, as the kernel contract requires
    auto src = random_vec(rng, static_cast<std::size_t>(h + 2) * ss + 8);
    float taps[9];
    for (auto& t : taps) t = rng.uniform(-1.0f, 1.0f);
    auto base = random_vec(rng, static_cast<std::size_t>(h) * w);

    auto d_ref = base;
    ref.conv3x3_accum(h, w, src.data(), ss, taps, d_ref.data());

    std::vector<double> d_oracle(base.begin(), base.end());
    conv3x3_oracle(h, w, src, ss, taps, d_oracle);
    for (std::size_t i = 0; i < d_ref.size(); ++i)
      CHECK(d_ref[i] == doctest::Approx(d_oracle[i]).epsilon(1e-5));

    float tg_ref[9] = {};
    auto g = random_vec(rng, static_cast<std::size_t>(h) * w);
    ref.conv3x3_taps(h, w, g.data(), src.data(), ss, tg_ref);

    for (Isa isa : backends_under_test()) {
      const Ops& k = kernels::table(isa);
      auto d_k = base;
      k.conv3x3_accum(h, w, src.data(), ss, taps, d_k.data());
      CHECK(bitwise_equal(d_ref, d_k));

      float tg_k[9] = {};
      k.conv3x3_taps(h, w, g.data(), src.data(), ss, tg_k);
      for (int t = 0; t < 9; ++t) CHECK(bitwise_equal(tg_ref[t], tg_k[t]));
    }

    // tap-gradient oracle: plain double reduction
    for (int t = 0; t < 9; ++t) {
      int ty = t / 3, tx = t % 3;
      double v = 0.0;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          v += static_cast<double>(g[static_cast<std::size_t>(y) * w + x]) *
               src[static_cast<std::size_t>(y + ty) * ss + x + tx];
      CHECK(tg_ref[t] == doctest::Approx(v).epsilon(1e-4));
    }
  }
}

TEST_CASE("identity taps leave the accumulator plus center row intact") {
  const Ops& k = kernels::ops();
  const int h = 4, w = 6, ss = w + 2;
  std::vector<float> src(static_cast<std::size_t>(h + 2) * ss + 8, 0.0f);
  Rng rng(5);
  for (auto& v : src) v = rng.uniform(-1.0f, 1.0f);
  float taps[9] = {0, 0, 0, 0, 1, 0, 0, 0, 0};
  std::vector<float> dst(static_cast<std::size_t>(h) * w, 0.0f);
  k.conv3x3_accum(h, w, src.data(), ss, taps, dst.data());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      CHECK(dst[static_cast<std::size_t>(y) * w + x] ==
            src[static_cast<std::size_t>(y + 1) * ss + x + 1]);
}

TEST_CASE("backend selection respects explicit requests") {
  CHECK(kernels::supported(Isa::scalar));
  kernels::select(Isa::scalar);
  CHECK(kernels::active_isa() == Isa::scalar);
  CHECK(std::string(kernels::ops().name) == "scalar");
  if (kernels::supported(Isa::avx2)) {
    kernels::select(Isa::avx2);
    CHECK(std::string(kernels::ops().name) == "avx2");
  }
  if (!kernels::supported(Isa::neon)) {
    CHECK_THROWS(kernels::select(Isa::neon));
  }
}
