#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "oto/codecs.hpp"
#include "oto/dct.hpp"
#include "oto/image.hpp"
#include "oto/jpeg_sim.hpp"
#include "oto/metrics.hpp"
#include "oto/rng.hpp"
#include "oto/spiht.hpp"
#include "oto/wavelet.hpp"
#include "spiht_reference.hpp"

using namespace oto;
using testutil::coeff_mse;
using testutil::mixed_corpus;
using testutil::reference_spiht_decode;
using testutil::tile_pyramid;

namespace {

// direct O(n^4) evaluation of the orthonormal cosine basis
void naive_dct(const std::array<double, 64>& in, std::array<double, 64>& out) {
  const double pi = std::acos(-1.0);
  for (int u = 0; u < 8; ++u)
    for (int v = 0; v < 8; ++v) {
      const double cu = u == 0 ? std::sqrt(1.0 / 8.0) : 0.5;
      const double cv = v == 0 ? std::sqrt(1.0 / 8.0) : 0.5;
      double acc = 0.0;
      for (int n = 0; n < 8; ++n)
        for (int m = 0; m < 8; ++m)
          acc += in[n * 8 + m] * std::cos((2 * n + 1) * u * pi / 16.0) *
                 std::cos((2 * m + 1) * v * pi / 16.0);
      out[u * 8 + v] = cu * cv * acc;
    }
}

std::array<double, 64> random_block(Rng& rng) {
  std::array<double, 64> b{};
  for (double& v : b) v = rng.uniform(-128.0, 127.0);
  return b;
}

}  // namespace

TEST_CASE("8x8 transform matches the direct cosine sum") {
  Rng rng(11);
  for (int trial = 0; trial < 4; ++trial) {
    const std::array<double, 64> block = random_block(rng);
    std::array<double, 64> fast{}, slow{};
    dct8x8_forward(block, fast);
    naive_dct(block, slow);
    for (int i = 0; i < 64; ++i) CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-12));
  }
}

TEST_CASE("8x8 transform round trips and concentrates constants into DC") {
  Rng rng(12);
  const std::array<double, 64> block = random_block(rng);
  std::array<double, 64> coef{}, back{};
  dct8x8_forward(block, coef);
  dct8x8_inverse(coef, back);
  for (int i = 0; i < 64; ++i) CHECK(back[i] == doctest::Approx(block[i]).epsilon(1e-12));

  std::array<double, 64> flat{};
  flat.fill(37.5);
  dct8x8_forward(flat, coef);
  CHECK(coef[0] == doctest::Approx(8.0 * 37.5).epsilon(1e-12));
  for (int i = 1; i < 64; ++i) CHECK(std::fabs(coef[i]) < 1e-9);
}

TEST_CASE("quantization table scaling follows the quality knob") {
  const std::array<int, 64> base = {
      16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
      14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
      18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
      49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99,
  };
  CHECK(luma_quant_table(50) == base);

  const std::array<int, 64> q10 = luma_quant_table(10);  // scale 500
  CHECK(q10[0] == 80);
  CHECK(q10[1] == 55);
  CHECK(q10[63] == 255);  // 495 clamped

  const std::array<int, 64> q90 = luma_quant_table(90);  // scale 20
  CHECK(q90[0] == 3);
  CHECK(q90[63] == 20);

  for (int v : luma_quant_table(100)) CHECK(v == 1);
  CHECK(luma_quant_table(0) == luma_quant_table(1));
  CHECK(luma_quant_table(101) == luma_quant_table(100));

  const std::array<int, 64> q40 = luma_quant_table(40), q75 = luma_quant_table(75);
  for (int i = 0; i < 64; ++i) {
    CHECK(q10[i] >= q40[i]);
    CHECK(q40[i] >= q75[i]);
  }
}

TEST_CASE("blockwise quantization round trip behaves at the extremes") {
  ImagePlane mid(16, 16);
  for (double& v : mid.data) v = 128.0;
  const ImagePlane out = jpeg_roundtrip(mid, 50);
  CHECK(mean_abs_diff(mid, out) == 0.0);

  ImagePlane flat(16, 16);
  for (double& v : flat.data) v = 77.0;
  const ImagePlane out2 = jpeg_roundtrip(flat, 50);
  for (double v : out2.data) CHECK(std::fabs(v - 77.0) <= 1.0);
}

TEST_CASE("non multiple of 8 sizes are mirrored, not cropped") {
  std::vector<ImagePlane> corpus = make_synthetic_corpus(SynthKind::texture, 1, 32, 3);
  ImagePlane odd(13, 21);
  for (int y = 0; y < 13; ++y)
    for (int x = 0; x < 21; ++x) odd.at(y, x) = corpus[0].at(y, x);
  const ImagePlane out = jpeg_roundtrip(odd, 30);
  CHECK(out.width == 21);
  CHECK(out.height == 13);
  for (double v : out.data) {
    CHECK(v >= 0.0);
    CHECK(v <= 255.0);
    CHECK(v == std::floor(v));
  }
  CHECK_THROWS(jpeg_roundtrip(ImagePlane(2, 40), 30));
}

TEST_CASE("lower quality means strictly worse fidelity") {
  std::vector<ImagePlane> corpus = mixed_corpus(2, 64, 21);
  double prev = 1e9;
  for (int q : {40, 30, 20, 10}) {
    double mean = 0.0;
    for (const ImagePlane& img : corpus)
      mean += display_db(psnr(img, jpeg_roundtrip(img, q)));
    mean /= static_cast<double>(corpus.size());
    CHECK(mean < prev);
    prev = mean;
  }
}

TEST_CASE("wavelet transform sends constants to the low-pass corner") {
  std::vector<double> a(32 * 32, 1.0);
  dwt2d_forward(a, 32, 4);
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 32; ++c) {
      const double v = a[r * 32 + c];
      if (r < 2 && c < 2)
        CHECK(v == doctest::Approx(16.0).epsilon(1e-12));
      else
        CHECK(std::fabs(v) < 1e-9);
    }
}

TEST_CASE("wavelet transform round trips") {
  Rng rng(5);
  std::vector<double> a(32 * 32);
  for (double& v : a) v = rng.uniform(-128.0, 127.0);
  const std::vector<double> orig = a;
  dwt2d_forward(a, 32, 4);
  dwt2d_inverse(a, 32, 4);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(a[i] == doctest::Approx(orig[i]).epsilon(1e-10));
}

TEST_CASE("detail orientation lands in the expected quadrant") {
  std::vector<double> stripes(16 * 16);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) stripes[r * 16 + c] = c % 2 == 0 ? 40.0 : -40.0;
  dwt2d_forward(stripes, 16, 1);
  const double across_x = region_energy(stripes, 16, 0, 8, 8, 8);
  const double across_y = region_energy(stripes, 16, 8, 0, 8, 8);
  CHECK(across_x > 100.0 * std::max(across_y, 1e-30));

  std::vector<double> bands(16 * 16);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) bands[r * 16 + c] = r % 2 == 0 ? 40.0 : -40.0;
  dwt2d_forward(bands, 16, 1);
  CHECK(region_energy(bands, 16, 8, 0, 8, 8) >
        100.0 * std::max(region_energy(bands, 16, 0, 8, 8, 8), 1e-30));
}

TEST_CASE("wavelet geometry validation") {
  std::vector<double> a(32 * 32, 0.0);
  CHECK_THROWS(dwt2d_forward(a, 32, 5));  // low-pass would fall below 2x2
  CHECK_THROWS(dwt2d_forward(a, 31, 1));  // not size*size
  std::vector<double> c(10 * 10, 0.0);
  CHECK_THROWS(dwt2d_forward(c, 10, 2));  // second level input is 5, odd
  std::vector<double> b(24 * 24, 0.0);
  dwt2d_forward(b, 24, 3);  // 24 -> 12 -> 6, all even: fine for the wavelet
  // but a 3x3 low-pass cannot be grouped into 2x2 roots
  CHECK_THROWS(spiht_encode(b, 24, 3, 4096));
}

TEST_CASE("coder reproduces a pyramid near-losslessly on a generous budget") {
  std::vector<ImagePlane> corpus = mixed_corpus(1, 32, 31);
  for (const ImagePlane& img : corpus) {
    std::vector<double> pyr = tile_pyramid(img, 0, 0);
    const SpihtStream st = spiht_encode(pyr, 32, 4, 1 << 18);
    CHECK(st.bits < (1u << 18));  // ran to completion, not to the budget
    std::vector<double> rec = spiht_decode(st, 32, 4);
    for (std::size_t i = 0; i < pyr.size(); ++i)
      CHECK(std::fabs(rec[i] - pyr[i]) < 1.0);

    dwt2d_inverse(rec, 32, 4);
    ImagePlane restored(32, 32);
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) restored.at(y, x) = rec[y * 32 + x] + 128.0;
    CHECK(display_db(psnr(img, restored)) > 50.0);
  }
}

TEST_CASE("decoder agrees with an independently written reference") {
  std::vector<ImagePlane> corpus = mixed_corpus(4, 64, 41);
  int tiles = 0;
  for (const ImagePlane& img : corpus) {
    if (tiles == 10) break;
    const int ty = (tiles % 2) * 32, tx = (tiles % 4 / 2) * 32;
    std::vector<double> pyr = tile_pyramid(img, ty, tx);
    for (std::size_t budget : {64u, 700u, 2048u, 1u << 18}) {
      const SpihtStream st = spiht_encode(pyr, 32, 4, budget);
      const std::vector<double> mine = spiht_decode(st, 32, 4);
      const std::vector<double> ref = reference_spiht_decode(st, 32, 4);
      bool same = true;
      for (std::size_t i = 0; i < mine.size(); ++i) same &= mine[i] == ref[i];
      CHECK(same);
    }
    ++tiles;
  }
  CHECK(tiles == 10);
}

TEST_CASE("every stream prefix decodes, never worse than a shorter one") {
  // noise fills every bitplane, so the stream is cut by the budget, not
  // by running out of content
  Rng rng(51);
  ImagePlane noisy(32, 32);
  for (double& v : noisy.data) v = std::floor(rng.uniform(0.0, 256.0));
  std::vector<double> pyr = tile_pyramid(noisy, 0, 0);
  const SpihtStream full = spiht_encode(pyr, 32, 4, 8192);
  REQUIRE(full.bits == 8192);

  double prev = 1e30;
  for (std::size_t bits : {64u, 128u, 256u, 512u, 1024u, 2048u, 4096u, 8192u}) {
    SpihtStream cut;
    cut.bits = bits;
    cut.bytes.assign(full.bytes.begin(), full.bytes.begin() + (bits + 7) / 8);
    const double m = coeff_mse(pyr, spiht_decode(cut, 32, 4));
    CHECK(m <= prev);
    prev = m;
  }

  // encoding straight to a smaller budget gives the identical prefix
  const SpihtStream direct = spiht_encode(pyr, 32, 4, 1024);
  CHECK(direct.bits == 1024);
  for (std::size_t i = 0; i < direct.bytes.size(); ++i)
    CHECK(direct.bytes[i] == full.bytes[i]);
}

TEST_CASE("an all-zero pyramid costs one header byte") {
  std::vector<double> pyr(32 * 32, 0.0);
  const SpihtStream st = spiht_encode(pyr, 32, 4, 4096);
  CHECK(st.bits == 8);
  CHECK(st.bytes.size() == 1);
  CHECK(st.bytes[0] == 0xFF);
  const std::vector<double> rec = spiht_decode(st, 32, 4);
  for (double v : rec) CHECK(v == 0.0);

  std::vector<double> tiny(32 * 32, 0.49);  // below the first bitplane
  CHECK(spiht_encode(tiny, 32, 4, 4096).bits == 8);
}

TEST_CASE("coder argument validation") {
  std::vector<double> pyr(32 * 32, 0.0);
  CHECK_THROWS(spiht_encode(pyr, 32, 4, 7));   // budget below header
  CHECK_THROWS(spiht_encode(pyr, 32, 5, 64));  // low-pass below 2x2
  CHECK_THROWS(spiht_encode(pyr, 16, 4, 64));  // wrong element count
  SpihtStream empty;
  empty.bits = 4;
  empty.bytes = {0};
  CHECK_THROWS(spiht_decode(empty, 32, 4));
}

TEST_CASE("tile budget follows the requested ratio with a floor") {
  CHECK(spiht_tile_budget(8.0) == 1024);
  CHECK(spiht_tile_budget(16.0) == 512);
  CHECK(spiht_tile_budget(64.0) == 128);
  CHECK(spiht_tile_budget(1e6) == 16);
  CHECK_THROWS(spiht_tile_budget(0.0));
}

TEST_CASE("image round trip tiles the plane and reports the spent bits") {
  std::vector<ImagePlane> corpus = make_synthetic_corpus(SynthKind::checker, 1, 64, 61);
  const SpihtImageResult res = spiht_roundtrip_image(corpus[0], 16.0);
  CHECK(res.tiles.size() == 4);
  CHECK(res.total_bits <= 4 * spiht_tile_budget(16.0));
  CHECK(res.total_bits > 0);
  CHECK(res.bits_per_pixel == doctest::Approx(res.total_bits / 4096.0));
  CHECK(res.restored.width == 64);
  CHECK(res.restored.height == 64);
  for (double v : res.restored.data) CHECK(v == std::floor(v));

  CHECK_THROWS(spiht_roundtrip_image(ImagePlane(48, 48), 16.0));
}

TEST_CASE("higher ratio means strictly higher distortion") {
  std::vector<ImagePlane> corpus = mixed_corpus(2, 64, 71);
  double prev = -1.0;
  for (double ratio : {8.0, 16.0, 32.0, 64.0}) {
    double mean = 0.0;
    for (const ImagePlane& img : corpus)
      mean += mse(img, spiht_roundtrip_image(img, ratio).restored);
    mean /= static_cast<double>(corpus.size());
    CHECK(mean > prev);
    prev = mean;
  }
}

TEST_CASE("degrade dispatch") {
  std::vector<ImagePlane> corpus = make_synthetic_corpus(SynthKind::texture, 1, 64, 81);
  const ImagePlane j = degrade_plane(corpus[0], "jpeg", 10);
  const ImagePlane s = degrade_plane(corpus[0], "spiht", 32);
  CHECK(mean_abs_diff(corpus[0], j) > 0.0);
  CHECK(mean_abs_diff(corpus[0], s) > 0.0);
  CHECK(mean_abs_diff(j, s) > 0.0);
  CHECK_THROWS(degrade_plane(corpus[0], "webp", 10));
}

TEST_CASE("streams are deterministic") {
  std::vector<ImagePlane> corpus = make_synthetic_corpus(SynthKind::texture, 1, 32, 91);
  std::vector<double> pyr = tile_pyramid(corpus[0], 0, 0);
  const SpihtStream a = spiht_encode(pyr, 32, 4, 2048);
  const SpihtStream b = spiht_encode(pyr, 32, 4, 2048);
  CHECK(a.bits == b.bits);
  CHECK(a.bytes == b.bytes);
}
