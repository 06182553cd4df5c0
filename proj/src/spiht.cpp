#include "oto/spiht.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oto {

Bitstream::Bitstream(std::vector<std::uint8_t> bytes, std::size_t bits)
    : buf_(std::move(bytes)), bits_(bits) {
  if (bits_ > buf_.size() * 8)
    throw std::invalid_argument("Bitstream: bit count exceeds buffer");
}

void Bitstream::put(int bit) {
  if (bits_ % 8 == 0) buf_.push_back(0);
  if (bit) buf_.back() |= static_cast<std::uint8_t>(0x80u >> (bits_ % 8));
  ++bits_;
}

int Bitstream::get() {
  if (cursor_ >= bits_) throw std::out_of_range("Bitstream: read past end");
  const int bit = (buf_[cursor_ / 8] >> (7 - cursor_ % 8)) & 1;
  ++cursor_;
  return bit;
}

namespace {

struct BudgetDone {};

struct Pixel {
  int r, c;
  bool dead = false;
};

struct SetEntry {
  int r, c;
  bool type_b;  // false: all descendants, true: grandchildren onward
  bool dead = false;
};

// Quad tree over the pyramid: children of (r,c) are the 2x2 group at
// (2r,2c). Cells on the finest level have none, and neither does the
// even-even cell of each 2x2 group in the low-pass corner (side `ll`).
bool has_children(int r, int c, int size, int ll) {
  if (2 * r >= size || 2 * c >= size) return false;
  if (r < ll && c < ll && r % 2 == 0 && c % 2 == 0) return false;
  return true;
}

void check_geometry(std::size_t count, int size, int levels) {
  if (levels < 1 || size < 4 ||
      count != static_cast<std::size_t>(size) * size)
    throw std::invalid_argument("spiht: bad pyramid geometry");
  const int ll = size >> levels;
  if (ll < 2 || ll % 2 != 0 || ll << levels != size)
    throw std::invalid_argument("spiht: size does not support level count");
}

}  // namespace

SpihtStream spiht_encode(const std::vector<double>& coeffs, int size,
                         int levels, std::size_t budget_bits) {
  check_geometry(coeffs.size(), size, levels);
  if (budget_bits < 8)
    throw std::invalid_argument("spiht_encode: budget below header size");
  const int ll = size >> levels;
  auto idx = [size](int r, int c) {
    return static_cast<std::size_t>(r) * size + c;
  };
  auto mag = [&](int r, int c) { return std::fabs(coeffs[idx(r, c)]); };

  // max |coefficient| over strict descendants, and over grandchildren onward;
  // reverse row-major scan sees children before parents
  std::vector<double> dmax(coeffs.size(), 0.0), gmax(coeffs.size(), 0.0);
  for (int r = size - 1; r >= 0; --r)
    for (int c = size - 1; c >= 0; --c) {
      if (!has_children(r, c, size, ll)) continue;
      double dm = 0.0, gm = 0.0;
      for (int dr = 0; dr < 2; ++dr)
        for (int dc = 0; dc < 2; ++dc) {
          const int cr = 2 * r + dr, cc = 2 * c + dc;
          dm = std::max({dm, mag(cr, cc), dmax[idx(cr, cc)]});
          gm = std::max(gm, dmax[idx(cr, cc)]);
        }
      dmax[idx(r, c)] = dm;
      gmax[idx(r, c)] = gm;
    }

  double maxabs = 0.0;
  for (double v : coeffs) maxabs = std::max(maxabs, std::fabs(v));

  Bitstream bs;
  std::size_t written = 0;
  auto ebit = [&](int b) {
    if (written == budget_bits) throw BudgetDone{};
    bs.put(b);
    ++written;
  };

  int ntop = -1;
  if (maxabs >= 1.0)
    while (std::ldexp(1.0, ntop + 1) <= maxabs) ++ntop;
  if (ntop > 254) throw std::invalid_argument("spiht_encode: magnitude overflow");
  const int header = ntop < 0 ? 0xFF : ntop;
  for (int k = 7; k >= 0; --k) bs.put((header >> k) & 1);
  written = 8;
  if (ntop < 0) return {bs.bytes(), written};

  std::vector<Pixel> lip;
  std::vector<SetEntry> lis;
  std::vector<Pixel> lsp;
  for (int r = 0; r < ll; ++r)
    for (int c = 0; c < ll; ++c) {
      lip.push_back({r, c});
      if (has_children(r, c, size, ll)) lis.push_back({r, c, false});
    }

  try {
    for (int n = ntop; n >= 0; --n) {
      const double t = std::ldexp(1.0, n);
      const std::size_t lsp_start = lsp.size();

      for (std::size_t i = 0; i < lip.size(); ++i) {
        if (lip[i].dead) continue;
        const bool sig = mag(lip[i].r, lip[i].c) >= t;
        ebit(sig);
        if (sig) {
          ebit(coeffs[idx(lip[i].r, lip[i].c)] < 0.0);
          lsp.push_back({lip[i].r, lip[i].c});
          lip[i].dead = true;
        }
      }

      for (std::size_t i = 0; i < lis.size(); ++i) {  // grows during the loop
        if (lis[i].dead) continue;
        const int r = lis[i].r, c = lis[i].c;
        if (!lis[i].type_b) {
          const bool sig = dmax[idx(r, c)] >= t;
          ebit(sig);
          if (!sig) continue;
          bool grand = false;
          for (int dr = 0; dr < 2; ++dr)
            for (int dc = 0; dc < 2; ++dc) {
              const int cr = 2 * r + dr, cc = 2 * c + dc;
              const bool cs = mag(cr, cc) >= t;
              ebit(cs);
              if (cs) {
                ebit(coeffs[idx(cr, cc)] < 0.0);
                lsp.push_back({cr, cc});
              } else {
                lip.push_back({cr, cc});
              }
              grand |= has_children(cr, cc, size, ll);
            }
          if (grand) lis.push_back({r, c, true});
          lis[i].dead = true;
        } else {
          const bool sig = gmax[idx(r, c)] >= t;
          ebit(sig);
          if (!sig) continue;
          for (int dr = 0; dr < 2; ++dr)
            for (int dc = 0; dc < 2; ++dc)
              lis.push_back({2 * r + dr, 2 * c + dc, false});
          lis[i].dead = true;
        }
      }

      for (std::size_t i = 0; i < lsp_start; ++i) {
        const auto q = static_cast<long long>(mag(lsp[i].r, lsp[i].c) / t);
        ebit(static_cast<int>(q & 1));
      }
    }
  } catch (const BudgetDone&) {
  }
  return {bs.bytes(), written};
}

std::vector<double> spiht_decode(const SpihtStream& stream, int size,
                                 int levels) {
  check_geometry(static_cast<std::size_t>(size) * size, size, levels);
  if (stream.bits < 8)
    throw std::invalid_argument("spiht_decode: stream shorter than header");
  const int ll = size >> levels;
  auto idx = [size](int r, int c) {
    return static_cast<std::size_t>(r) * size + c;
  };

  Bitstream bs(stream.bytes, stream.bits);
  auto rbit = [&]() {
    if (bs.exhausted()) throw BudgetDone{};
    return bs.get();
  };

  int header = 0;
  for (int k = 0; k < 8; ++k) header = header << 1 | bs.get();

  std::vector<double> rec(static_cast<std::size_t>(size) * size, 0.0);
  if (header == 0xFF) return rec;
  const int ntop = header;

  std::vector<Pixel> lip;
  std::vector<SetEntry> lis;
  std::vector<Pixel> lsp;
  for (int r = 0; r < ll; ++r)
    for (int c = 0; c < ll; ++c) {
      lip.push_back({r, c});
      if (has_children(r, c, size, ll)) lis.push_back({r, c, false});
    }

  try {
    for (int n = ntop; n >= 0; --n) {
      const double t = std::ldexp(1.0, n);
      const std::size_t lsp_start = lsp.size();

      for (std::size_t i = 0; i < lip.size(); ++i) {
        if (lip[i].dead) continue;
        if (rbit()) {
          const double s = rbit() ? -1.0 : 1.0;
          rec[idx(lip[i].r, lip[i].c)] = s * 1.5 * t;
          lsp.push_back({lip[i].r, lip[i].c});
          lip[i].dead = true;
        }
      }

      for (std::size_t i = 0; i < lis.size(); ++i) {
        if (lis[i].dead) continue;
        const int r = lis[i].r, c = lis[i].c;
        if (!lis[i].type_b) {
          if (!rbit()) continue;
          bool grand = false;
          for (int dr = 0; dr < 2; ++dr)
            for (int dc = 0; dc < 2; ++dc) {
              const int cr = 2 * r + dr, cc = 2 * c + dc;
              if (rbit()) {
                const double s = rbit() ? -1.0 : 1.0;
                rec[idx(cr, cc)] = s * 1.5 * t;
                lsp.push_back({cr, cc});
              } else {
                lip.push_back({cr, cc});
              }
              grand |= has_children(cr, cc, size, ll);
            }
          if (grand) lis.push_back({r, c, true});
          lis[i].dead = true;
        } else {
          if (!rbit()) continue;
          for (int dr = 0; dr < 2; ++dr)
            for (int dc = 0; dc < 2; ++dc)
              lis.push_back({2 * r + dr, 2 * c + dc, false});
          lis[i].dead = true;
        }
      }

      for (std::size_t i = 0; i < lsp_start; ++i) {
        double& v = rec[idx(lsp[i].r, lsp[i].c)];
        const double step = (rbit() ? 0.5 : -0.5) * t;
        v += v < 0.0 ? -step : step;
      }
    }
  } catch (const BudgetDone&) {
  }
  return rec;
}

}  // namespace oto
