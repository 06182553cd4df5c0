#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace oto {

// MSB-first bit buffer with a separate read cursor.
class Bitstream {
 public:
  Bitstream() = default;
  Bitstream(std::vector<std::uint8_t> bytes, std::size_t bits);

  void put(int bit);
  int get();  // throws std::out_of_range past the last valid bit
  bool exhausted() const { return cursor_ >= bits_; }

  std::size_t bit_count() const { return bits_; }
  const std::vector<std::uint8_t>& bytes() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
  std::size_t bits_ = 0;
  std::size_t cursor_ = 0;
};

struct SpihtStream {
  std::vector<std::uint8_t> bytes;
  std::size_t bits = 0;  // valid bits in bytes, header included
};

// Set-partitioning coder over a square wavelet pyramid (side `size`,
// `levels` decompositions, Mallat layout). The stream starts with one byte
// holding the top bitplane index, 0xFF when every coefficient is below 1 in
// magnitude. At most budget_bits bits are written (the header counts);
// encoding stops early once all bitplanes are exhausted. budget_bits must be
// at least 8. Any prefix of at least 8 bits decodes to a coarser version of
// the same pyramid.
SpihtStream spiht_encode(const std::vector<double>& coeffs, int size,
                         int levels, std::size_t budget_bits);
std::vector<double> spiht_decode(const SpihtStream& stream, int size,
                                 int levels);

}  // namespace oto
