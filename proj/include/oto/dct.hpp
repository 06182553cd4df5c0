#pragma once

#include <array>

namespace oto {

// Orthonormal 8x8 type-II DCT, row-major blocks, double precision. Forward
// followed by inverse reproduces the input to roundoff; a constant block c
// maps to a single DC entry of 8c.
void dct8x8_forward(const std::array<double, 64>& in, std::array<double, 64>& out);
void dct8x8_inverse(const std::array<double, 64>& in, std::array<double, 64>& out);

}  // namespace oto
