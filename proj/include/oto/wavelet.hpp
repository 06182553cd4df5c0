#pragma once

#include <vector>

namespace oto {

// 2-D CDF 9/7 wavelet transform via lifting, in place, Mallat layout: after
// each level the low-pass square shrinks into the top-left corner. `size` is
// the side of the square array (row-major, size*size entries) and must be
// divisible by 2^levels with at least a 2x2 low-pass left over. Symmetric
// border extension; forward then inverse restores the input to roundoff.
void dwt2d_forward(std::vector<double>& a, int size, int levels);
void dwt2d_inverse(std::vector<double>& a, int size, int levels);

// Sum of squares over a rectangle, for subband inspection in tests.
double region_energy(const std::vector<double>& a, int size, int row0, int col0,
                     int rows, int cols);

}  // namespace oto
