#pragma once

#include <complex>
#include <vector>

namespace torusforge::detail {

// In-place unnormalized DFT on an N^dim grid (row-major, last axis fastest).
// forward: sum_x f(x) e^{-i k x}; backward: sum_k c_k e^{+i k x}.
void dft(std::vector<std::complex<double>>& data, int dim, int points, bool forward);

// Smallest 2^a 3^b 5^c that is >= n.
int good_size(int n);

}  // namespace torusforge::detail
