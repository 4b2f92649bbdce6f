#pragma once

#include <cstddef>
#include <vector>

namespace tempofuse {

// Solves the symmetric positive-definite system A x = b in place via
// Cholesky. A is row-major n x n. Throws NumericError if A is not PD.
std::vector<double> cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n);

// Least-squares solution of the dense m x n system A x ~ b (m >= n) by
// Householder QR. Rank-deficient columns (|R_jj| below tol relative to the
// largest diagonal) get a zero coefficient.
std::vector<double> qr_least_squares(std::vector<double> a, std::vector<double> b, std::size_t m,
                                     std::size_t n, double rank_tol = 1e-12);

}  // namespace tempofuse
