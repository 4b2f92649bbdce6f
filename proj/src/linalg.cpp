#include "tempofuse/linalg.hpp"

#include <cmath>

#include "tempofuse/common.hpp"

namespace tempofuse {

namespace {

void cholesky_substitute(const std::vector<double>& factor, std::vector<double>& x,
                         std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        double s = x[i];
        for (std::size_t k = 0; k < i; ++k) s -= factor[i * n + k] * x[k];
        x[i] = s / factor[i * n + i];
    }
    for (std::size_t ii = n; ii > 0; --ii) {
        const std::size_t i = ii - 1;
        double s = x[i];
        for (std::size_t k = i + 1; k < n; ++k) s -= factor[k * n + i] * x[k];
        x[i] = s / factor[i * n + i];
    }
}

}  // namespace

std::vector<double> cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n) {
    const std::vector<double> original = a;
    // lower-triangular factor computed in place
    for (std::size_t j = 0; j < n; ++j) {
        double d = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
        if (d <= 0.0 || !std::isfinite(d)) {
            throw NumericError("cholesky: matrix is not positive definite");
        }
        const double ljj = std::sqrt(d);
        a[j * n + j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / ljj;
        }
    }
    std::vector<double> x = b;
    cholesky_substitute(a, x, n);
    // iterative refinement with extended-precision residuals; ridge systems
    // near the regularization floor are stiff enough to need it
    for (int round = 0; round < 2; ++round) {
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) {
            long double acc = b[i];
            for (std::size_t k = 0; k < n; ++k) {
                acc -= static_cast<long double>(original[i * n + k]) * x[k];
            }
            r[i] = static_cast<double>(acc);
        }
        cholesky_substitute(a, r, n);
        for (std::size_t i = 0; i < n; ++i) x[i] += r[i];
    }
    return x;
}

std::vector<double> qr_least_squares(std::vector<double> a, std::vector<double> b, std::size_t m,
                                     std::size_t n, double rank_tol) {
    if (m < n) throw NumericError("qr_least_squares: system is underdetermined");
    // Householder triangularization applied to [A | b]
    for (std::size_t j = 0; j < n; ++j) {
        double norm = 0.0;
        for (std::size_t i = j; i < m; ++i) norm += a[i * n + j] * a[i * n + j];
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;
        const double alpha = a[j * n + j] >= 0.0 ? -norm : norm;
        std::vector<double> v(m - j, 0.0);
        v[0] = a[j * n + j] - alpha;
        for (std::size_t i = j + 1; i < m; ++i) v[i - j] = a[i * n + j];
        double vtv = 0.0;
        for (double x : v) vtv += x * x;
        if (vtv == 0.0) continue;
        a[j * n + j] = alpha;
        for (std::size_t i = j + 1; i < m; ++i) a[i * n + j] = 0.0;
        for (std::size_t col = j + 1; col < n; ++col) {
            double dot = 0.0;
            for (std::size_t i = j; i < m; ++i) dot += v[i - j] * a[i * n + col];
            const double f = 2.0 * dot / vtv;
            for (std::size_t i = j; i < m; ++i) a[i * n + col] -= f * v[i - j];
        }
        double dot = 0.0;
        for (std::size_t i = j; i < m; ++i) dot += v[i - j] * b[i];
        const double f = 2.0 * dot / vtv;
        for (std::size_t i = j; i < m; ++i) b[i] -= f * v[i - j];
    }
    double diag_max = 0.0;
    for (std::size_t j = 0; j < n; ++j) diag_max = std::max(diag_max, std::fabs(a[j * n + j]));
    std::vector<double> x(n, 0.0);
    for (std::size_t jj = n; jj > 0; --jj) {
        const std::size_t j = jj - 1;
        if (std::fabs(a[j * n + j]) <= rank_tol * diag_max) {
            x[j] = 0.0;  // rank-deficient column
            continue;
        }
        double s = b[j];
        for (std::size_t k = j + 1; k < n; ++k) s -= a[j * n + k] * x[k];
        x[j] = s / a[j * n + j];
    }
    return x;
}

}  // namespace tempofuse
