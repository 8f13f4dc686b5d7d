#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace acmet::detail {

// Evaluate a polynomial sum c[i] * x^i by Horner's rule.
inline double polyval(const std::vector<double>& coeffs, double x) {
    double acc = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 0;) {
        acc = acc * x + coeffs[i];
    }
    return acc;
}

// Coefficients of d/dx of the polynomial.
inline std::vector<double> polyder(const std::vector<double>& coeffs) {
    if (coeffs.size() <= 1) return {0.0};
    std::vector<double> d(coeffs.size() - 1);
    for (std::size_t i = 1; i < coeffs.size(); ++i) {
        d[i - 1] = static_cast<double>(i) * coeffs[i];
    }
    return d;
}

// Dense least squares via Householder QR. A is m x n, row-major, m >= n.
// Returns x minimizing ||A x - b||_2. Throws on rank deficiency.
inline std::vector<double> lstsq_qr(std::vector<double> a, std::vector<double> b,
                                    std::size_t m, std::size_t n) {
    if (m < n) throw std::invalid_argument("least squares: system is underdetermined");
    for (std::size_t k = 0; k < n; ++k) {
        double norm = 0.0;
        for (std::size_t i = k; i < m; ++i) norm = std::hypot(norm, a[i * n + k]);
        if (norm == 0.0) throw std::runtime_error("least squares: rank-deficient design matrix");
        if (a[k * n + k] > 0.0) norm = -norm;
        for (std::size_t i = k; i < m; ++i) a[i * n + k] /= norm;
        a[k * n + k] += 1.0;
        // apply reflector to remaining columns and to b
        for (std::size_t j = k + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = k; i < m; ++i) s += a[i * n + k] * a[i * n + j];
            s = -s / a[k * n + k];
            for (std::size_t i = k; i < m; ++i) a[i * n + j] += s * a[i * n + k];
        }
        double s = 0.0;
        for (std::size_t i = k; i < m; ++i) s += a[i * n + k] * b[i];
        s = -s / a[k * n + k];
        for (std::size_t i = k; i < m; ++i) b[i] += s * a[i * n + k];
        a[k * n + k] = norm;  // diagonal of R (sign-flipped), off-diagonals stay in place
    }
    std::vector<double> x(n);
    for (std::size_t k = n; k-- > 0;) {
        double s = b[k];
        for (std::size_t j = k + 1; j < n; ++j) s -= a[k * n + j] * x[j];
        const double diag = a[k * n + k];
        if (diag == 0.0) throw std::runtime_error("least squares: singular R");
        x[k] = s / diag;
    }
    return x;
}

// Least-squares polynomial fit of degree `degree` to (x, y), x already normalized
// by the caller if conditioning matters.
inline std::vector<double> polyfit(const std::vector<double>& x, const std::vector<double>& y,
                                   int degree) {
    if (degree < 0) throw std::invalid_argument("polyfit: negative degree");
    const std::size_t m = x.size();
    const std::size_t n = static_cast<std::size_t>(degree) + 1;
    if (y.size() != m) throw std::invalid_argument("polyfit: size mismatch");
    if (m < n) throw std::invalid_argument("polyfit: not enough points for requested degree");
    std::vector<double> design(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        double p = 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            design[i * n + j] = p;
            p *= x[i];
        }
    }
    return lstsq_qr(std::move(design), y, m, n);
}

// Deterministic pairwise sum (fixed reduction tree), stable under future
// parallel evaluation of the leaves.
inline double pairwise_sum(const double* v, std::size_t n) {
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = v[0];
        for (std::size_t i = 1; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

}  // namespace acmet::detail
