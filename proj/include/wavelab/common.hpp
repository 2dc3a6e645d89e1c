#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace wavelab {

// Spatial dimension. All index algebra is written generically; switching to 3
// compiles unchanged, but meshing and the shipped experiments are 2-D.
inline constexpr int kDim = 2;

using Vec = std::array<double, kDim>;
using Mat = std::array<std::array<double, kDim>, kDim>;

struct EllipticityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ResolutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct StabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FeasibilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ClassViolationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline Mat mat_zero() {
    Mat m{};
    for (auto& row : m) row.fill(0.0);
    return m;
}

inline Mat mat_identity() {
    Mat m = mat_zero();
    for (int i = 0; i < kDim; ++i) m[i][i] = 1.0;
    return m;
}

// Determinant by LU with partial pivoting; generic in kDim.
inline double mat_det(const Mat& a) {
    Mat lu = a;
    double det = 1.0;
    for (int c = 0; c < kDim; ++c) {
        int p = c;
        for (int r = c + 1; r < kDim; ++r)
            if (std::abs(lu[r][c]) > std::abs(lu[p][c])) p = r;
        if (p != c) {
            std::swap(lu[p], lu[c]);
            det = -det;
        }
        if (lu[c][c] == 0.0) return 0.0;
        det *= lu[c][c];
        for (int r = c + 1; r < kDim; ++r) {
            const double f = lu[r][c] / lu[c][c];
            for (int k = c; k < kDim; ++k) lu[r][k] -= f * lu[c][k];
        }
    }
    return det;
}

// Inverse by Gauss-Jordan; throws on singular input.
inline Mat mat_inverse(const Mat& a) {
    Mat lu = a;
    Mat inv = mat_identity();
    for (int c = 0; c < kDim; ++c) {
        int p = c;
        for (int r = c + 1; r < kDim; ++r)
            if (std::abs(lu[r][c]) > std::abs(lu[p][c])) p = r;
        if (lu[p][c] == 0.0) throw EllipticityError("singular matrix in mat_inverse");
        if (p != c) {
            std::swap(lu[p], lu[c]);
            std::swap(inv[p], inv[c]);
        }
        const double piv = lu[c][c];
        for (int k = 0; k < kDim; ++k) {
            lu[c][k] /= piv;
            inv[c][k] /= piv;
        }
        for (int r = 0; r < kDim; ++r) {
            if (r == c) continue;
            const double f = lu[r][c];
            if (f == 0.0) continue;
            for (int k = 0; k < kDim; ++k) {
                lu[r][k] -= f * lu[c][k];
                inv[r][k] -= f * inv[c][k];
            }
        }
    }
    return inv;
}

// Smallest eigenvalue of the pencil (A, B) with B symmetric positive definite,
// by inverse-power iteration on B^{-1}A shifted; kDim is tiny so a direct
// approach via the symmetric eigenproblem of L^{-1} A L^{-T} is used, with L
// the Cholesky factor of B. For kDim == 2 the closed form is exact.
double smallest_generalized_eigenvalue(const Mat& a, const Mat& b);

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (int i = 0; i < kDim; ++i) s += a[i] * b[i];
    return s;
}

inline double sqr(double x) { return x * x; }

}  // namespace wavelab
