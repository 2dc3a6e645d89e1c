#include "wavelab/common.hpp"

#include <algorithm>

namespace wavelab {

namespace {

// Cholesky factor of a symmetric positive definite matrix.
Mat cholesky(const Mat& b) {
    Mat l = mat_zero();
    for (int i = 0; i < kDim; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = b[i][j];
            for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
            if (i == j) {
                if (s <= 0.0) throw EllipticityError("non-SPD matrix in cholesky");
                l[i][i] = std::sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    return l;
}

// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
std::array<double, kDim> symmetric_eigenvalues(Mat m) {
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < kDim; ++p)
            for (int q = p + 1; q < kDim; ++q) off += sqr(m[p][q]);
        if (off < 1e-30) break;
        for (int p = 0; p < kDim; ++p) {
            for (int q = p + 1; q < kDim; ++q) {
                if (std::abs(m[p][q]) < 1e-300) continue;
                const double theta = 0.5 * std::atan2(2.0 * m[p][q], m[q][q] - m[p][p]);
                const double c = std::cos(theta), s = std::sin(theta);
                for (int k = 0; k < kDim; ++k) {
                    const double mp = m[p][k], mq = m[q][k];
                    m[p][k] = c * mp - s * mq;
                    m[q][k] = s * mp + c * mq;
                }
                for (int k = 0; k < kDim; ++k) {
                    const double mp = m[k][p], mq = m[k][q];
                    m[k][p] = c * mp - s * mq;
                    m[k][q] = s * mp + c * mq;
                }
            }
        }
    }
    std::array<double, kDim> ev{};
    for (int i = 0; i < kDim; ++i) ev[i] = m[i][i];
    return ev;
}

}  // namespace

double smallest_generalized_eigenvalue(const Mat& a, const Mat& b) {
    const Mat l = cholesky(b);
    // M = L^{-1} A L^{-T}: forward-substitute twice.
    Mat t{};  // t = L^{-1} A
    for (int col = 0; col < kDim; ++col) {
        for (int i = 0; i < kDim; ++i) {
            double s = a[i][col];
            for (int k = 0; k < i; ++k) s -= l[i][k] * t[k][col];
            t[i][col] = s / l[i][i];
        }
    }
    Mat m{};  // m = t L^{-T}, i.e. m^T = L^{-1} t^T
    for (int row = 0; row < kDim; ++row) {
        for (int i = 0; i < kDim; ++i) {
            double s = t[row][i];
            for (int k = 0; k < i; ++k) s -= l[i][k] * m[row][k];
            m[row][i] = s / l[i][i];
        }
    }
    const auto ev = symmetric_eigenvalues(m);
    return *std::min_element(ev.begin(), ev.end());
}

}  // namespace wavelab
