#include "wavelab/geometry.hpp"

#include <cmath>

namespace wavelab {

std::array<Mat, kDim> MetricField::derivatives(const Vec& x) const {
    if (deriv) return deriv(x);
    std::array<Mat, kDim> d{};
    for (int j = 0; j < kDim; ++j) {
        Vec xp = x, xm = x;
        xp[j] += h_g;
        xm[j] -= h_g;
        const Mat gp = eval(xp), gm = eval(xm);
        for (int k = 0; k < kDim; ++k)
            for (int l = 0; l < kDim; ++l) d[j][k][l] = (gp[k][l] - gm[k][l]) / (2.0 * h_g);
    }
    return d;
}

MetricValue metric_eval(const MetricField& metric, const Vec& x) {
    MetricValue mv;
    mv.g = metric.eval(x);
    mv.det = mat_det(mv.g);
    if (!(mv.det > 0.0)) {
        throw EllipticityError("metric not positive definite at x = (" + std::to_string(x[0]) +
                               ", " + std::to_string(x[kDim - 1]) + "): det = " +
                               std::to_string(mv.det));
    }
    // In 2-D a symmetric matrix with positive determinant and positive trace is SPD;
    // the Cholesky inside smallest_generalized_eigenvalue would also catch failures.
    if (mv.g[0][0] <= 0.0) {
        throw EllipticityError("metric not positive definite at x = (" + std::to_string(x[0]) +
                               ", " + std::to_string(x[kDim - 1]) + ")");
    }
    mv.g_inv = mat_inverse(mv.g);
    mv.sqrt_det = std::sqrt(mv.det);
    return mv;
}

ChristoffelValue christoffel_eval(const MetricField& metric, const Vec& x) {
    const MetricValue mv = metric_eval(metric, x);
    const auto dg = metric.derivatives(x);
    ChristoffelValue ch{};
    for (int m = 0; m < kDim; ++m) {
        for (int k = 0; k < kDim; ++k) {
            for (int l = 0; l <= k; ++l) {
                double s = 0.0;
                for (int j = 0; j < kDim; ++j)
                    s += mv.g_inv[j][m] * (dg[k][j][l] + dg[l][j][k] - dg[j][k][l]);
                const double v = 0.5 * s;
                ch.gamma[m][k][l] = v;
                ch.gamma[m][l][k] = v;
            }
        }
    }
    return ch;
}

namespace {

MetricField identity_metric() {
    MetricField m;
    m.eval = [](const Vec&) { return mat_identity(); };
    m.deriv = [](const Vec&) { return std::array<Mat, kDim>{}; };
    m.kappa = 1.0;
    m.name = "identity";
    return m;
}

MetricField scaled_metric(double c) {
    if (c <= 0.0) throw ConfigError("scaled metric requires c > 0");
    MetricField m;
    m.eval = [c](const Vec&) {
        Mat g = mat_zero();
        for (int i = 0; i < kDim; ++i) g[i][i] = c;
        return g;
    };
    m.deriv = [](const Vec&) { return std::array<Mat, kDim>{}; };
    m.kappa = c;
    m.name = "scaled";
    return m;
}

// g = e^{2 lambda} I from lambda and its analytic gradient.
MetricField conformal_metric(std::function<double(const Vec&)> lambda,
                             std::function<Vec(const Vec&)> grad_lambda, std::string name,
                             double kappa, double lip) {
    MetricField m;
    m.eval = [lambda](const Vec& x) {
        const double f = std::exp(2.0 * lambda(x));
        Mat g = mat_zero();
        for (int i = 0; i < kDim; ++i) g[i][i] = f;
        return g;
    };
    m.deriv = [lambda, grad_lambda](const Vec& x) {
        const double f = std::exp(2.0 * lambda(x));
        const Vec gl = grad_lambda(x);
        std::array<Mat, kDim> d{};
        for (int j = 0; j < kDim; ++j) {
            const double c = 2.0 * f * gl[j];
            for (int i = 0; i < kDim; ++i) d[j][i][i] = c;
        }
        return d;
    };
    m.kappa = kappa;
    m.lipschitz_budget = lip;
    m.name = std::move(name);
    return m;
}

MetricField bump_metric(double a, double x0, double y0, double w) {
    if (w <= 0.0) throw ConfigError("bump metric requires width > 0");
    if (a <= -1.0) throw ConfigError("bump metric requires amplitude > -1");
    MetricField m;
    const Vec c = {x0, y0};
    auto bump = [c, w](const Vec& x) {
        double r2 = 0.0;
        for (int i = 0; i < kDim; ++i) r2 += sqr((x[i] - c[i]) / w);
        if (r2 >= 1.0) return 0.0;
        const double q = 1.0 - r2;
        return q * q * q;
    };
    m.eval = [a, bump](const Vec& x) {
        const double f = 1.0 + a * bump(x);
        Mat g = mat_zero();
        for (int i = 0; i < kDim; ++i) g[i][i] = f;
        return g;
    };
    m.deriv = [a, c, w](const Vec& x) {
        std::array<Mat, kDim> d{};
        double r2 = 0.0;
        for (int i = 0; i < kDim; ++i) r2 += sqr((x[i] - c[i]) / w);
        if (r2 >= 1.0) return d;
        const double q = 1.0 - r2;
        for (int j = 0; j < kDim; ++j) {
            const double db = 3.0 * q * q * (-2.0 * (x[j] - c[j]) / (w * w));
            for (int i = 0; i < kDim; ++i) d[j][i][i] = a * db;
        }
        return d;
    };
    m.kappa = std::min(1.0, 1.0 + a);
    m.lipschitz_budget = std::abs(a) * 6.0 / w;
    m.name = "bump";
    return m;
}

void require_params(const std::vector<double>& p, std::size_t n, const std::string& name) {
    if (p.size() != n)
        throw ConfigError("metric '" + name + "' expects " + std::to_string(n) +
                          " parameters, got " + std::to_string(p.size()));
}

}  // namespace

MetricField make_metric(const std::string& name, const std::vector<double>& params) {
    if (name == "identity") {
        require_params(params, 0, name);
        return identity_metric();
    }
    if (name == "scaled") {
        require_params(params, 1, name);
        return scaled_metric(params[0]);
    }
    if (name == "conformal-poly") {
        require_params(params, 6, name);
        const auto p = params;
        auto lambda = [p](const Vec& x) {
            return p[0] + p[1] * x[0] + p[2] * x[1] + p[3] * x[0] * x[0] + p[4] * x[0] * x[1] +
                   p[5] * x[1] * x[1];
        };
        auto grad = [p](const Vec& x) {
            Vec g{};
            g[0] = p[1] + 2.0 * p[3] * x[0] + p[4] * x[1];
            g[1] = p[2] + p[4] * x[0] + 2.0 * p[5] * x[1];
            return g;
        };
        // kappa on a desk-scale box; callers working far outside |x| <= 4 should
        // supply their own bound.
        double lam_min = 0.0, lip = 0.0;
        for (double x = -4.0; x <= 4.0; x += 0.25) {
            for (double y = -4.0; y <= 4.0; y += 0.25) {
                const Vec q{x, y};
                lam_min = std::min(lam_min, lambda(q));
                const Vec gl = grad(q);
                lip = std::max(lip, 2.0 * std::exp(2.0 * lambda(q)) *
                                        std::sqrt(dot(gl, gl)));
            }
        }
        return conformal_metric(lambda, grad, "conformal-poly", std::exp(2.0 * lam_min), lip);
    }
    if (name == "conformal-trig") {
        require_params(params, 3, name);
        const double a = params[0], kx = params[1], ky = params[2];
        auto lambda = [a, kx, ky](const Vec& x) {
            return a * std::sin(kx * x[0]) * std::cos(ky * x[1]);
        };
        auto grad = [a, kx, ky](const Vec& x) {
            Vec g{};
            g[0] = a * kx * std::cos(kx * x[0]) * std::cos(ky * x[1]);
            g[1] = -a * ky * std::sin(kx * x[0]) * std::sin(ky * x[1]);
            return g;
        };
        return conformal_metric(lambda, grad, "conformal-trig", std::exp(-2.0 * std::abs(a)),
                                2.0 * std::exp(2.0 * std::abs(a)) * std::abs(a) *
                                    std::max(std::abs(kx), std::abs(ky)));
    }
    if (name == "bump") {
        require_params(params, 4, name);
        return bump_metric(params[0], params[1], params[2], params[3]);
    }
    throw ConfigError("unknown metric '" + name + "'");
}

Vec raise_index(const MetricValue& mv, const Vec& grad) {
    Vec out{};
    for (int l = 0; l < kDim; ++l) {
        double s = 0.0;
        for (int k = 0; k < kDim; ++k) s += mv.g_inv[l][k] * grad[k];
        out[l] = s;
    }
    return out;
}

double metric_grad_norm2(const MetricValue& mv, const Vec& grad) {
    double s = 0.0;
    for (int k = 0; k < kDim; ++k)
        for (int l = 0; l < kDim; ++l) s += mv.g_inv[k][l] * grad[k] * grad[l];
    return s;
}

Mat covariant_hessian(const ChristoffelValue& ch, const Mat& hess, const Vec& grad) {
    Mat out{};
    for (int k = 0; k < kDim; ++k) {
        for (int l = 0; l < kDim; ++l) {
            double s = hess[k][l];
            for (int m = 0; m < kDim; ++m) s -= ch.gamma[m][k][l] * grad[m];
            out[k][l] = s;
        }
    }
    return out;
}

double hessian_norm2(const MetricValue& mv, const Mat& cov_hess) {
    double s = 0.0;
    for (int k1 = 0; k1 < kDim; ++k1)
        for (int l1 = 0; l1 < kDim; ++l1)
            for (int k2 = 0; k2 < kDim; ++k2)
                for (int l2 = 0; l2 < kDim; ++l2)
                    s += mv.g_inv[k1][l1] * mv.g_inv[k2][l2] * cov_hess[k1][k2] *
                         cov_hess[l1][l2];
    return s;
}

double hessian_trace(const MetricValue& mv, const Mat& cov_hess) {
    double s = 0.0;
    for (int k = 0; k < kDim; ++k)
        for (int l = 0; l < kDim; ++l) s += mv.g_inv[k][l] * cov_hess[k][l];
    return s;
}

}  // namespace wavelab
