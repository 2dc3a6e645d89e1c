#pragma once

#include <functional>
#include <string>
#include <vector>

#include "wavelab/common.hpp"

namespace wavelab {

/// Pointwise Riemannian metric with (optionally analytic) first derivatives.
/// deriv(x)[j] holds the matrix of partials d_j g_{kl}(x); when absent,
/// centered differences with step h_g are used.
struct MetricField {
    std::function<Mat(const Vec&)> eval;
    std::function<std::array<Mat, kDim>(const Vec&)> deriv;  // may be empty
    double kappa = 1.0;             // ellipticity lower bound
    double lipschitz_budget = 0.0;  // W^{1,inf} bound used by admissibility checks
    double h_g = 1e-5;              // finite-difference step for the fallback
    std::string name = "identity";

    std::array<Mat, kDim> derivatives(const Vec& x) const;
    bool has_analytic_deriv() const { return static_cast<bool>(deriv); }
};

/// g, its inverse, determinant and sqrt-determinant at one point.
struct MetricValue {
    Mat g;
    Mat g_inv;
    double det = 1.0;
    double sqrt_det = 1.0;
};

struct ChristoffelValue {
    // gamma[m][k][l], symmetric in (k, l) by construction.
    std::array<Mat, kDim> gamma;
};

MetricValue metric_eval(const MetricField& metric, const Vec& x);
ChristoffelValue christoffel_eval(const MetricField& metric, const Vec& x);

/// Metric registry. Known names:
///   identity
///   scaled c            -> g = c * I
///   conformal-poly c0 c1 c2 c3 c4 c5   -> g = e^{2 lambda} I,
///       lambda = c0 + c1 x + c2 y + c3 x^2 + c4 x y + c5 y^2
///   conformal-trig a kx ky             -> lambda = a sin(kx x) cos(ky y)
///   bump a x0 y0 w      -> g = (1 + a B(|x - x0|/w)) I, B = (1-rho^2)^3 cutoff
MetricField make_metric(const std::string& name, const std::vector<double>& params = {});

// Pointwise helpers shared by the weight and carleman modules.

/// Contravariant gradient components (nabla_g w)^l = g^{lk} d_k w.
Vec raise_index(const MetricValue& mv, const Vec& grad);

/// |nabla_g w|_g^2 = g^{kl} d_k w d_l w from the covariant gradient.
double metric_grad_norm2(const MetricValue& mv, const Vec& grad);

/// Covariant Hessian (nabla_g^2 w)_{kl} = d_k d_l w - Gamma^m_{kl} d_m w.
Mat covariant_hessian(const ChristoffelValue& ch, const Mat& hess, const Vec& grad);

/// Doubly contracted squared norm |nabla_g^2 w|_g^2.
double hessian_norm2(const MetricValue& mv, const Mat& cov_hess);

/// Trace g^{kl} (nabla_g^2 w)_{kl}; equals Delta_g w pointwise.
double hessian_trace(const MetricValue& mv, const Mat& cov_hess);

}  // namespace wavelab
