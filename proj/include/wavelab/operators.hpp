#pragma once

#include <vector>

#include "wavelab/mesh.hpp"

namespace wavelab {

/// Gradient and covariant Hessian of a grid field, with the metric norms.
struct GradientHessian {
    std::vector<Vec> grad_cov;     // Cartesian partials d_k w
    std::vector<Vec> grad_contra;  // (nabla_g w)^l = g^{lk} d_k w
    std::vector<Mat> hess_cov;     // covariant Hessian (nabla_g^2 w)_{kl}
    GridField grad_norm2;          // |nabla_g w|_g^2
    GridField hess_norm2;          // |nabla_g^2 w|_g^2
};

/// Normal/tangential splitting of the gradient on one boundary circle.
struct BoundaryDecomposition {
    std::vector<Vec> nu_g;          // contravariant unit metric normal (outward from D)
    std::vector<double> dnu;        // d_{nu_g} w
    std::vector<double> tau_norm2;  // |nabla_{tau_g} w|_g^2
    std::vector<double> grad_norm2;  // |nabla_g w|_g^2 on the boundary
};

/// Interior 9-point stencil of the divergence-form Laplace-Beltrami operator on
/// the polar grid. coeff is indexed by (i - 1) * n_theta + j for radial rings
/// i = 1 .. n_r - 2; the 9 entries follow offsets (di, dj), di outer loop.
struct LaplacianStencil {
    std::vector<std::array<double, 9>> coeff;
    static constexpr std::array<std::array<int, 2>, 9> offsets = {
        {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 0}, {0, 1}, {1, -1}, {1, 0}, {1, 1}}};
};

/// Precomputed geometry for one (metric, mesh) pair and the second-order
/// discrete operators built on it. Immutable after construction.
class DiscreteOperators {
public:
    DiscreteOperators(const MetricField& metric, const AnnularMesh& mesh);

    const AnnularMesh& mesh() const { return mesh_; }
    const MetricField& metric() const { return metric_; }
    const QuadratureWeights& quadrature() const { return quad_; }
    const MetricValue& metric_at(std::size_t node) const { return mv_[node]; }
    const ChristoffelValue& christoffel_at(std::size_t node) const { return ch_[node]; }
    const LaplacianStencil& stencil() const { return stencil_; }
    double wave_speed_max() const { return c_max_; }

    /// Divergence-form Delta_g at interior nodes; boundary rings are filled by
    /// the covariant-Hessian trace with one-sided radial differences.
    GridField laplace_beltrami(const GridField& field) const;

    /// Interior-only stencil application (rings i = 1 .. n_r - 2); boundary
    /// rings of the output are left at zero.
    void apply_stencil(const double* in, double* out) const;
    /// Transpose of apply_stencil, for discrete adjoints.
    void apply_stencil_transpose(const double* in, double* out) const;

    GradientHessian gradient_and_hessian(const GridField& field) const;
    BoundaryDecomposition boundary_decompose(const GridField& field, Boundary which) const;

    double integrate(const GridField& field) const;

    // Polar first/second derivatives (centered interior, second-order one-sided
    // in r at the boundary rings; theta periodic).
    void polar_derivatives(const GridField& f, GridField& fr, GridField& ft) const;
    void polar_second_derivatives(const GridField& f, const GridField& fr, GridField& frr,
                                  GridField& frt, GridField& ftt) const;

private:
    MetricField metric_;
    AnnularMesh mesh_;
    QuadratureWeights quad_;
    std::vector<MetricValue> mv_;
    std::vector<ChristoffelValue> ch_;
    LaplacianStencil stencil_;
    double c_max_ = 1.0;
};

/// First (order = 1) or second (order = 2) time derivative of a space-time
/// field, centered in the interior and second-order one-sided at t = 0, T.
SpaceTimeField time_derivative(const SpaceTimeField& f, int order);

}  // namespace wavelab
