#pragma once

#include "wavelab/operators.hpp"

namespace wavelab {

struct SolveStats {
    double cfl_ratio = 0.0;      // dt / dt_max
    double dt_max = 0.0;
    double max_abs = 0.0;
    double residual_norm = 0.0;  // sampled interior residual of the scheme
    bool truncation_certificate = false;
    double r_trunc = 0.0;
    double r_trunc_required = 0.0;
    double c_max = 0.0;
};

/// Forward solution restricted to D, with the boundary data the downstream
/// modules consume. Normal derivatives are one-sided from inside D on both
/// boundaries so measurement and inversion share one discretization.
struct ForwardSolution {
    SpaceTimeField u;
    SolveStats stats;
    BoundaryTimeField trace_gamma;   // u on Sigma (the injected data)
    BoundaryTimeField trace_gamma0;  // u on Sigma_0
    BoundaryTimeField dnu_gamma;     // d_{nu_g} u on Sigma
    BoundaryTimeField dnu_gamma0;    // d_{nu_g} u on Sigma_0
};

/// Explicit leapfrog solve of (d_t^2 - Delta_g) u = 0 with Dirichlet data f on
/// Gamma and zero initial data. The unbounded exterior is truncated at
/// |x| = r_trunc with homogeneous Dirichlet; r_trunc is certified from finite
/// propagation speed (R + c_max T / 2 + margin) unless exact outer data is
/// supplied via outer_dirichlet (used by manufactured-solution tests, imposed
/// at the truncation ring).
///
/// truncation_radius <= 0 selects the smallest certified radius. A positive
/// radius below the certified bound raises a certificate error naming the
/// required radius (unless outer data is supplied).
ForwardSolution solve_forward(const BoundaryTimeField& f, const MetricField& metric,
                              const AnnularMesh& mesh, const TimeGrid& tgrid,
                              double truncation_radius = 0.0, double cfl_safety = 0.7,
                              const BoundaryTimeField* outer_dirichlet = nullptr);

/// Discrete energy E(u)(t_k) = int_D (|u_t|^2 + |grad_g u|_g^2 + |u|^2) dV_g.
double energy(const DiscreteOperators& ops, const SpaceTimeField& u, int k);
double energy(const SpaceTimeField& u, const MetricField& metric, const AnnularMesh& mesh,
              int k);

/// Max over interior nodes and interior steps of |d_tt u - Delta_g u|.
double pde_residual(const SpaceTimeField& u, const MetricField& metric,
                    const AnnularMesh& mesh, const TimeGrid& tgrid);

}  // namespace wavelab
