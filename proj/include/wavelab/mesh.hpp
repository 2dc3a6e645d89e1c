#pragma once

#include <cstddef>
#include <vector>

#include "wavelab/geometry.hpp"

namespace wavelab {

enum class Boundary { Gamma, Gamma0 };

/// Polar-grid discretization of the annulus D = {r0 <= |x| <= R}. Nodes are
/// (r_i, theta_j) with i radial (i = 0 on Gamma, i = n_r - 1 on Gamma0) and j
/// angular (periodic). Flat index = i * n_theta + j.
struct AnnularMesh {
    double r0 = 1.0;
    double R = 2.0;
    int n_r = 64;
    int n_theta = 128;
    double h_r = 0.0;
    double h_theta = 0.0;
    std::vector<double> r;      // n_r radial coordinates
    std::vector<double> theta;  // n_theta angles
    std::vector<double> cos_t, sin_t;

    std::size_t n_nodes() const { return static_cast<std::size_t>(n_r) * n_theta; }
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * n_theta + j; }
    int wrap(int j) const { return (j % n_theta + n_theta) % n_theta; }
    Vec node(int i, int j) const { return {r[i] * cos_t[j], r[i] * sin_t[j]}; }
    int boundary_ring(Boundary b) const { return b == Boundary::Gamma ? 0 : n_r - 1; }
    double boundary_radius(Boundary b) const { return b == Boundary::Gamma ? r0 : R; }
};

AnnularMesh build_annulus_mesh(double r0, double R, int n_r, int n_theta);

struct TimeGrid {
    double T = 2.0;
    int n_t = 256;
    double dt = 0.0;

    double t(int k) const { return k * dt; }
    int n_times() const { return n_t + 1; }
};

TimeGrid build_time_grid(double T, int n_t);

/// Scalar field sampled at every mesh node.
using GridField = std::vector<double>;

/// Scalar field on D x [0, T]; slice k holds time t_k.
struct SpaceTimeField {
    AnnularMesh mesh;
    TimeGrid tgrid;
    std::vector<double> values;  // (n_t + 1) * n_nodes, time-major

    double& at(int k, std::size_t node) { return values[k * mesh.n_nodes() + node]; }
    double at(int k, std::size_t node) const { return values[k * mesh.n_nodes() + node]; }
    const double* slice(int k) const { return values.data() + k * mesh.n_nodes(); }
    double* slice(int k) { return values.data() + k * mesh.n_nodes(); }
};

SpaceTimeField make_space_time_field(const AnnularMesh& mesh, const TimeGrid& tgrid);

/// Scalar trace on one boundary circle over time; slice k holds time t_k.
struct BoundaryTimeField {
    int n_theta = 0;
    TimeGrid tgrid;
    std::vector<double> values;  // (n_t + 1) * n_theta, time-major

    double& at(int k, int j) { return values[static_cast<std::size_t>(k) * n_theta + j]; }
    double at(int k, int j) const { return values[static_cast<std::size_t>(k) * n_theta + j]; }
};

BoundaryTimeField make_boundary_time_field(int n_theta, const TimeGrid& tgrid);

/// Quadrature of field * sqrt|g| over D against dV_g (trapezoid in r,
/// periodic trapezoid in theta, polar Jacobian r).
double integrate_volume(const GridField& field, const MetricField& metric,
                        const AnnularMesh& mesh);

/// Quadrature of trace * sqrt|g| against Euclidean arc length (the paper's
/// dS_g convention, not the induced boundary measure).
double integrate_surface(const std::vector<double>& trace, const MetricField& metric,
                         const AnnularMesh& mesh, Boundary which);

/// Precomputed per-node quadrature weights for repeated integration.
struct QuadratureWeights {
    std::vector<double> volume;             // per node, includes sqrt|g| r and trapezoid
    std::vector<double> surface_gamma;      // per angular node on Gamma
    std::vector<double> surface_gamma0;     // per angular node on Gamma0
    const std::vector<double>& surface(Boundary b) const {
        return b == Boundary::Gamma ? surface_gamma : surface_gamma0;
    }
};

QuadratureWeights build_quadrature(const MetricField& metric, const AnnularMesh& mesh);

/// Trapezoid weight for time index k on [0, T] (dt/2 at the ends).
inline double time_weight(const TimeGrid& tg, int k) {
    return (k == 0 || k == tg.n_t) ? 0.5 * tg.dt : tg.dt;
}

enum class NormKind {
    L2Volume,
    H1Volume,
    H2Volume,
    L2BoundaryTime,
    H1BoundaryTime,
    L2TimeH1Gamma,  // || . ||_{L^2((0,tau); H^1(Gamma))}
};

/// Discrete Sobolev norms per the metric-weighted definitions. Volume kinds act
/// on a single time slice; boundary kinds act on a trace over time. For
/// L2TimeH1Gamma, tau limits the time integral (tau <= 0 means the full span).
double sobolev_norm(const GridField& field, NormKind kind, const MetricField& metric,
                    const AnnularMesh& mesh);
double sobolev_norm(const BoundaryTimeField& trace, NormKind kind, const MetricField& metric,
                    const AnnularMesh& mesh, Boundary which, double tau = -1.0);

/// Squared tangential-gradient coefficient 1/g(t,t) at each angular node of a
/// boundary circle: |nabla_tau w|_g^2 = (d_theta w)^2 / g(t,t).
std::vector<double> tangent_metric_inv(const MetricField& metric, const AnnularMesh& mesh,
                                       Boundary which);

}  // namespace wavelab
