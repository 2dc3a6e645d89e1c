#include "wavelab/mesh.hpp"

#include <cmath>
#include <numbers>

namespace wavelab {

// Implemented in operators.cpp so volume norms share the gradient/Hessian code
// path with the differential operators.
double volume_sobolev_norm(const GridField&, NormKind, const MetricField&, const AnnularMesh&);

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double radial_weight(const AnnularMesh& mesh, int i) {
    return (i == 0 || i == mesh.n_r - 1) ? 0.5 * mesh.h_r : mesh.h_r;
}

void check_trace_size(const std::vector<double>& trace, const AnnularMesh& mesh) {
    if (trace.size() != static_cast<std::size_t>(mesh.n_theta))
        throw GeometryError("boundary trace size does not match mesh n_theta");
}
}  // namespace

AnnularMesh build_annulus_mesh(double r0, double R, int n_r, int n_theta) {
    if (!(r0 > 0.0) || !(R > r0))
        throw GeometryError("annulus requires 0 < r0 < R (got r0 = " + std::to_string(r0) +
                            ", R = " + std::to_string(R) + ")");
    if (n_r < 16 || n_theta < 16)
        throw ResolutionError("annulus mesh requires n_r >= 16 and n_theta >= 16");
    AnnularMesh m;
    m.r0 = r0;
    m.R = R;
    m.n_r = n_r;
    m.n_theta = n_theta;
    m.h_r = (R - r0) / (n_r - 1);
    m.h_theta = kTwoPi / n_theta;
    m.r.resize(n_r);
    for (int i = 0; i < n_r; ++i) m.r[i] = r0 + i * m.h_r;
    m.r.front() = r0;
    m.r.back() = R;
    m.theta.resize(n_theta);
    m.cos_t.resize(n_theta);
    m.sin_t.resize(n_theta);
    for (int j = 0; j < n_theta; ++j) {
        m.theta[j] = j * m.h_theta;
        m.cos_t[j] = std::cos(m.theta[j]);
        m.sin_t[j] = std::sin(m.theta[j]);
    }
    return m;
}

TimeGrid build_time_grid(double T, int n_t) {
    if (!(T > 0.0) || n_t < 1) throw GeometryError("time grid requires T > 0 and n_t >= 1");
    TimeGrid tg;
    tg.T = T;
    tg.n_t = n_t;
    tg.dt = T / n_t;
    return tg;
}

SpaceTimeField make_space_time_field(const AnnularMesh& mesh, const TimeGrid& tgrid) {
    SpaceTimeField f;
    f.mesh = mesh;
    f.tgrid = tgrid;
    f.values.assign(static_cast<std::size_t>(tgrid.n_times()) * mesh.n_nodes(), 0.0);
    return f;
}

BoundaryTimeField make_boundary_time_field(int n_theta, const TimeGrid& tgrid) {
    BoundaryTimeField f;
    f.n_theta = n_theta;
    f.tgrid = tgrid;
    f.values.assign(static_cast<std::size_t>(tgrid.n_times()) * n_theta, 0.0);
    return f;
}

QuadratureWeights build_quadrature(const MetricField& metric, const AnnularMesh& mesh) {
    QuadratureWeights q;
    q.volume.resize(mesh.n_nodes());
    for (int i = 0; i < mesh.n_r; ++i) {
        const double wr = radial_weight(mesh, i);
        for (int j = 0; j < mesh.n_theta; ++j) {
            const MetricValue mv = metric_eval(metric, mesh.node(i, j));
            q.volume[mesh.idx(i, j)] = wr * mesh.h_theta * mesh.r[i] * mv.sqrt_det;
        }
    }
    q.surface_gamma.resize(mesh.n_theta);
    q.surface_gamma0.resize(mesh.n_theta);
    for (int j = 0; j < mesh.n_theta; ++j) {
        q.surface_gamma[j] =
            mesh.h_theta * mesh.r0 * metric_eval(metric, mesh.node(0, j)).sqrt_det;
        q.surface_gamma0[j] =
            mesh.h_theta * mesh.R * metric_eval(metric, mesh.node(mesh.n_r - 1, j)).sqrt_det;
    }
    return q;
}

double integrate_volume(const GridField& field, const MetricField& metric,
                        const AnnularMesh& mesh) {
    if (field.size() != mesh.n_nodes())
        throw GeometryError("field size does not match mesh node count");
    const QuadratureWeights q = build_quadrature(metric, mesh);
    double s = 0.0;
    for (std::size_t n = 0; n < field.size(); ++n) s += field[n] * q.volume[n];
    return s;
}

double integrate_surface(const std::vector<double>& trace, const MetricField& metric,
                         const AnnularMesh& mesh, Boundary which) {
    check_trace_size(trace, mesh);
    const QuadratureWeights q = build_quadrature(metric, mesh);
    const auto& w = q.surface(which);
    double s = 0.0;
    for (int j = 0; j < mesh.n_theta; ++j) s += trace[j] * w[j];
    return s;
}

std::vector<double> tangent_metric_inv(const MetricField& metric, const AnnularMesh& mesh,
                                       Boundary which) {
    const int i = mesh.boundary_ring(which);
    const double rb = mesh.boundary_radius(which);
    std::vector<double> out(mesh.n_theta);
    for (int j = 0; j < mesh.n_theta; ++j) {
        const Mat g = metric.eval(mesh.node(i, j));
        // Tangent vector t = dx/dtheta = rb * (-sin, cos).
        const Vec t = {-rb * mesh.sin_t[j], rb * mesh.cos_t[j]};
        double gtt = 0.0;
        for (int k = 0; k < kDim; ++k)
            for (int l = 0; l < kDim; ++l) gtt += g[k][l] * t[k] * t[l];
        out[j] = 1.0 / gtt;
    }
    return out;
}

namespace {

// d_theta by centered periodic differences along one boundary slice.
double dtheta(const BoundaryTimeField& f, int k, int j) {
    const int n = f.n_theta;
    const int jp = (j + 1) % n, jm = (j - 1 + n) % n;
    return (f.at(k, jp) - f.at(k, jm)) / (2.0 * kTwoPi / n);
}

// d_t by centered differences, second-order one-sided at the ends.
double dtime(const BoundaryTimeField& f, int k, int j) {
    const double dt = f.tgrid.dt;
    const int nt = f.tgrid.n_t;
    if (k == 0) return (-3.0 * f.at(0, j) + 4.0 * f.at(1, j) - f.at(2, j)) / (2.0 * dt);
    if (k == nt)
        return (3.0 * f.at(nt, j) - 4.0 * f.at(nt - 1, j) + f.at(nt - 2, j)) / (2.0 * dt);
    return (f.at(k + 1, j) - f.at(k - 1, j)) / (2.0 * dt);
}

}  // namespace

double sobolev_norm(const GridField& field, NormKind kind, const MetricField& metric,
                    const AnnularMesh& mesh) {
    if (kind != NormKind::L2Volume && kind != NormKind::H1Volume && kind != NormKind::H2Volume)
        throw GeometryError("grid-field sobolev_norm expects a volume norm kind");
    if (field.size() != mesh.n_nodes())
        throw GeometryError("field size does not match mesh node count");
    return volume_sobolev_norm(field, kind, metric, mesh);
}

double sobolev_norm(const BoundaryTimeField& trace, NormKind kind, const MetricField& metric,
                    const AnnularMesh& mesh, Boundary which, double tau) {
    if (trace.n_theta != mesh.n_theta)
        throw GeometryError("trace n_theta does not match mesh");
    const QuadratureWeights q = build_quadrature(metric, mesh);
    const auto& ws = q.surface(which);
    const auto tinv = tangent_metric_inv(metric, mesh, which);
    const TimeGrid& tg = trace.tgrid;
    const double t_end = (tau > 0.0) ? std::min(tau, tg.T) : tg.T;

    double acc = 0.0;
    for (int k = 0; k <= tg.n_t; ++k) {
        const double tk = tg.t(k);
        double wt;
        if (tau > 0.0) {
            // Trapezoid restricted to [0, t_end]; nodes beyond contribute 0.
            if (tk > t_end + 1e-12) break;
            const bool last = (tg.t(k + 1) > t_end + 1e-12) || k == tg.n_t;
            wt = (k == 0 || last) ? 0.5 * tg.dt : tg.dt;
        } else {
            wt = time_weight(tg, k);
        }
        double slice = 0.0;
        for (int j = 0; j < mesh.n_theta; ++j) {
            const double v = trace.at(k, j);
            double dens = 0.0;
            switch (kind) {
                case NormKind::L2BoundaryTime:
                    dens = v * v;
                    break;
                case NormKind::H1BoundaryTime: {
                    const double dt_v = dtime(trace, k, j);
                    const double dth = dtheta(trace, k, j);
                    dens = v * v + dt_v * dt_v + dth * dth * tinv[j];
                    break;
                }
                case NormKind::L2TimeH1Gamma: {
                    const double dth = dtheta(trace, k, j);
                    dens = v * v + dth * dth * tinv[j];
                    break;
                }
                default:
                    throw GeometryError("boundary sobolev_norm expects a boundary norm kind");
            }
            slice += dens * ws[j];
        }
        acc += wt * slice;
    }
    return std::sqrt(acc);
}

}  // namespace wavelab
