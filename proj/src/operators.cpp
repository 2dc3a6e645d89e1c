#include "wavelab/operators.hpp"

#include <cmath>

namespace wavelab {

namespace {

// Pulled-back metric quantities at an arbitrary polar point: G = J^T g J with
// J the Jacobian of (r, theta) -> (x, y). Returns sqrt(det G) * G^{-1}.
struct PulledBack {
    Mat weighted_inv;  // sqrt|G| * G^{-1}
};

PulledBack pullback(const MetricField& metric, double r, double ct, double st) {
    const Vec x = {r * ct, r * st};
    const Mat g = metric.eval(x);
    Mat J{};
    J[0][0] = ct;
    J[0][1] = -r * st;
    J[1][0] = st;
    J[1][1] = r * ct;
    Mat G = mat_zero();
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) G[a][b] += J[k][a] * g[k][l] * J[l][b];
    const double sdetG = r * std::sqrt(mat_det(g));
    Mat Ginv = mat_inverse(G);
    PulledBack pb;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) pb.weighted_inv[a][b] = sdetG * Ginv[a][b];
    return pb;
}

}  // namespace

DiscreteOperators::DiscreteOperators(const MetricField& metric, const AnnularMesh& mesh)
    : metric_(metric), mesh_(mesh) {
    quad_ = build_quadrature(metric_, mesh_);
    mv_.reserve(mesh_.n_nodes());
    ch_.reserve(mesh_.n_nodes());
    c_max_ = 0.0;
    for (int i = 0; i < mesh_.n_r; ++i) {
        for (int j = 0; j < mesh_.n_theta; ++j) {
            const Vec x = mesh_.node(i, j);
            mv_.push_back(metric_eval(metric_, x));
            ch_.push_back(christoffel_eval(metric_, x));
            const double lam_min = smallest_generalized_eigenvalue(mv_.back().g, mat_identity());
            c_max_ = std::max(c_max_, 1.0 / std::sqrt(lam_min));
        }
    }

    // Flux-form interior stencil.
    const int nt = mesh_.n_theta;
    const double hr = mesh_.h_r, ht = mesh_.h_theta;
    stencil_.coeff.assign(static_cast<std::size_t>(mesh_.n_r - 2) * nt, {});
    for (int i = 1; i < mesh_.n_r - 1; ++i) {
        for (int j = 0; j < nt; ++j) {
            const double ct = mesh_.cos_t[j], st = mesh_.sin_t[j];
            const double cth = std::cos(mesh_.theta[j] + 0.5 * ht);
            const double sth = std::sin(mesh_.theta[j] + 0.5 * ht);
            const double ctl = std::cos(mesh_.theta[j] - 0.5 * ht);
            const double stl = std::sin(mesh_.theta[j] - 0.5 * ht);
            const PulledBack rp = pullback(metric_, mesh_.r[i] + 0.5 * hr, ct, st);
            const PulledBack rm = pullback(metric_, mesh_.r[i] - 0.5 * hr, ct, st);
            const PulledBack tp = pullback(metric_, mesh_.r[i], cth, sth);
            const PulledBack tm = pullback(metric_, mesh_.r[i], ctl, stl);
            const double Ap = rp.weighted_inv[0][0], Am = rm.weighted_inv[0][0];
            const double Bp = rp.weighted_inv[0][1], Bm = rm.weighted_inv[0][1];
            const double Cp = tp.weighted_inv[1][1], Cm = tm.weighted_inv[1][1];
            const double Dp = tp.weighted_inv[1][0], Dm = tm.weighted_inv[1][0];
            const double inv_v = 1.0 / (mesh_.r[i] * mv_[mesh_.idx(i, j)].sqrt_det);
            const double cr = 1.0 / (hr * hr), ca = 1.0 / (ht * ht);
            const double cx = 1.0 / (4.0 * hr * ht);

            auto& c = stencil_.coeff[static_cast<std::size_t>(i - 1) * nt + j];
            // offsets order: (-1,-1) (-1,0) (-1,1) (0,-1) (0,0) (0,1) (1,-1) (1,0) (1,1)
            c[0] = (Bm + Dm) * cx;
            c[1] = Am * cr + (Dm - Dp) * cx;
            c[2] = -(Bm + Dp) * cx;
            c[3] = Cm * ca + (Bm - Bp) * cx;
            c[4] = -(Ap + Am) * cr - (Cp + Cm) * ca;
            c[5] = Cp * ca + (Bp - Bm) * cx;
            c[6] = -(Bp + Dm) * cx;
            c[7] = Ap * cr + (Dp - Dm) * cx;
            c[8] = (Bp + Dp) * cx;
            for (auto& v : c) v *= inv_v;
        }
    }
}

void DiscreteOperators::apply_stencil(const double* in, double* out) const {
    const int nt = mesh_.n_theta;
    for (int j = 0; j < nt; ++j) {
        out[mesh_.idx(0, j)] = 0.0;
        out[mesh_.idx(mesh_.n_r - 1, j)] = 0.0;
    }
    for (int i = 1; i < mesh_.n_r - 1; ++i) {
        for (int j = 0; j < nt; ++j) {
            const auto& c = stencil_.coeff[static_cast<std::size_t>(i - 1) * nt + j];
            double s = 0.0;
            for (int k = 0; k < 9; ++k) {
                const auto& off = LaplacianStencil::offsets[k];
                s += c[k] * in[mesh_.idx(i + off[0], mesh_.wrap(j + off[1]))];
            }
            out[mesh_.idx(i, j)] = s;
        }
    }
}

void DiscreteOperators::apply_stencil_transpose(const double* in, double* out) const {
    const int nt = mesh_.n_theta;
    for (std::size_t n = 0; n < mesh_.n_nodes(); ++n) out[n] = 0.0;
    for (int i = 1; i < mesh_.n_r - 1; ++i) {
        for (int j = 0; j < nt; ++j) {
            const double v = in[mesh_.idx(i, j)];
            if (v == 0.0) continue;
            const auto& c = stencil_.coeff[static_cast<std::size_t>(i - 1) * nt + j];
            for (int k = 0; k < 9; ++k) {
                const auto& off = LaplacianStencil::offsets[k];
                out[mesh_.idx(i + off[0], mesh_.wrap(j + off[1]))] += c[k] * v;
            }
        }
    }
}

void DiscreteOperators::polar_derivatives(const GridField& f, GridField& fr,
                                          GridField& ft) const {
    const int nr = mesh_.n_r, nt = mesh_.n_theta;
    const double hr = mesh_.h_r, ht = mesh_.h_theta;
    fr.assign(mesh_.n_nodes(), 0.0);
    ft.assign(mesh_.n_nodes(), 0.0);
    for (int i = 0; i < nr; ++i) {
        for (int j = 0; j < nt; ++j) {
            const std::size_t n = mesh_.idx(i, j);
            if (i == 0)
                fr[n] = (-3.0 * f[mesh_.idx(0, j)] + 4.0 * f[mesh_.idx(1, j)] -
                         f[mesh_.idx(2, j)]) /
                        (2.0 * hr);
            else if (i == nr - 1)
                fr[n] = (3.0 * f[mesh_.idx(nr - 1, j)] - 4.0 * f[mesh_.idx(nr - 2, j)] +
                         f[mesh_.idx(nr - 3, j)]) /
                        (2.0 * hr);
            else
                fr[n] = (f[mesh_.idx(i + 1, j)] - f[mesh_.idx(i - 1, j)]) / (2.0 * hr);
            ft[n] = (f[mesh_.idx(i, mesh_.wrap(j + 1))] - f[mesh_.idx(i, mesh_.wrap(j - 1))]) /
                    (2.0 * ht);
        }
    }
}

void DiscreteOperators::polar_second_derivatives(const GridField& f, const GridField& fr,
                                                 GridField& frr, GridField& frt,
                                                 GridField& ftt) const {
    const int nr = mesh_.n_r, nt = mesh_.n_theta;
    const double hr = mesh_.h_r, ht = mesh_.h_theta;
    frr.assign(mesh_.n_nodes(), 0.0);
    frt.assign(mesh_.n_nodes(), 0.0);
    ftt.assign(mesh_.n_nodes(), 0.0);
    for (int i = 0; i < nr; ++i) {
        for (int j = 0; j < nt; ++j) {
            const std::size_t n = mesh_.idx(i, j);
            if (i == 0)
                frr[n] = (2.0 * f[mesh_.idx(0, j)] - 5.0 * f[mesh_.idx(1, j)] +
                          4.0 * f[mesh_.idx(2, j)] - f[mesh_.idx(3, j)]) /
                         (hr * hr);
            else if (i == nr - 1)
                frr[n] = (2.0 * f[mesh_.idx(nr - 1, j)] - 5.0 * f[mesh_.idx(nr - 2, j)] +
                          4.0 * f[mesh_.idx(nr - 3, j)] - f[mesh_.idx(nr - 4, j)]) /
                         (hr * hr);
            else
                frr[n] = (f[mesh_.idx(i + 1, j)] - 2.0 * f[n] + f[mesh_.idx(i - 1, j)]) /
                         (hr * hr);
            frt[n] = (fr[mesh_.idx(i, mesh_.wrap(j + 1))] - fr[mesh_.idx(i, mesh_.wrap(j - 1))]) /
                     (2.0 * ht);
            ftt[n] = (f[mesh_.idx(i, mesh_.wrap(j + 1))] - 2.0 * f[n] +
                      f[mesh_.idx(i, mesh_.wrap(j - 1))]) /
                     (ht * ht);
        }
    }
}

GradientHessian DiscreteOperators::gradient_and_hessian(const GridField& field) const {
    if (field.size() != mesh_.n_nodes())
        throw GeometryError("gradient_and_hessian: field size mismatch");
    GridField fr, ft, frr, frt, ftt;
    polar_derivatives(field, fr, ft);
    polar_second_derivatives(field, fr, frr, frt, ftt);

    GradientHessian out;
    const std::size_t nn = mesh_.n_nodes();
    out.grad_cov.resize(nn);
    out.grad_contra.resize(nn);
    out.hess_cov.resize(nn);
    out.grad_norm2.resize(nn);
    out.hess_norm2.resize(nn);

    for (int i = 0; i < mesh_.n_r; ++i) {
        const double r = mesh_.r[i];
        for (int j = 0; j < mesh_.n_theta; ++j) {
            const std::size_t n = mesh_.idx(i, j);
            const double c = mesh_.cos_t[j], s = mesh_.sin_t[j];
            const double ur = fr[n], ut = ft[n];
            const double urr = frr[n], urt = frt[n], utt = ftt[n];

            Vec grad;
            grad[0] = c * ur - s / r * ut;
            grad[1] = s * ur + c / r * ut;

            Mat hess;
            hess[0][0] = c * c * urr - 2.0 * c * s / r * urt + s * s / (r * r) * utt +
                         s * s / r * ur + 2.0 * c * s / (r * r) * ut;
            hess[1][1] = s * s * urr + 2.0 * c * s / r * urt + c * c / (r * r) * utt +
                         c * c / r * ur - 2.0 * c * s / (r * r) * ut;
            hess[0][1] = c * s * urr + (c * c - s * s) / r * urt - c * s / (r * r) * utt -
                         c * s / r * ur - (c * c - s * s) / (r * r) * ut;
            hess[1][0] = hess[0][1];

            const MetricValue& mv = mv_[n];
            out.grad_cov[n] = grad;
            out.grad_contra[n] = raise_index(mv, grad);
            out.hess_cov[n] = covariant_hessian(ch_[n], hess, grad);
            out.grad_norm2[n] = metric_grad_norm2(mv, grad);
            out.hess_norm2[n] = hessian_norm2(mv, out.hess_cov[n]);
        }
    }
    return out;
}

GridField DiscreteOperators::laplace_beltrami(const GridField& field) const {
    if (field.size() != mesh_.n_nodes())
        throw GeometryError("laplace_beltrami: field size mismatch (missing boundary values?)");
    GridField out(mesh_.n_nodes(), 0.0);
    apply_stencil(field.data(), out.data());

    // Boundary rings: trace of the covariant Hessian with one-sided radial
    // differences (the two discretizations agree to O(h^2) in the interior).
    GridField fr, ft, frr, frt, ftt;
    polar_derivatives(field, fr, ft);
    polar_second_derivatives(field, fr, frr, frt, ftt);
    for (const int i : {0, mesh_.n_r - 1}) {
        const double r = mesh_.r[i];
        for (int j = 0; j < mesh_.n_theta; ++j) {
            const std::size_t n = mesh_.idx(i, j);
            const double c = mesh_.cos_t[j], s = mesh_.sin_t[j];
            const double ur = fr[n], ut = ft[n];
            const double urr = frr[n], urt = frt[n], utt = ftt[n];
            Vec grad;
            grad[0] = c * ur - s / r * ut;
            grad[1] = s * ur + c / r * ut;
            Mat hess;
            hess[0][0] = c * c * urr - 2.0 * c * s / r * urt + s * s / (r * r) * utt +
                         s * s / r * ur + 2.0 * c * s / (r * r) * ut;
            hess[1][1] = s * s * urr + 2.0 * c * s / r * urt + c * c / (r * r) * utt +
                         c * c / r * ur - 2.0 * c * s / (r * r) * ut;
            hess[0][1] = c * s * urr + (c * c - s * s) / r * urt - c * s / (r * r) * utt -
                         c * s / r * ur - (c * c - s * s) / (r * r) * ut;
            hess[1][0] = hess[0][1];
            const Mat cov = covariant_hessian(ch_[n], hess, grad);
            out[n] = hessian_trace(mv_[n], cov);
        }
    }
    return out;
}

BoundaryDecomposition DiscreteOperators::boundary_decompose(const GridField& field,
                                                            Boundary which) const {
    const GradientHessian gh = gradient_and_hessian(field);
    const int i = mesh_.boundary_ring(which);
    const double sign = (which == Boundary::Gamma) ? -1.0 : 1.0;  // outward from D

    BoundaryDecomposition out;
    out.nu_g.resize(mesh_.n_theta);
    out.dnu.resize(mesh_.n_theta);
    out.tau_norm2.resize(mesh_.n_theta);
    out.grad_norm2.resize(mesh_.n_theta);
    // Tangential part from the intrinsic derivative of the trace, so the
    // splitting identity |grad|^2 = |tau|^2 + |dnu|^2 is a genuine cross-check.
    const auto tinv = tangent_metric_inv(metric_, mesh_, which);
    for (int j = 0; j < mesh_.n_theta; ++j) {
        const std::size_t n = mesh_.idx(i, j);
        const MetricValue& mv = mv_[n];
        Vec nu;  // Euclidean unit outer normal (covector components)
        nu[0] = sign * mesh_.cos_t[j];
        nu[1] = sign * mesh_.sin_t[j];
        const double nrm = std::sqrt(metric_grad_norm2(mv, nu));  // sqrt(g^{ij} nu_i nu_j)
        const Vec nu_up = raise_index(mv, nu);
        Vec nu_g;
        for (int k = 0; k < kDim; ++k) nu_g[k] = nu_up[k] / nrm;
        double dn = 0.0;
        for (int k = 0; k < kDim; ++k) dn += nu[k] * gh.grad_contra[n][k];
        dn /= nrm;
        out.nu_g[j] = nu_g;
        out.dnu[j] = dn;
        out.grad_norm2[j] = gh.grad_norm2[n];
        const double dth = (field[mesh_.idx(i, mesh_.wrap(j + 1))] -
                            field[mesh_.idx(i, mesh_.wrap(j - 1))]) /
                           (2.0 * mesh_.h_theta);
        out.tau_norm2[j] = dth * dth * tinv[j];
    }
    return out;
}

double DiscreteOperators::integrate(const GridField& field) const {
    double s = 0.0;
    for (std::size_t n = 0; n < field.size(); ++n) s += field[n] * quad_.volume[n];
    return s;
}

double volume_sobolev_norm(const GridField& field, NormKind kind, const MetricField& metric,
                           const AnnularMesh& mesh) {
    const DiscreteOperators ops(metric, mesh);
    GridField dens(mesh.n_nodes());
    if (kind == NormKind::L2Volume) {
        for (std::size_t n = 0; n < dens.size(); ++n) dens[n] = sqr(field[n]);
    } else {
        const GradientHessian gh = ops.gradient_and_hessian(field);
        for (std::size_t n = 0; n < dens.size(); ++n) {
            dens[n] = sqr(field[n]) + gh.grad_norm2[n];
            if (kind == NormKind::H2Volume) dens[n] += gh.hess_norm2[n];
        }
    }
    return std::sqrt(ops.integrate(dens));
}

SpaceTimeField time_derivative(const SpaceTimeField& f, int order) {
    if (order != 1 && order != 2) throw GeometryError("time_derivative: order must be 1 or 2");
    const int nt = f.tgrid.n_t;
    if (nt < 3) throw GeometryError("time_derivative needs at least 4 time levels");
    const double dt = f.tgrid.dt;
    SpaceTimeField out = make_space_time_field(f.mesh, f.tgrid);
    const std::size_t nn = f.mesh.n_nodes();
    for (std::size_t n = 0; n < nn; ++n) {
        if (order == 1) {
            out.at(0, n) = (-3.0 * f.at(0, n) + 4.0 * f.at(1, n) - f.at(2, n)) / (2.0 * dt);
            out.at(nt, n) =
                (3.0 * f.at(nt, n) - 4.0 * f.at(nt - 1, n) + f.at(nt - 2, n)) / (2.0 * dt);
            for (int k = 1; k < nt; ++k)
                out.at(k, n) = (f.at(k + 1, n) - f.at(k - 1, n)) / (2.0 * dt);
        } else {
            out.at(0, n) = (2.0 * f.at(0, n) - 5.0 * f.at(1, n) + 4.0 * f.at(2, n) -
                            f.at(3, n)) /
                           (dt * dt);
            out.at(nt, n) = (2.0 * f.at(nt, n) - 5.0 * f.at(nt - 1, n) +
                             4.0 * f.at(nt - 2, n) - f.at(nt - 3, n)) /
                            (dt * dt);
            for (int k = 1; k < nt; ++k)
                out.at(k, n) = (f.at(k + 1, n) - 2.0 * f.at(k, n) + f.at(k - 1, n)) / (dt * dt);
        }
    }
    return out;
}

}  // namespace wavelab
