#include "wavelab/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

namespace wavelab {

namespace {

// Mirrors the extended-mesh construction of solve_forward so the reverse sweep
// transposes the forward recursion on the identical grid.
struct ExtendedGrid {
    AnnularMesh ext;
    int nr_ext = 0;
};

ExtendedGrid build_extended_grid(const MetricField& metric, const AnnularMesh& mesh,
                                 const TimeGrid& tgrid) {
    double c_max = DiscreteOperators(metric, mesh).wave_speed_max();
    const double margin = 2.0 * mesh.h_r;
    double required = mesh.R + c_max * tgrid.T / 2.0 + margin;
    for (int it = 0; it < 3; ++it) {
        const AnnularMesh probe = build_annulus_mesh(
            mesh.r0, std::max(required, mesh.R + mesh.h_r), std::max(mesh.n_r, 32), 16);
        const double c = DiscreteOperators(metric, probe).wave_speed_max();
        if (c <= c_max * (1.0 + 1e-12)) break;
        c_max = c;
        required = mesh.R + c_max * tgrid.T / 2.0 + margin;
    }
    ExtendedGrid g;
    const int extra = std::max(0, static_cast<int>(std::ceil((required - mesh.R) / mesh.h_r)));
    g.nr_ext = mesh.n_r + extra;
    g.ext = build_annulus_mesh(mesh.r0, mesh.r0 + (g.nr_ext - 1) * mesh.h_r, g.nr_ext,
                               mesh.n_theta);
    return g;
}

// Coefficients of the Gamma0 normal-derivative functional: dn = A ur + B ut
// with the same one-sided stencil the forward recording uses.
void dnu_coefficients(const DiscreteOperators& ops, std::vector<double>& A,
                      std::vector<double>& B) {
    const AnnularMesh& mesh = ops.mesh();
    const int i0 = mesh.n_r - 1;
    const double r = mesh.R;
    A.resize(mesh.n_theta);
    B.resize(mesh.n_theta);
    for (int j = 0; j < mesh.n_theta; ++j) {
        const double c = mesh.cos_t[j], s = mesh.sin_t[j];
        const MetricValue& mv = ops.metric_at(mesh.idx(i0, j));
        const Vec nu = {c, s};
        const double nrm = std::sqrt(metric_grad_norm2(mv, nu));
        const Vec up_r = raise_index(mv, {c, s});
        const Vec up_t = raise_index(mv, {-s / r, c / r});
        A[j] = (nu[0] * up_r[0] + nu[1] * up_r[1]) / nrm;
        B[j] = (nu[0] * up_t[0] + nu[1] * up_t[1]) / nrm;
    }
}

double misfit(const ForwardSolution& sol, const OuterData& data,
              const std::vector<double>& sw0, BoundaryTimeField* r1_out,
              BoundaryTimeField* r2_out) {
    const TimeGrid& tg = sol.u.tgrid;
    const int nt = sol.trace_gamma0.n_theta;
    double J = 0.0;
    for (int k = 0; k <= tg.n_t; ++k) {
        const double tw = time_weight(tg, k);
        for (int j = 0; j < nt; ++j) {
            const double r1 = sol.trace_gamma0.at(k, j) - data.u_trace.at(k, j);
            const double r2 = sol.dnu_gamma0.at(k, j) - data.du_trace.at(k, j);
            J += 0.5 * tw * sw0[j] * (r1 * r1 + r2 * r2);
            if (r1_out) r1_out->at(k, j) = r1;
            if (r2_out) r2_out->at(k, j) = r2;
        }
    }
    return J;
}

BoundaryTimeField tensor_data(const std::vector<double>& a, const std::vector<double>& b,
                              const TimeGrid& tgrid) {
    BoundaryTimeField f;
    f.n_theta = static_cast<int>(a.size());
    f.tgrid = tgrid;
    f.values.resize(static_cast<std::size_t>(tgrid.n_t + 1) * f.n_theta);
    for (int k = 0; k <= tgrid.n_t; ++k)
        for (int j = 0; j < f.n_theta; ++j) f.at(k, j) = a[j] * b[k];
    return f;
}

void validate_inputs(const std::vector<double>& a, const std::vector<double>& b,
                     const OuterData& data, double reg_lambda, const AnnularMesh& mesh,
                     const TimeGrid& tgrid) {
    if (static_cast<int>(a.size()) != mesh.n_theta)
        throw ConfigError("profile size does not match the Gamma node count");
    if (static_cast<int>(b.size()) != tgrid.n_t + 1)
        throw ConfigError("time profile size does not match the time grid");
    if (reg_lambda < 0.0) throw ConfigError("reg_lambda must be nonnegative");
    double bmax = 0.0;
    for (const double v : b) bmax = std::max(bmax, std::abs(v));
    if (std::abs(b[0]) > 1e-12 * std::max(1.0, bmax))
        throw ClassViolationError("time profile must vanish at t = 0");
    if (data.u_trace.n_theta != mesh.n_theta || data.u_trace.tgrid.n_t != tgrid.n_t ||
        data.du_trace.n_theta != mesh.n_theta || data.du_trace.tgrid.n_t != tgrid.n_t)
        throw ConfigError("outer data shape does not match the inversion grid");
}

double regularizer(const std::vector<double>& a, const std::vector<double>& sw,
                   const std::vector<double>& t_coef, double h_theta,
                   std::vector<double>* grad) {
    const int n = static_cast<int>(a.size());
    auto wrap = [n](int j) { return (j % n + n) % n; };
    std::vector<double> d(n);
    double norm2 = 0.0;
    for (int j = 0; j < n; ++j) {
        d[j] = (a[wrap(j + 1)] - a[wrap(j - 1)]) / (2.0 * h_theta);
        norm2 += sw[j] * a[j] * a[j] + t_coef[j] * d[j] * d[j];
    }
    if (grad) {
        grad->assign(n, 0.0);
        for (int j = 0; j < n; ++j)
            (*grad)[j] = sw[j] * a[j] +
                         (t_coef[wrap(j - 1)] * d[wrap(j - 1)] -
                          t_coef[wrap(j + 1)] * d[wrap(j + 1)]) /
                             (2.0 * h_theta);
    }
    return norm2;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double objective_value(const std::vector<double>& a, const std::vector<double>& b,
                       const OuterData& data, double reg_lambda, const MetricField& metric,
                       const AnnularMesh& mesh, const TimeGrid& tgrid,
                       const std::vector<double>& sw0, const std::vector<double>& sw,
                       const std::vector<double>& t_coef) {
    const ForwardSolution sol = solve_forward(tensor_data(a, b, tgrid), metric, mesh, tgrid);
    return misfit(sol, data, sw0, nullptr, nullptr) +
           0.5 * reg_lambda * regularizer(a, sw, t_coef, mesh.h_theta, nullptr);
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, const std::string& name) {
    std::uint64_t h = 1469598103934665603ull;
    for (const char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    std::uint64_t z = seed ^ h;
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

OuterData synthesize_outer_data(const std::string& a_name, const std::vector<double>& a_params,
                                const std::string& b_name, const std::vector<double>& b_params,
                                const MetricField& metric, const AnnularMesh& mesh,
                                const TimeGrid& tgrid, int refine) {
    if (refine < 1) throw ConfigError("refine must be >= 1");
    const AnnularMesh fine =
        refine == 1 ? mesh
                    : build_annulus_mesh(mesh.r0, mesh.R, (mesh.n_r - 1) * refine + 1,
                                         mesh.n_theta * refine);
    const TimeGrid tg_fine = refine == 1 ? tgrid : build_time_grid(tgrid.T, tgrid.n_t * refine);
    const AdmissibleSource src =
        make_admissible_source(a_name, a_params, b_name, b_params, fine, tg_fine, metric);
    const ForwardSolution sol =
        solve_forward(boundary_data(src, tg_fine), metric, fine, tg_fine);

    OuterData data;
    data.u_trace = make_boundary_time_field(mesh.n_theta, tgrid);
    data.du_trace = make_boundary_time_field(mesh.n_theta, tgrid);
    for (int k = 0; k <= tgrid.n_t; ++k) {
        for (int j = 0; j < mesh.n_theta; ++j) {
            data.u_trace.at(k, j) = sol.trace_gamma0.at(k * refine, j * refine);
            data.du_trace.at(k, j) = sol.dnu_gamma0.at(k * refine, j * refine);
        }
    }
    return data;
}

void add_noise(OuterData& data, double level, std::uint64_t seed) {
    if (level < 0.0) throw ConfigError("noise level must be nonnegative");
    auto perturb = [&](BoundaryTimeField& field, const std::string& stream) {
        double sup = 0.0;
        for (const double v : field.values) sup = std::max(sup, std::abs(v));
        std::mt19937_64 rng(stream_seed(seed, stream));
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (double& v : field.values) v += level * sup * gauss(rng);
    };
    perturb(data.u_trace, "trace");
    perturb(data.du_trace, "dnu");
    data.noise_level = level;
}

Objective objective_and_gradient(const std::vector<double>& a, const std::vector<double>& b,
                                 const OuterData& data, double reg_lambda,
                                 const MetricField& metric, const AnnularMesh& mesh,
                                 const TimeGrid& tgrid) {
    validate_inputs(a, b, data, reg_lambda, mesh, tgrid);
    const DiscreteOperators ops(metric, mesh);
    const std::vector<double>& sw = ops.quadrature().surface_gamma;
    const std::vector<double>& sw0 = ops.quadrature().surface_gamma0;
    const std::vector<double> tinv = tangent_metric_inv(metric, mesh, Boundary::Gamma);
    std::vector<double> t_coef(mesh.n_theta);
    for (int j = 0; j < mesh.n_theta; ++j) t_coef[j] = sw[j] * tinv[j];

    const ForwardSolution sol = solve_forward(tensor_data(a, b, tgrid), metric, mesh, tgrid);
    BoundaryTimeField r1 = make_boundary_time_field(mesh.n_theta, tgrid);
    BoundaryTimeField r2 = make_boundary_time_field(mesh.n_theta, tgrid);

    Objective obj;
    std::vector<double> reg_grad;
    obj.value = misfit(sol, data, sw0, &r1, &r2) +
                0.5 * reg_lambda * regularizer(a, sw, t_coef, mesh.h_theta, &reg_grad);

    // Reverse sweep: transpose of the leapfrog recursion on the extended mesh.
    const ExtendedGrid eg = build_extended_grid(metric, mesh, tgrid);
    const AnnularMesh& ext = eg.ext;
    const DiscreteOperators ops_ext(metric, ext);
    std::vector<double> Adn, Bdn;
    dnu_coefficients(ops, Adn, Bdn);

    const int nt = mesh.n_theta;
    const int i0 = mesh.n_r - 1;
    const std::size_t nn = ext.n_nodes();
    const double dt2 = tgrid.dt * tgrid.dt;
    const double inv_2hr = 1.0 / (2.0 * mesh.h_r);
    const double inv_2ht = 1.0 / (2.0 * mesh.h_theta);

    auto add_seed = [&](int k, std::vector<double>& bar) {
        const double tw = time_weight(tgrid, k);
        for (int j = 0; j < nt; ++j) {
            const double w = tw * sw0[j];
            bar[ext.idx(i0, j)] += w * r1.at(k, j);
            const double rb = w * r2.at(k, j);
            bar[ext.idx(i0, j)] += rb * Adn[j] * 3.0 * inv_2hr;
            bar[ext.idx(i0 - 1, j)] -= rb * Adn[j] * 4.0 * inv_2hr;
            bar[ext.idx(i0 - 2, j)] += rb * Adn[j] * inv_2hr;
            bar[ext.idx(i0, mesh.wrap(j + 1))] += rb * Bdn[j] * inv_2ht;
            bar[ext.idx(i0, mesh.wrap(j - 1))] -= rb * Bdn[j] * inv_2ht;
        }
    };

    if (tgrid.n_t < 2) throw ConfigError("time grid too coarse for the adjoint sweep");
    std::vector<double> barK(nn, 0.0), barK1(nn, 0.0), barK2(nn, 0.0), v(nn, 0.0),
        st(nn, 0.0), fbar_b(static_cast<std::size_t>(nt), 0.0);
    add_seed(tgrid.n_t, barK);
    add_seed(tgrid.n_t - 1, barK1);
    add_seed(tgrid.n_t - 2, barK2);

    auto absorb_injection = [&](const std::vector<double>& bar, int k) {
        for (int j = 0; j < nt; ++j) fbar_b[j] += b[k] * bar[ext.idx(0, j)];
    };

    for (int k = tgrid.n_t; k >= 2; --k) {
        absorb_injection(barK, k);
        // v: rows 1 .. nr_ext - 2 of barK (the stencil-updated rows).
        std::fill(v.begin(), v.end(), 0.0);
        for (int i = 1; i < eg.nr_ext - 1; ++i)
            for (int j = 0; j < nt; ++j) v[ext.idx(i, j)] = barK[ext.idx(i, j)];
        ops_ext.apply_stencil_transpose(v.data(), st.data());
        for (std::size_t n = 0; n < nn; ++n) {
            barK1[n] += 2.0 * v[n] + dt2 * st[n];
            barK2[n] -= v[n];
        }
        // The outer ring is carried over from two steps back, untouched.
        for (int j = 0; j < nt; ++j)
            barK2[ext.idx(eg.nr_ext - 1, j)] += barK[ext.idx(eg.nr_ext - 1, j)];
        std::swap(barK, barK1);
        std::swap(barK1, barK2);
        std::fill(barK2.begin(), barK2.end(), 0.0);
        if (k - 3 >= 0) add_seed(k - 3, barK2);
    }
    // Step 1 wrote every node: u1 = u0 + (dt^2 / 2) S u0, then the injection.
    absorb_injection(barK, 1);
    std::copy(barK.begin(), barK.end(), v.begin());
    for (int j = 0; j < nt; ++j) v[ext.idx(0, j)] = 0.0;
    ops_ext.apply_stencil_transpose(v.data(), st.data());
    for (std::size_t n = 0; n < nn; ++n) barK1[n] += v[n] + 0.5 * dt2 * st[n];
    absorb_injection(barK1, 0);

    obj.gradient.resize(nt);
    for (int j = 0; j < nt; ++j) obj.gradient[j] = fbar_b[j] + reg_lambda * reg_grad[j];
    return obj;
}

ReconstructionResult reconstruct(const OuterData& data, const std::vector<double>& b,
                                 double reg_lambda, int max_iter, const MetricField& metric,
                                 const AnnularMesh& mesh, const TimeGrid& tgrid,
                                 const std::vector<double>* a_truth) {
    if (max_iter < 1) throw ConfigError("max_iter must be positive");
    const int n = mesh.n_theta;
    const DiscreteOperators ops(metric, mesh);
    const std::vector<double>& sw = ops.quadrature().surface_gamma;
    const std::vector<double> tinv = tangent_metric_inv(metric, mesh, Boundary::Gamma);
    std::vector<double> t_coef(n);
    for (int j = 0; j < n; ++j) t_coef[j] = sw[j] * tinv[j];

    const std::vector<double>& sw0 = ops.quadrature().surface_gamma0;
    auto value = [&](const std::vector<double>& a) {
        return objective_value(a, b, data, reg_lambda, metric, mesh, tgrid, sw0, sw, t_coef);
    };

    std::vector<double> a(n, 0.0);
    Objective cur = objective_and_gradient(a, b, data, reg_lambda, metric, mesh, tgrid);

    ReconstructionResult res;
    res.reg_lambda = reg_lambda;
    res.objective_history.push_back(cur.value);

    auto norm = [&](const std::vector<double>& v) {
        double s = 0.0;
        for (const double x : v) s += x * x;
        return std::sqrt(s);
    };
    const double g0 = norm(cur.gradient);
    const double gtol = 1e-8 * g0;

    std::deque<std::pair<std::vector<double>, std::vector<double>>> memory;  // (s, y)
    const std::size_t lbfgs_m = 8;

    int it = 0;
    for (; it < max_iter && norm(cur.gradient) > gtol; ++it) {
        // Two-loop recursion.
        std::vector<double> d = cur.gradient;
        std::vector<double> alpha(memory.size());
        for (std::size_t i = memory.size(); i-- > 0;) {
            const auto& [s_i, y_i] = memory[i];
            double sy = 0.0, sd = 0.0;
            for (int j = 0; j < n; ++j) {
                sy += s_i[j] * y_i[j];
                sd += s_i[j] * d[j];
            }
            alpha[i] = sd / sy;
            for (int j = 0; j < n; ++j) d[j] -= alpha[i] * y_i[j];
        }
        if (!memory.empty()) {
            const auto& [s_b, y_b] = memory.back();
            double sy = 0.0, yy = 0.0;
            for (int j = 0; j < n; ++j) {
                sy += s_b[j] * y_b[j];
                yy += y_b[j] * y_b[j];
            }
            for (double& x : d) x *= sy / yy;
        }
        for (std::size_t i = 0; i < memory.size(); ++i) {
            const auto& [s_i, y_i] = memory[i];
            double sy = 0.0, yd = 0.0;
            for (int j = 0; j < n; ++j) {
                sy += s_i[j] * y_i[j];
                yd += y_i[j] * d[j];
            }
            const double beta = yd / sy;
            for (int j = 0; j < n; ++j) d[j] += (alpha[i] - beta) * s_i[j];
        }
        for (double& x : d) x = -x;

        double gd = 0.0;
        for (int j = 0; j < n; ++j) gd += cur.gradient[j] * d[j];
        if (gd >= 0.0) {
            gd = 0.0;
            for (int j = 0; j < n; ++j) {
                d[j] = -cur.gradient[j];
                gd += cur.gradient[j] * d[j];
            }
        }

        double step = memory.empty() ? 1.0 / std::max(1.0, norm(cur.gradient)) : 1.0;
        double trial_J = 0.0;
        std::vector<double> a_trial(n);
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (int j = 0; j < n; ++j) a_trial[j] = a[j] + step * d[j];
            trial_J = value(a_trial);
            if (trial_J <= cur.value + 1e-4 * step * gd) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (trial_J > cur.value * (1.0 + 1e-12) && step > 1e-18)
                throw StabilityError("line search failed to decrease the objective");
            break;
        }

        const Objective next =
            objective_and_gradient(a_trial, b, data, reg_lambda, metric, mesh, tgrid);
        std::vector<double> s_vec(n), y_vec(n);
        double sy = 0.0, ss = 0.0, yy = 0.0;
        for (int j = 0; j < n; ++j) {
            s_vec[j] = a_trial[j] - a[j];
            y_vec[j] = next.gradient[j] - cur.gradient[j];
            sy += s_vec[j] * y_vec[j];
            ss += s_vec[j] * s_vec[j];
            yy += y_vec[j] * y_vec[j];
        }
        if (sy > 1e-12 * std::sqrt(ss * yy)) {
            memory.emplace_back(std::move(s_vec), std::move(y_vec));
            if (memory.size() > lbfgs_m) memory.pop_front();
        }
        a = a_trial;
        cur = next;
        res.objective_history.push_back(cur.value);
    }

    res.a_hat = a;
    res.iterations = it;
    if (a_truth != nullptr) {
        double num = 0.0, den = 0.0;
        for (int j = 0; j < n; ++j) {
            num += sw[j] * sqr(a[j] - (*a_truth)[j]);
            den += sw[j] * sqr((*a_truth)[j]);
        }
        res.rel_error = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
    }
    res.min_abs_a = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
        res.min_abs_a = std::min(res.min_abs_a, std::abs(a[j]));
        const double d =
            (a[mesh.wrap(j + 1)] - a[mesh.wrap(j - 1)]) / (2.0 * mesh.h_theta);
        res.max_tangential = std::max(res.max_tangential, std::abs(d) * std::sqrt(tinv[j]));
    }
    return res;
}

NoiseSweep noise_sweep(const std::vector<double>& levels, std::uint64_t seed,
                       const std::string& a_name, const std::vector<double>& a_params,
                       const std::string& b_name, const std::vector<double>& b_params,
                       double reg_lambda, int max_iter, const MetricField& metric,
                       const AnnularMesh& mesh, const TimeGrid& tgrid) {
    if (levels.size() < 2) throw ConfigError("noise sweep needs at least 2 levels");
    const OuterData clean = synthesize_outer_data(a_name, a_params, b_name, b_params, metric,
                                                  mesh, tgrid, /*refine=*/2);
    const AdmissibleSource truth =
        make_admissible_source(a_name, a_params, b_name, b_params, mesh, tgrid, metric);

    NoiseSweep sweep;
    sweep.levels = levels;
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        OuterData noisy = clean;
        add_noise(noisy, levels[i], stream_seed(seed, "level-" + std::to_string(i)));
        const ReconstructionResult rec = reconstruct(noisy, truth.b, reg_lambda, max_iter,
                                                     metric, mesh, tgrid, &truth.a);
        sweep.rel_errors.push_back(rec.rel_error);
        if (levels[i] > 0.0 && rec.rel_error > 0.0) {
            lx.push_back(std::log(levels[i]));
            ly.push_back(std::log(rec.rel_error));
        }
    }
    if (lx.size() >= 2) sweep.slope = fit_slope(lx, ly);
    return sweep;
}

}  // namespace wavelab
