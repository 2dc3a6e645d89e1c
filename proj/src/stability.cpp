#include "wavelab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace wavelab {

namespace {

void eval_a(const std::string& name, const std::vector<double>& p, const AnnularMesh& mesh,
            std::vector<double>& a, std::vector<double>& a_theta) {
    a.resize(mesh.n_theta);
    a_theta.resize(mesh.n_theta);
    if (name == "constant") {
        if (p.size() != 1) throw ConfigError("a generator 'constant' expects 1 parameter");
        std::fill(a.begin(), a.end(), p[0]);
        std::fill(a_theta.begin(), a_theta.end(), 0.0);
        return;
    }
    if (name == "trig") {
        if (p.empty() || p.size() > 5)
            throw ConfigError("a generator 'trig' expects 1..5 parameters");
        auto coef = [&](std::size_t i) { return i < p.size() ? p[i] : 0.0; };
        for (int j = 0; j < mesh.n_theta; ++j) {
            const double th = mesh.theta[j];
            a[j] = coef(0) + coef(1) * std::cos(th) + coef(2) * std::sin(th) +
                   coef(3) * std::cos(2.0 * th) + coef(4) * std::sin(2.0 * th);
            a_theta[j] = -coef(1) * std::sin(th) + coef(2) * std::cos(th) -
                         2.0 * coef(3) * std::sin(2.0 * th) +
                         2.0 * coef(4) * std::cos(2.0 * th);
        }
        return;
    }
    throw ConfigError("unknown a generator '" + name + "'");
}

void eval_b(const std::string& name, const std::vector<double>& p, const TimeGrid& tg,
            std::vector<double>& b, std::vector<double>& bp) {
    b.resize(tg.n_t + 1);
    bp.resize(tg.n_t + 1);
    auto param = [&](std::size_t i, double fallback) {
        return i < p.size() ? p[i] : fallback;
    };
    if (name == "t2-smoothstep") {
        const double amp = param(0, 1.0), ramp = param(1, tg.T);
        if (ramp <= 0.0) throw ConfigError("t2-smoothstep ramp_end must be positive");
        for (int k = 0; k <= tg.n_t; ++k) {
            const double t = tg.t(k);
            const double x = std::min(t / ramp, 1.0);
            const double s = x * x * (3.0 - 2.0 * x);
            const double sp = (t < ramp) ? 6.0 * x * (1.0 - x) / ramp : 0.0;
            b[k] = amp * t * t * s;
            bp[k] = amp * (2.0 * t * s + t * t * sp);
        }
        return;
    }
    if (name == "t3") {
        const double amp = param(0, 1.0);
        for (int k = 0; k <= tg.n_t; ++k) {
            const double t = tg.t(k);
            b[k] = amp * t * t * t;
            bp[k] = 3.0 * amp * t * t;
        }
        return;
    }
    if (name == "sin-ramp") {
        const double amp = param(0, 1.0), omega = param(1, 1.0);
        for (int k = 0; k <= tg.n_t; ++k) {
            const double t = tg.t(k);
            const double c = 1.0 - std::cos(omega * t);
            b[k] = amp * c * c;
            bp[k] = 2.0 * amp * c * omega * std::sin(omega * t);
        }
        return;
    }
    if (name == "pulse") {
        const double amp = param(0, 1.0), width = param(1, 0.5), onset = param(2, 0.0);
        if (width <= 0.0) throw ConfigError("pulse width must be positive");
        if (onset < 0.0) throw ConfigError("pulse onset must be nonnegative");
        for (int k = 0; k <= tg.n_t; ++k) {
            const double t = tg.t(k);
            if (t <= onset || t >= onset + width) {
                b[k] = bp[k] = 0.0;
                continue;
            }
            const double x = std::numbers::pi * (t - onset) / width;
            const double s = std::sin(x);
            b[k] = amp * s * s * s * s;
            bp[k] = amp * 4.0 * s * s * s * std::cos(x) * std::numbers::pi / width;
        }
        return;
    }
    throw ConfigError("unknown b generator '" + name + "'");
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
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-12 * std::max(1.0, sxx * n))
        throw ConfigError("regression degenerate: abscissae do not vary");
    return (n * sxy - sx * sy) / denom;
}

}  // namespace

AdmissibleSource make_admissible_source(const std::string& a_name,
                                        const std::vector<double>& a_params,
                                        const std::string& b_name,
                                        const std::vector<double>& b_params,
                                        const AnnularMesh& mesh, const TimeGrid& tgrid,
                                        const MetricField& metric) {
    AdmissibleSource src;
    eval_a(a_name, a_params, mesh, src.a, src.a_theta);
    eval_b(b_name, b_params, tgrid, src.b, src.b_prime);
    src.description = a_name + " (x) " + b_name;

    const auto [lo, hi] = std::minmax_element(src.a.begin(), src.a.end());
    if (*lo <= 0.0 && *hi >= 0.0)
        throw ClassViolationError("boundary profile must be bounded away from zero; range [" +
                                  std::to_string(*lo) + ", " + std::to_string(*hi) + "]");
    src.alpha = std::min(std::abs(*lo), std::abs(*hi));

    const std::vector<double> tinv = tangent_metric_inv(metric, mesh, Boundary::Gamma);
    for (int j = 0; j < mesh.n_theta; ++j)
        src.beta = std::max(src.beta, std::abs(src.a_theta[j]) * std::sqrt(tinv[j]));
    src.ratio = src.beta / src.alpha;

    double bmax = 0.0;
    for (const double v : src.b) bmax = std::max(bmax, std::abs(v));
    if (std::abs(src.b[0]) > 1e-12 * std::max(1.0, bmax) ||
        std::abs(src.b_prime[0]) > 1e-12 * std::max(1.0, bmax))
        throw ClassViolationError("time profile must satisfy b(0) = b'(0) = 0");
    return src;
}

BoundaryTimeField boundary_data(const AdmissibleSource& src, const TimeGrid& tgrid) {
    BoundaryTimeField f;
    f.n_theta = static_cast<int>(src.a.size());
    f.tgrid = tgrid;
    f.values.resize(static_cast<std::size_t>(tgrid.n_t + 1) * f.n_theta);
    for (int k = 0; k <= tgrid.n_t; ++k)
        for (int j = 0; j < f.n_theta; ++j) f.at(k, j) = src.a[j] * src.b[k];
    return f;
}

DataNorms compute_data_norms(const ForwardSolution& sol, const AdmissibleSource& src,
                             double tau, const MetricField& metric, const AnnularMesh& mesh) {
    const TimeGrid& tg = sol.u.tgrid;
    if (!(tau > 0.0) || tau > tg.T)
        throw ConfigError("compute_data_norms: tau must lie in (0, T]");

    DataNorms n;
    n.D_full = sobolev_norm(sol.trace_gamma, NormKind::H1BoundaryTime, metric, mesh,
                            Boundary::Gamma) +
               sobolev_norm(sol.dnu_gamma, NormKind::L2BoundaryTime, metric, mesh,
                            Boundary::Gamma);
    n.D_outer = sobolev_norm(sol.trace_gamma0, NormKind::H1BoundaryTime, metric, mesh,
                             Boundary::Gamma0) +
                sobolev_norm(sol.dnu_gamma0, NormKind::L2BoundaryTime, metric, mesh,
                             Boundary::Gamma0);

    const BoundaryTimeField f = boundary_data(src, tg);
    n.f_norm = sobolev_norm(f, NormKind::L2TimeH1Gamma, metric, mesh, Boundary::Gamma, tau);

    const DiscreteOperators ops(metric, mesh);
    const std::vector<double>& sw = ops.quadrature().surface_gamma;
    const std::vector<double> tinv = tangent_metric_inv(metric, mesh, Boundary::Gamma);
    double a2 = 0.0;
    for (int j = 0; j < mesh.n_theta; ++j)
        a2 += sw[j] * (sqr(src.a[j]) + sqr(src.a_theta[j]) * tinv[j]);
    n.a_norm = std::sqrt(a2);

    double b2 = 0.0;
    for (int k = 0; k <= tg.n_t && tg.t(k) <= tau + 1e-12; ++k) {
        const bool edge = (k == 0) || (tg.t(k + 1) > tau + 1e-12) || (k == tg.n_t);
        b2 += (edge ? 0.5 : 1.0) * tg.dt * sqr(src.b[k]);
    }
    n.b_norm = std::sqrt(b2);
    return n;
}

std::vector<double> default_theta_grid() {
    std::vector<double> g;
    for (int i = 1; i <= 19; ++i) g.push_back(0.05 * i);
    return g;
}

StabilityReport verify_theorem(const std::vector<AdmissibleSource>& family,
                               const CarlemanParams& params,
                               const std::vector<double>& theta_grid,
                               const MetricField& metric, const AnnularMesh& mesh,
                               const TimeGrid& tgrid) {
    if (family.size() < 5)
        throw ConfigError("verify_theorem needs at least 5 family members, got " +
                          std::to_string(family.size()));
    for (const double th : theta_grid)
        if (!(th > 0.0) || !(th < 1.0))
            throw ConfigError("theta grid values must lie in (0, 1)");

    StabilityReport rep;
    rep.theta_grid = theta_grid;
    rep.tangential_margin = -std::numeric_limits<double>::infinity();

    const DiscreteOperators ops(metric, mesh);
    const std::vector<double> tinv = tangent_metric_inv(metric, mesh, Boundary::Gamma);

    std::vector<DataNorms> norms;
    for (std::size_t m = 0; m < family.size(); ++m) {
        const AdmissibleSource& src = family[m];
        const BoundaryTimeField f = boundary_data(src, tgrid);
        const ForwardSolution sol = solve_forward(f, metric, mesh, tgrid);
        const DataNorms n = compute_data_norms(sol, src, params.tau, metric, mesh);
        if (n.D_outer == 0.0 && n.f_norm > 0.0) rep.anomaly = true;
        norms.push_back(n);
        rep.family.push_back({"member-" + std::to_string(m), n});

        // Nodewise |grad_tau u|_g <= (beta / alpha) |f| on Sigma.
        for (int k = 0; k <= tgrid.n_t; ++k) {
            for (int j = 0; j < mesh.n_theta; ++j) {
                const double dth = (sol.trace_gamma.at(k, mesh.wrap(j + 1)) -
                                    sol.trace_gamma.at(k, mesh.wrap(j - 1))) /
                                   (2.0 * mesh.h_theta);
                const double tau_norm = std::abs(dth) * std::sqrt(tinv[j]);
                rep.tangential_margin = std::max(
                    rep.tangential_margin, tau_norm - src.ratio * std::abs(f.at(k, j)));
            }
        }
    }

    const double inf = std::numeric_limits<double>::infinity();
    rep.fitted_C.assign(theta_grid.size(), inf);
    rep.spread.assign(theta_grid.size(), inf);
    rep.best_spread = inf;
    for (std::size_t i = 0; i < theta_grid.size(); ++i) {
        const double th = theta_grid[i];
        double lo = inf, hi = 0.0;
        bool ok = true;
        for (const DataNorms& n : norms) {
            if (n.f_norm == 0.0) continue;
            const double denom = n.D_outer + std::pow(n.D_full, 1.0 - th) *
                                                 std::pow(n.D_outer, th);
            if (denom <= 0.0) {
                ok = false;
                break;
            }
            const double r = n.f_norm / denom;
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        if (!ok || hi == 0.0) continue;
        rep.fitted_C[i] = hi;
        rep.spread[i] = hi / lo;
        if (rep.spread[i] < rep.best_spread) {
            rep.best_spread = rep.spread[i];
            rep.best_theta = th;
            rep.best_C = hi;
        }
    }
    rep.success = rep.best_spread <= 10.0 && rep.best_C > 0.0 &&
                  std::isfinite(rep.best_C) && !rep.anomaly;

    if (rep.best_theta > 0.0) {
        rep.implied_c = params.mu * (1.0 - rep.best_theta) / rep.best_theta;
        for (const DataNorms& n : norms) {
            rep.s_balance.push_back(
                n.D_outer > 0.0 && n.D_full > 0.0
                    ? std::log(n.D_full / n.D_outer) / (rep.implied_c + params.mu)
                    : 0.0);
        }
        double cc = 0.0;
        for (const DataNorms& n : norms) {
            if (n.b_norm == 0.0 || n.D_outer == 0.0) continue;
            const double denom =
                n.D_outer + std::pow(n.D_full, 1.0 - rep.best_theta) *
                                std::pow(n.D_outer, rep.best_theta);
            cc = std::max(cc, n.a_norm * n.b_norm / denom);
        }
        rep.corollary_C = cc;
        rep.corollary_ok = cc > 0.0 && std::isfinite(cc);
    }
    return rep;
}

HolderProbe holder_exponent_probe(const std::vector<AdmissibleSource>& family, double tau,
                                  const MetricField& metric, const AnnularMesh& mesh,
                                  const TimeGrid& tgrid) {
    HolderProbe probe;
    for (const AdmissibleSource& src : family) {
        const ForwardSolution sol =
            solve_forward(boundary_data(src, tgrid), metric, mesh, tgrid);
        const DataNorms n = compute_data_norms(sol, src, tau, metric, mesh);
        if (n.f_norm <= 0.0 || n.D_outer <= 0.0) continue;
        probe.log_d_outer.push_back(std::log(n.D_outer));
        probe.log_f_norm.push_back(std::log(n.f_norm));
    }
    if (probe.log_d_outer.size() < 3)
        throw ConfigError("holder_exponent_probe: fewer than 3 usable family members");
    probe.slope = fit_slope(probe.log_d_outer, probe.log_f_norm);
    return probe;
}

double theorem_lower_bound_margin(const AdmissibleSource& src, const WeightFunction& phi,
                                  const CarlemanParams& params,
                                  const std::vector<double>& s_sweep,
                                  const MetricField& metric, const AnnularMesh& mesh,
                                  const TimeGrid& tgrid) {
    const DiscreteOperators ops(metric, mesh);
    const std::vector<double>& sw = ops.quadrature().surface_gamma;
    std::vector<double> phi_g(mesh.n_theta);
    double phi_min = std::numeric_limits<double>::infinity();
    for (int j = 0; j < mesh.n_theta; ++j) {
        phi_g[j] = phi.phi(mesh.node(0, j));
        phi_min = std::min(phi_min, phi_g[j]);
    }

    double margin = std::numeric_limits<double>::infinity();
    for (const double s : s_sweep) {
        double lhs = 0.0, f2_tau = 0.0;
        for (int k = 0; k <= tgrid.n_t; ++k) {
            const double t = tgrid.t(k);
            const double tw = time_weight(tgrid, k);
            const bool in_tau = t <= params.tau + 1e-12;
            const double tw_tau =
                in_tau ? (((k == 0) || (tgrid.t(k + 1) > params.tau + 1e-12) ||
                           k == tgrid.n_t)
                              ? 0.5 * tgrid.dt
                              : tgrid.dt)
                       : 0.0;
            for (int j = 0; j < mesh.n_theta; ++j) {
                const double f2 = sqr(src.a[j] * src.b[k]) * sw[j];
                lhs += tw * std::exp(2.0 * s * (phi_g[j] - params.gamma * t)) * f2;
                f2_tau += tw_tau * f2;
            }
        }
        const double rhs = std::exp(2.0 * s * (phi_min - params.gamma * params.tau)) * f2_tau;
        margin = std::min(margin, lhs - rhs);
    }
    return margin;
}

}  // namespace wavelab
