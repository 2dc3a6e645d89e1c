#include "wavelab/weight.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace wavelab {

namespace {

WeightFunction square_weight(double scale, double r0) {
    WeightFunction w;
    w.phi = [scale, r0](const Vec& x) { return scale * (dot(x, x) - r0 * r0); };
    w.grad = [scale](const Vec& x) {
        Vec g{};
        for (int i = 0; i < kDim; ++i) g[i] = 2.0 * scale * x[i];
        return g;
    };
    w.hess = [scale](const Vec&) {
        Mat h = mat_zero();
        for (int i = 0; i < kDim; ++i) h[i][i] = 2.0 * scale;
        return h;
    };
    w.radial = scale > 0.0;
    return w;
}

}  // namespace

WeightFunction make_weight(const std::string& name, const std::vector<double>& params) {
    auto need = [&](std::size_t n) {
        if (params.size() != n)
            throw ConfigError("weight '" + name + "' expects " + std::to_string(n) +
                              " parameters, got " + std::to_string(params.size()));
    };
    if (name == "shifted-square") {
        need(1);
        WeightFunction w = square_weight(1.0, params[0]);
        w.description = "shifted-square(r0=" + std::to_string(params[0]) + ")";
        return w;
    }
    if (name == "scaled-square") {
        need(2);
        WeightFunction w = square_weight(params[0], params[1]);
        w.description = "scaled-square(c=" + std::to_string(params[0]) +
                        ", r0=" + std::to_string(params[1]) + ")";
        return w;
    }
    if (name == "neg-square") {
        need(0);
        WeightFunction w = square_weight(-1.0, 0.0);
        w.description = "neg-square";
        w.radial = false;  // sublevel {phi < 0} is all of R^n minus origin
        return w;
    }
    if (name == "linear") {
        need(0);
        WeightFunction w;
        w.phi = [](const Vec& x) { return x[0]; };
        w.grad = [](const Vec&) {
            Vec g{};
            g[0] = 1.0;
            return g;
        };
        w.hess = [](const Vec&) { return mat_zero(); };
        w.description = "linear";
        return w;
    }
    throw ConfigError("unknown weight '" + name + "'");
}

AdmissibilityReport check_admissible(const WeightFunction& phi, const MetricField& metric,
                                     const SamplingSpec& sampling) {
    if (sampling.n_per_axis < 2) throw ConfigError("sampling spec too coarse");
    const double w = sampling.box_half_width + sampling.pad;
    const double h = 2.0 * w / (sampling.n_per_axis - 1);

    AdmissibilityReport rep;
    rep.grad_inf = std::numeric_limits<double>::infinity();
    rep.hess_inf = std::numeric_limits<double>::infinity();
    // When {phi > 0} misses the whole box (e.g. a concave weight) the infima
    // are taken over the full box so the report still exposes the defect.
    for (const bool restrict_to_positive : {true, false}) {
        for (int ix = 0; ix < sampling.n_per_axis; ++ix) {
            for (int iy = 0; iy < sampling.n_per_axis; ++iy) {
                const Vec x = {-w + ix * h, -w + iy * h};
                if (restrict_to_positive && phi.phi(x) <= 0.0) continue;
                ++rep.sample_count;
                const MetricValue mv = metric_eval(metric, x);
                const ChristoffelValue ch = christoffel_eval(metric, x);
                const Vec g = phi.grad(x);
                rep.grad_inf = std::min(rep.grad_inf, std::sqrt(metric_grad_norm2(mv, g)));
                const Mat cov = covariant_hessian(ch, phi.hess(x), g);
                rep.hess_inf =
                    std::min(rep.hess_inf, smallest_generalized_eigenvalue(cov, mv.g));
            }
        }
        if (rep.sample_count > 0) break;
    }
    if (rep.sample_count == 0)
        throw ConfigError("admissibility sampling found no points with phi > 0");

    // Boundedness of {phi < 0}: certified for builtin radial weights by
    // positivity on a far circle plus monotone growth along rays; sampled
    // (non-certified) otherwise.
    const double rc = sampling.certification_radius;
    bool positive_far = true;
    bool growing = true;
    const int n_dirs = 64;
    for (int k = 0; k < n_dirs; ++k) {
        const double th = 2.0 * std::numbers::pi * k / n_dirs;
        const Vec e = {std::cos(th), std::sin(th)};
        Vec xc{}, x2{};
        for (int i = 0; i < kDim; ++i) {
            xc[i] = rc * e[i];
            x2[i] = 2.0 * rc * e[i];
        }
        if (phi.phi(xc) <= 0.0) positive_far = false;
        if (dot(phi.grad(xc), e) <= 0.0 || phi.phi(x2) <= phi.phi(xc)) growing = false;
    }
    rep.sublevel_bounded = positive_far && (phi.radial ? growing : true);
    rep.certified = phi.radial && positive_far && growing;
    rep.admissible = rep.grad_inf > 0.0 && rep.hess_inf > 0.0 && rep.sublevel_bounded;
    return rep;
}

GeometricConstants geometric_constants(const WeightFunction& phi, const MetricField& metric,
                                       const AnnularMesh& mesh) {
    GeometricConstants c;
    c.m_frak = -std::numeric_limits<double>::infinity();
    c.delta = std::numeric_limits<double>::infinity();
    for (int i = 0; i < mesh.n_r; ++i) {
        for (int j = 0; j < mesh.n_theta; ++j) {
            const Vec x = mesh.node(i, j);
            c.m_frak = std::max(c.m_frak, phi.phi(x));
            const MetricValue mv = metric_eval(metric, x);
            c.delta = std::min(c.delta, std::sqrt(metric_grad_norm2(mv, phi.grad(x))));
        }
    }
    if (!(c.delta > 0.0))
        throw FeasibilityError("weight degenerate on D bar: min |nabla_g phi|_g = " +
                               std::to_string(c.delta));
    c.t_star = c.m_frak / c.delta;
    return c;
}

CarlemanParams carleman_params(const GeometricConstants& constants, double T, double tau,
                               GammaRule rule, double explicit_gamma) {
    const double tstar = constants.t_star;
    if (!(T > tstar))
        throw FeasibilityError("observation time infeasible: T = " + std::to_string(T) +
                               " <= T* = " + std::to_string(tstar));
    if (!(tau > 0.0) || !(tau < T - tstar))
        throw FeasibilityError("tau must lie in (0, T - T*) = (0, " +
                               std::to_string(T - tstar) + "), got " + std::to_string(tau));
    const double lower = constants.m_frak / (T - tau);  // gamma must exceed this
    const double upper = constants.delta;
    double gamma = 0.0;
    switch (rule) {
        case GammaRule::Midpoint:
            gamma = 0.5 * (lower + upper);
            break;
        case GammaRule::NearDelta:
            gamma = upper - 0.05 * (upper - lower);
            break;
        case GammaRule::Explicit:
            gamma = explicit_gamma;
            if (!(gamma > lower) || !(gamma < upper))
                throw FeasibilityError("explicit gamma = " + std::to_string(gamma) +
                                       " outside feasible interval (" + std::to_string(lower) +
                                       ", " + std::to_string(upper) + ")");
            break;
    }
    CarlemanParams p;
    p.m_frak = constants.m_frak;
    p.delta = constants.delta;
    p.t_star = tstar;
    p.T = T;
    p.tau = tau;
    p.gamma = gamma;
    p.mu = gamma * (T - tau) - constants.m_frak;
    if (!(p.mu > 0.0))
        throw FeasibilityError("mu = gamma (T - tau) - m must be positive, got " +
                               std::to_string(p.mu));
    return p;
}

WeightValue weight_eval(const WeightFunction& phi, const CarlemanParams& params, const Vec& x,
                        double t, double s) {
    if (s < 0.0) throw ConfigError("weight_eval requires s >= 0");
    WeightValue v;
    v.varphi = phi.phi(x) - params.gamma * t;
    const double arg = 2.0 * s * v.varphi;
    if (arg > 700.0) {
        v.overflow = true;
        v.exp2s = std::numeric_limits<double>::max();
    } else {
        v.exp2s = std::exp(arg);
    }
    return v;
}

}  // namespace wavelab
