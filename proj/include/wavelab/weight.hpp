#pragma once

#include <functional>
#include <string>
#include <vector>

#include "wavelab/mesh.hpp"

namespace wavelab {

/// Carleman weight candidate phi with analytic gradient and Hessian.
struct WeightFunction {
    std::function<double(const Vec&)> phi;
    std::function<Vec(const Vec&)> grad;
    std::function<Mat(const Vec&)> hess;
    std::string description;
    // Builtin radial weights carry a certified boundedness argument for
    // {phi < 0}; anything else gets a sampled, non-certified check.
    bool radial = false;
};

/// Registry. Known names:
///   shifted-square r0      -> phi = |x|^2 - r0^2   (Example-1 family)
///   scaled-square c r0     -> phi = c (|x|^2 - r0^2)
///   neg-square             -> phi = -|x|^2         (inadmissible: concave)
///   linear                 -> phi = x_1            (inadmissible: unbounded sublevel)
WeightFunction make_weight(const std::string& name, const std::vector<double>& params = {});

struct SamplingSpec {
    double box_half_width = 3.0;  // sampled box [-w, w]^2, padded
    double pad = 0.2;
    int n_per_axis = 200;
    double certification_radius = 10.0;
};

struct AdmissibilityReport {
    double grad_inf = 0.0;   // inf |nabla_g phi|_g over sampled {phi > 0}
    double hess_inf = 0.0;   // min generalized eigenvalue of (nabla_g^2 phi, g)
    bool sublevel_bounded = false;
    bool certified = false;  // boundedness argument certified (radial builtin)
    bool admissible = false;
    int sample_count = 0;
};

AdmissibilityReport check_admissible(const WeightFunction& phi, const MetricField& metric,
                                     const SamplingSpec& sampling = {});

struct GeometricConstants {
    double m_frak = 0.0;  // max_{D bar} phi
    double delta = 0.0;   // min_{D bar} |nabla_g phi|_g
    double t_star = 0.0;  // m_frak / delta
};

GeometricConstants geometric_constants(const WeightFunction& phi, const MetricField& metric,
                                       const AnnularMesh& mesh);

enum class GammaRule { Midpoint, NearDelta, Explicit };

struct CarlemanParams {
    double m_frak = 0.0;
    double delta = 0.0;
    double t_star = 0.0;
    double T = 0.0;
    double tau = 0.0;
    double gamma = 0.0;
    double mu = 0.0;  // gamma (T - tau) - m_frak > 0
};

CarlemanParams carleman_params(const GeometricConstants& constants, double T, double tau,
                               GammaRule rule = GammaRule::Midpoint,
                               double explicit_gamma = 0.0);

struct WeightValue {
    double varphi = 0.0;  // phi(x) - gamma t
    double exp2s = 1.0;   // e^{2 s varphi}
    bool overflow = false;
};

/// Evaluates the space-time weight; flags instead of overflowing when
/// 2 s varphi exceeds the double exponent range.
WeightValue weight_eval(const WeightFunction& phi, const CarlemanParams& params, const Vec& x,
                        double t, double s);

}  // namespace wavelab
