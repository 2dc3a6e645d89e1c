#pragma once

#include <array>
#include <memory>

#include "wavelab/wave.hpp"
#include "wavelab/weight.hpp"

namespace wavelab {

/// P_s z = e^{s varphi} Box(e^{-s varphi} z) and its split P+ / P-. The
/// coefficient simplifications for varphi = phi(x) - gamma t (varphi' = -gamma,
/// Box varphi = -Delta_g phi, varphi'' = 0) are applied analytically.
struct ConjugatedDecomposition {
    SpaceTimeField P;
    SpaceTimeField P_plus;
    SpaceTimeField P_minus;
    double s = 0.0;
    bool overflow = false;
};

ConjugatedDecomposition conjugate_decompose(const SpaceTimeField& z, const WeightFunction& phi,
                                            const CarlemanParams& params, double s,
                                            const MetricField& metric);

/// The six integrals of the Carleman inequality, assembled for one field and
/// one value of s. Note: the inequality's LHS gradient term is implemented
/// with the metric norm |grad_g u|_g^2 throughout (statement-vs-proof
/// convention; recorded, not normalized away).
struct CarlemanSides {
    double lhs_volume = 0.0;            // int_Q e^{2s varphi}(s |grad u|_g^2 + s^3 u^2)
    double lhs_sigma = 0.0;             // int_Sigma e^{2s varphi} s^3 u^2
    double rhs_source = 0.0;            // int_Q e^{2s varphi} |Box u|^2
    double rhs_sigma_tangential = 0.0;  // int_Sigma e^{2s varphi} s |grad_tau u|_g^2
    double rhs_sigma0 = 0.0;    // int_{Sigma_0} e^{2s varphi}(s u_t^2 + s |grad u|_g^2 + s^3 u^2)
    double rhs_final_time = 0.0;  // same integrand on D x {T}
    double s = 0.0;

    double lhs_total() const { return lhs_volume + lhs_sigma; }
    double rhs_total() const {
        return rhs_source + rhs_sigma_tangential + rhs_sigma0 + rhs_final_time;
    }
};

/// s-independent per-node data of one field, so a full s-sweep costs one pass
/// of weighted sums per s instead of re-differentiating the field.
class CarlemanPrecomp {
public:
    struct Data;
    CarlemanPrecomp(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
    const Data& data() const { return *data_; }

private:
    std::shared_ptr<const Data> data_;
};

CarlemanPrecomp precompute_carleman(const SpaceTimeField& u, const WeightFunction& phi,
                                    const CarlemanParams& params, const MetricField& metric);

CarlemanSides assemble_carleman_sides(const CarlemanPrecomp& pre, double s);
CarlemanSides assemble_carleman_sides(const SpaceTimeField& u, const WeightFunction& phi,
                                      const CarlemanParams& params, double s,
                                      const MetricField& metric);

/// Term-by-term ledger of the Appendix-B identity
///   (P+ z, P- z)_g + B = V_convexity + V_lower_order + V_weight
/// with B = B_{Sigma_0} + B_Sigma + B_T. For varphi = phi(x) - gamma t every
/// term containing d_t Box varphi or d_t^2 Box varphi vanishes identically.
struct IbpLedger {
    double inner_product = 0.0;       // (P+ z, P- z)_g over Q
    std::array<double, 9> i_terms{};  // I_1 .. I_9
    double volume_convexity = 0.0;    // int_Q 2s Hess_g phi(grad z, grad z)
    double volume_lower_order = 0.0;  // int_Q s <grad(Delta_g phi), grad z>_g z
    double volume_weight = 0.0;       // int_Q s^3 <grad |grad phi|_g^2, grad phi>_g z^2
    double b_sigma0 = 0.0;
    double b_sigma = 0.0;
    double b_T = 0.0;
    double residual = 0.0;        // inner_product + B - (sum of volume terms)
    double i_sum_residual = 0.0;  // sum_k I_k - inner_product

    double boundary_total() const { return b_sigma0 + b_sigma + b_T; }
    double volume_total() const { return volume_convexity + volume_lower_order + volume_weight; }
};

IbpLedger verify_ibp_identity(const SpaceTimeField& z, const WeightFunction& phi,
                              const CarlemanParams& params, double s,
                              const MetricField& metric);

/// Residuals of the pointwise convexity identities at one point.
struct PointwiseResiduals {
    double lhs = 0.0;  // <grad_g |grad_g phi|_g^2, grad_g phi>_g (FD of the norm map)
    double rhs = 0.0;  // 2 Hess_g phi(grad_g phi, grad_g phi) (analytic)
    double residual1 = 0.0;
    double residual2 = 0.0;  // |varphi''|, identically zero for the shipped weight
};

PointwiseResiduals pointwise_identities(const Vec& x, const WeightFunction& phi,
                                        const MetricField& metric);

struct CarlemanReport {
    std::vector<double> s_values;
    std::vector<double> ratios;  // min over the corpus of rhs_total / lhs_total
    double empirical_s_star = 0.0;
    double fitted_C = 0.0;
    double slope_gradient = 0.0;  // log-log slope in s of the mass-normalized s^1 term
    double slope_zeroth = 0.0;    // same for the s^3 term
    int corpus_size = 0;
    int excluded = 0;  // degenerate (identically zero) members skipped
};

/// Logarithmic sweep of [0.1, 100] rescaled by 1 / m_frak.
std::vector<double> default_s_sweep(const CarlemanParams& params, int n = 25);

CarlemanReport verify_carleman(const std::vector<SpaceTimeField>& corpus,
                               const WeightFunction& phi, const CarlemanParams& params,
                               const std::vector<double>& s_sweep, const MetricField& metric);

/// Margins of the energy estimate E(u)(t) <= e^t (||u||_{H1(Upsilon)}^2 +
/// ||d_nu u||_{L2(Upsilon)}^2), Upsilon = (Gamma u Gamma_0) x (0, T).
struct EnergyReport {
    std::vector<double> margins;  // rhs(t_k) - E(u)(t_k)
    double boundary_bound = 0.0;  // the s-independent bracket
    double max_energy = 0.0;
    double tolerance = 0.0;  // 1e-6 max E
    bool ok = false;
};

EnergyReport verify_energy_estimate(const ForwardSolution& sol, const MetricField& metric);

/// Max over Sigma samples of Q(z', d_nu z) - C z^2 where Q is the Appendix-B
/// quadratic form -delta |z'|^2 + (2 gamma z' + Delta_g phi z) d_nu z -
/// delta |d_nu z|^2 and C = delta (Delta_g phi)^2 / (4 (delta^2 - gamma^2));
/// nonpositive up to roundoff by completing the square.
double sigma_sign_structure_margin(const SpaceTimeField& z, const WeightFunction& phi,
                                   const CarlemanParams& params, const MetricField& metric);

}  // namespace wavelab
