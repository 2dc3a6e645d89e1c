#pragma once

#include <cstdint>

#include "wavelab/stability.hpp"

namespace wavelab {

/// Measurements on Sigma_0: the trace and the g-normal derivative.
struct OuterData {
    BoundaryTimeField u_trace;
    BoundaryTimeField du_trace;
    double noise_level = 0.0;
};

/// Solves the forward problem for a (x) b and records the Sigma_0 data.
/// refine > 1 generates the data on a grid refined in r, theta and t and
/// restricts it to the inversion grid (inverse-crime mitigation); the
/// refinement keeps the boundary nodes and time steps nested.
OuterData synthesize_outer_data(const std::string& a_name, const std::vector<double>& a_params,
                                const std::string& b_name, const std::vector<double>& b_params,
                                const MetricField& metric, const AnnularMesh& mesh,
                                const TimeGrid& tgrid, int refine = 1);

/// Additive Gaussian noise, relative to the sup-norm of each field,
/// independent per node; the streams for the two fields are split from the
/// seed by name so the realization is reproducible.
void add_noise(OuterData& data, double level, std::uint64_t seed);

struct Objective {
    double value = 0.0;
    std::vector<double> gradient;  // per Gamma node
};

/// J(a) = 1/2 ||u(a (x) b) - u_trace||^2_{L2(Sigma_0)}
///      + 1/2 ||d_nu u(a (x) b) - du_trace||^2_{L2(Sigma_0)}
///      + (reg_lambda / 2) ||a||^2_{H1(Gamma)}.
/// The gradient is the exact transpose of the discrete forward map
/// (discretize-then-optimize): the data residual is propagated backwards
/// through the same leapfrog recursion the solver runs forwards.
Objective objective_and_gradient(const std::vector<double>& a, const std::vector<double>& b,
                                 const OuterData& data, double reg_lambda,
                                 const MetricField& metric, const AnnularMesh& mesh,
                                 const TimeGrid& tgrid);

struct ReconstructionResult {
    std::vector<double> a_hat;
    std::vector<double> objective_history;  // non-increasing along accepted iterates
    double rel_error = -1.0;                // L2(Gamma), when the truth is known
    double reg_lambda = 0.0;
    int iterations = 0;
    double min_abs_a = 0.0;        // post-hoc class check: min |a_hat|
    double max_tangential = 0.0;   // post-hoc class check: max |grad_tau a_hat|_g
};

/// Limited-memory quasi-Newton descent with backtracking line search from
/// a = 0; stops when the gradient norm falls below 1e-8 of its initial value
/// or after max_iter iterations. A step on which no decrease can be found is
/// a line-search failure (StabilityError) unless the step size has already
/// shrunk to round-off.
ReconstructionResult reconstruct(const OuterData& data, const std::vector<double>& b,
                                 double reg_lambda, int max_iter, const MetricField& metric,
                                 const AnnularMesh& mesh, const TimeGrid& tgrid,
                                 const std::vector<double>* a_truth = nullptr);

struct NoiseSweep {
    std::vector<double> levels;
    std::vector<double> rel_errors;
    double slope = 0.0;  // log-log regression of rel_error against level
};

NoiseSweep noise_sweep(const std::vector<double>& levels, std::uint64_t seed,
                       const std::string& a_name, const std::vector<double>& a_params,
                       const std::string& b_name, const std::vector<double>& b_params,
                       double reg_lambda, int max_iter, const MetricField& metric,
                       const AnnularMesh& mesh, const TimeGrid& tgrid);

/// Deterministic sub-stream of a seed, keyed by name.
std::uint64_t stream_seed(std::uint64_t seed, const std::string& name);

}  // namespace wavelab
