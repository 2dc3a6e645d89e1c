#pragma once

#include <string>
#include <vector>

#include "wavelab/wave.hpp"
#include "wavelab/weight.hpp"

namespace wavelab {

/// Separated source f = a (x) b on Gamma x (0, T) with the class certificates
/// alpha <= |a| and |grad_tau a|_g <= beta evaluated on the Gamma nodes.
struct AdmissibleSource {
    std::vector<double> a;        // per Gamma node
    std::vector<double> a_theta;  // analytic d_theta a per node
    std::vector<double> b;        // per time step, b(0) = b'(0) = 0
    std::vector<double> b_prime;
    double alpha = 0.0;
    double beta = 0.0;
    double ratio = 0.0;  // beta / alpha
    std::string description;
};

/// Generators.
///   a: "constant" {c}; "trig" {c0, c1, c2, c3, c4} ->
///      c0 + c1 cos + c2 sin + c3 cos 2 + c4 sin 2 (trailing params optional).
///   b: "t2-smoothstep" {amp, ramp_end}; "t3" {amp};
///      "sin-ramp" {amp, omega} -> amp (1 - cos(omega t))^2;
///      "pulse" {amp, width, onset} -> amp sin^4(pi (t - onset) / width) on
///      [onset, onset + width] (compactly supported; the delayed-radiation
///      family for the Hoelder probe).
AdmissibleSource make_admissible_source(const std::string& a_name,
                                        const std::vector<double>& a_params,
                                        const std::string& b_name,
                                        const std::vector<double>& b_params,
                                        const AnnularMesh& mesh, const TimeGrid& tgrid,
                                        const MetricField& metric);

/// The tensor trace f(t, theta) = a(theta) b(t) fed to solve_forward.
BoundaryTimeField boundary_data(const AdmissibleSource& src, const TimeGrid& tgrid);

struct DataNorms {
    double D_full = 0.0;   // ||u||_{H1(Sigma)} + ||d_nu u||_{L2(Sigma)} (a-priori term)
    double D_outer = 0.0;  // same on Sigma_0 (the measurement)
    double f_norm = 0.0;   // ||f||_{L2((0,tau); H1(Gamma))}
    double a_norm = 0.0;   // ||a||_{H1(Gamma)}
    double b_norm = 0.0;   // ||b||_{L2((0,tau))}
};

DataNorms compute_data_norms(const ForwardSolution& sol, const AdmissibleSource& src,
                             double tau, const MetricField& metric, const AnnularMesh& mesh);

struct StabilityMember {
    std::string id;
    DataNorms norms;
};

struct StabilityReport {
    std::vector<StabilityMember> family;
    std::vector<double> theta_grid;
    std::vector<double> fitted_C;  // per theta: max over family of the ratio
    std::vector<double> spread;    // per theta: max ratio / min ratio
    double best_theta = 0.0;       // argmin of the spread
    double best_C = 0.0;
    double best_spread = 0.0;
    double implied_c = 0.0;             // c = mu (1 - theta) / theta at best_theta
    std::vector<double> s_balance;      // per member: log(D / D0) / (c + mu)
    double corollary_C = 0.0;           // max a_norm b_norm / (D0 + D^{1-th} D0^th)
    bool corollary_ok = false;
    double tangential_margin = 0.0;  // max over Sigma of |grad_tau u|_g - (beta/alpha)|f|
    bool anomaly = false;            // some member has D0 = 0 with f != 0
    bool success = false;            // some theta gives finite C with spread <= 10
};

std::vector<double> default_theta_grid();

StabilityReport verify_theorem(const std::vector<AdmissibleSource>& family,
                               const CarlemanParams& params,
                               const std::vector<double>& theta_grid,
                               const MetricField& metric, const AnnularMesh& mesh,
                               const TimeGrid& tgrid);

struct HolderProbe {
    double slope = 0.0;
    std::vector<double> log_d_outer;
    std::vector<double> log_f_norm;
};

/// Regression of log ||f|| against log D0 over a family designed so the outer
/// data shrinks while the a-priori term stays order one.
HolderProbe holder_exponent_probe(const std::vector<AdmissibleSource>& family, double tau,
                                  const MetricField& metric, const AnnularMesh& mesh,
                                  const TimeGrid& tgrid);

/// Min over the sweep of int_Sigma e^{2 s varphi} f^2 - e^{-2 gamma tau s}
/// ||f||^2_{L2(Gamma x (0, tau))}; nonnegative since varphi >= -gamma tau on
/// Gamma x (0, tau).
double theorem_lower_bound_margin(const AdmissibleSource& src, const WeightFunction& phi,
                                  const CarlemanParams& params,
                                  const std::vector<double>& s_sweep,
                                  const MetricField& metric, const AnnularMesh& mesh,
                                  const TimeGrid& tgrid);

}  // namespace wavelab
