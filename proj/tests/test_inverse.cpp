#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "wavelab/inverse.hpp"

using namespace wavelab;

namespace {

struct Setup {
    MetricField metric = make_metric("identity");
    AnnularMesh mesh = build_annulus_mesh(1.0, 2.0, 24, 48);
    TimeGrid tgrid = build_time_grid(2.0, 128);

    std::vector<double> smooth_b() const {
        AdmissibleSource src = make_admissible_source("constant", {1.0}, "t2-smoothstep",
                                                      {1.0, 0.8}, mesh, tgrid, metric);
        return src.b;
    }
};

OuterData zero_data(const Setup& s) {
    OuterData d;
    d.u_trace = make_boundary_time_field(s.mesh.n_theta, s.tgrid);
    d.du_trace = make_boundary_time_field(s.mesh.n_theta, s.tgrid);
    return d;
}

double dot(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

}  // namespace

TEST_CASE("zero profile against zero data is a stationary point") {
    const Setup s;
    const std::vector<double> b = s.smooth_b();
    const std::vector<double> a(s.mesh.n_theta, 0.0);
    const Objective obj =
        objective_and_gradient(a, b, zero_data(s), 1e-3, s.metric, s.mesh, s.tgrid);
    CHECK(obj.value == 0.0);
    for (const double g : obj.gradient) CHECK(g == 0.0);
}

TEST_CASE("adjoint gradient matches central finite differences") {
    const Setup s;
    const std::vector<double> b = s.smooth_b();
    const OuterData data = synthesize_outer_data("trig", {2.0, 1.0}, "t2-smoothstep",
                                                 {1.0, 0.8}, s.metric, s.mesh, s.tgrid);
    const double lambda = 1e-4;

    std::mt19937_64 rng(91);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int n = s.mesh.n_theta;

    for (int base = 0; base < 3; ++base) {
        std::vector<double> a(n);
        for (double& v : a) v = 1.5 + 0.5 * gauss(rng);
        const Objective obj =
            objective_and_gradient(a, b, data, lambda, s.metric, s.mesh, s.tgrid);

        double a_norm = 0.0;
        for (const double v : a) a_norm = std::max(a_norm, std::abs(v));
        const double h = 1e-5 * a_norm;

        const int n_dirs = base == 0 ? 10 : 3;
        for (int dir = 0; dir < n_dirs; ++dir) {
            std::vector<double> da(n);
            for (double& v : da) v = gauss(rng);
            std::vector<double> ap(a), am(a);
            for (int j = 0; j < n; ++j) {
                ap[j] += h * da[j];
                am[j] -= h * da[j];
            }
            const double jp =
                objective_and_gradient(ap, b, data, lambda, s.metric, s.mesh, s.tgrid).value;
            const double jm =
                objective_and_gradient(am, b, data, lambda, s.metric, s.mesh, s.tgrid).value;
            const double fd = (jp - jm) / (2.0 * h);
            const double an = dot(obj.gradient, da);
            CHECK(an == doctest::Approx(fd).epsilon(1e-4));
        }
    }
}

TEST_CASE("input validation") {
    const Setup s;
    const std::vector<double> b = s.smooth_b();
    const std::vector<double> a(s.mesh.n_theta, 1.0);
    const OuterData data = zero_data(s);

    std::vector<double> bad_a(10, 1.0);
    CHECK_THROWS_AS(objective_and_gradient(bad_a, b, data, 0.0, s.metric, s.mesh, s.tgrid),
                    ConfigError);
    CHECK_THROWS_AS(objective_and_gradient(a, b, data, -1.0, s.metric, s.mesh, s.tgrid),
                    ConfigError);
    std::vector<double> bad_b = b;
    bad_b[0] = 1.0;
    CHECK_THROWS_AS(objective_and_gradient(a, bad_b, data, 0.0, s.metric, s.mesh, s.tgrid),
                    ClassViolationError);
}

TEST_CASE("zero data drives the reconstruction to the zero profile") {
    const Setup s;
    const auto res =
        reconstruct(zero_data(s), s.smooth_b(), 1e-6, 50, s.metric, s.mesh, s.tgrid);
    double sup = 0.0;
    for (const double v : res.a_hat) sup = std::max(sup, std::abs(v));
    CHECK(sup <= 1e-6);
    for (std::size_t i = 1; i < res.objective_history.size(); ++i)
        CHECK(res.objective_history[i] <= res.objective_history[i - 1]);
}

TEST_CASE("noiseless twin experiment recovers 2 + cos to 5 percent") {
    const Setup s;
    const OuterData data = synthesize_outer_data("trig", {2.0, 1.0}, "t2-smoothstep",
                                                 {1.0, 0.8}, s.metric, s.mesh, s.tgrid,
                                                 /*refine=*/2);
    const AdmissibleSource truth = make_admissible_source("trig", {2.0, 1.0}, "t2-smoothstep",
                                                          {1.0, 0.8}, s.mesh, s.tgrid,
                                                          s.metric);
    const auto res =
        reconstruct(data, truth.b, 1e-6, 300, s.metric, s.mesh, s.tgrid, &truth.a);
    CHECK(res.rel_error >= 0.0);
    CHECK(res.rel_error <= 0.05);
    for (std::size_t i = 1; i < res.objective_history.size(); ++i)
        CHECK(res.objective_history[i] <= res.objective_history[i - 1]);
    // Post-hoc class certificate of the recovered profile.
    CHECK(res.min_abs_a > 0.5);
}

TEST_CASE("twin-experiment error decreases under refinement") {
    const Setup coarse;
    MetricField metric = make_metric("identity");
    AnnularMesh fine_mesh = build_annulus_mesh(1.0, 2.0, 48, 96);
    TimeGrid fine_tg = build_time_grid(2.0, 288);

    const OuterData d0 = synthesize_outer_data("trig", {2.0, 1.0}, "t2-smoothstep",
                                               {1.0, 0.8}, coarse.metric, coarse.mesh,
                                               coarse.tgrid, 2);
    const AdmissibleSource t0 = make_admissible_source("trig", {2.0, 1.0}, "t2-smoothstep",
                                                       {1.0, 0.8}, coarse.mesh, coarse.tgrid,
                                                       coarse.metric);
    const auto r0 = reconstruct(d0, t0.b, 1e-9, 500, coarse.metric, coarse.mesh,
                                coarse.tgrid, &t0.a);

    const OuterData d1 = synthesize_outer_data("trig", {2.0, 1.0}, "t2-smoothstep",
                                               {1.0, 0.8}, metric, fine_mesh, fine_tg, 2);
    const AdmissibleSource t1 = make_admissible_source("trig", {2.0, 1.0}, "t2-smoothstep",
                                                       {1.0, 0.8}, fine_mesh, fine_tg, metric);
    const auto r1 = reconstruct(d1, t1.b, 1e-9, 500, metric, fine_mesh, fine_tg, &t1.a);
    CHECK(r1.rel_error < r0.rel_error);
}

TEST_CASE("reconstruction error grows with the noise level") {
    const Setup s;
    const NoiseSweep sweep =
        noise_sweep({0.001, 0.005, 0.01, 0.02, 0.05}, 2026, "trig", {2.0, 1.0},
                    "t2-smoothstep", {1.0, 0.8}, 1e-6, 150, s.metric, s.mesh, s.tgrid);
    CHECK(sweep.rel_errors.size() == 5);
    CHECK(sweep.slope > 0.0);
    // Rank correlation across the sweep: larger noise worse on average.
    int concordant = 0, discordant = 0;
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = i + 1; j < 5; ++j)
            (sweep.rel_errors[j] > sweep.rel_errors[i] ? concordant : discordant) += 1;
    CHECK(concordant > discordant);
}

TEST_CASE("noise injection is reproducible and scales with the level") {
    const Setup s;
    OuterData d1 = synthesize_outer_data("trig", {2.0, 1.0}, "t2-smoothstep", {1.0, 0.8},
                                         s.metric, s.mesh, s.tgrid);
    OuterData d2 = d1;
    const OuterData clean = d1;
    add_noise(d1, 0.01, 7);
    add_noise(d2, 0.01, 7);
    CHECK(d1.u_trace.values == d2.u_trace.values);
    CHECK(d1.du_trace.values == d2.du_trace.values);

    OuterData d3 = clean;
    add_noise(d3, 0.01, 8);
    CHECK(d1.u_trace.values != d3.u_trace.values);

    double sup = 0.0, dev = 0.0;
    for (const double v : clean.u_trace.values) sup = std::max(sup, std::abs(v));
    for (std::size_t i = 0; i < clean.u_trace.values.size(); ++i)
        dev = std::max(dev, std::abs(d1.u_trace.values[i] - clean.u_trace.values[i]));
    CHECK(dev <= 0.01 * sup * 6.0);
    CHECK(dev > 0.0);
}
