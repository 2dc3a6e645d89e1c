#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "wavelab/carleman.hpp"
#include "wavelab/stability.hpp"

using namespace wavelab;

namespace {

struct Setup {
    WeightFunction phi = make_weight("shifted-square", {1.0});
    MetricField metric = make_metric("identity");
    AnnularMesh mesh = build_annulus_mesh(1.0, 2.0, 24, 48);
    TimeGrid tgrid = build_time_grid(2.0, 128);
    CarlemanParams params =
        carleman_params(geometric_constants(phi, metric, mesh), 2.0, 0.25);
};

std::vector<AdmissibleSource> mixed_family(const Setup& s) {
    std::vector<AdmissibleSource> fam;
    fam.push_back(make_admissible_source("constant", {1.0}, "t2-smoothstep", {1.0, 0.5},
                                         s.mesh, s.tgrid, s.metric));
    fam.push_back(make_admissible_source("trig", {2.0, 1.0}, "t2-smoothstep", {0.5, 1.0},
                                         s.mesh, s.tgrid, s.metric));
    fam.push_back(make_admissible_source("trig", {3.0, 0.5, 0.5}, "t3", {1.0}, s.mesh,
                                         s.tgrid, s.metric));
    fam.push_back(make_admissible_source("constant", {2.0}, "sin-ramp", {1.0, 2.0}, s.mesh,
                                         s.tgrid, s.metric));
    fam.push_back(make_admissible_source("trig", {2.0, 0.0, 0.0, 0.7}, "sin-ramp",
                                         {0.8, 3.0}, s.mesh, s.tgrid, s.metric));
    fam.push_back(make_admissible_source("trig", {1.5, 0.3, -0.4}, "t3", {0.6}, s.mesh,
                                         s.tgrid, s.metric));
    return fam;
}

}  // namespace

TEST_CASE("generator certificates match the symbolic oracles") {
    const Setup s;

    SUBCASE("constant profile") {
        const auto src = make_admissible_source("constant", {2.0}, "t3", {1.0}, s.mesh,
                                                s.tgrid, s.metric);
        CHECK(src.alpha == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(src.beta == 0.0);
        CHECK(src.ratio == 0.0);
    }

    SUBCASE("2 + cos") {
        // On Gamma (r = 1, identity metric) the tangential metric is r^2 = 1,
        // so beta = max |sin theta| = 1 exactly (theta = pi/2 is a node).
        const auto src = make_admissible_source("trig", {2.0, 1.0}, "t3", {1.0}, s.mesh,
                                                s.tgrid, s.metric);
        CHECK(src.alpha == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(src.beta == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(src.ratio == doctest::Approx(1.0).epsilon(1e-14));
    }

    SUBCASE("sign-changing profile is rejected") {
        CHECK_THROWS_AS(make_admissible_source("trig", {0.0, 1.0}, "t3", {1.0}, s.mesh,
                                               s.tgrid, s.metric),
                        ClassViolationError);
    }

    SUBCASE("all time generators vanish to first order at t = 0") {
        for (const auto& [name, p] :
             {std::pair<std::string, std::vector<double>>{"t2-smoothstep", {1.0, 0.7}},
              {"t3", {2.0}},
              {"sin-ramp", {1.0, 2.5}},
              {"pulse", {1.0, 0.4, 0.3}}}) {
            const auto src =
                make_admissible_source("constant", {1.0}, name, p, s.mesh, s.tgrid, s.metric);
            CHECK(src.b[0] == 0.0);
            CHECK(src.b_prime[0] == 0.0);
        }
    }

    SUBCASE("unknown generators are configuration errors") {
        CHECK_THROWS_AS(make_admissible_source("fourier", {1.0}, "t3", {1.0}, s.mesh,
                                               s.tgrid, s.metric),
                        ConfigError);
        CHECK_THROWS_AS(make_admissible_source("constant", {1.0}, "step", {1.0}, s.mesh,
                                               s.tgrid, s.metric),
                        ConfigError);
    }
}

TEST_CASE("data norms separate and scale linearly") {
    const Setup s;
    const auto src = make_admissible_source("trig", {2.0, 1.0}, "t2-smoothstep", {1.0, 0.8},
                                            s.mesh, s.tgrid, s.metric);
    const auto sol = solve_forward(boundary_data(src, s.tgrid), s.metric, s.mesh, s.tgrid);
    const DataNorms n = compute_data_norms(sol, src, s.params.tau, s.metric, s.mesh);

    CHECK(n.D_full > 0.0);
    CHECK(n.D_outer > 0.0);
    CHECK(n.f_norm > 0.0);
    // f = a (x) b, so the space-time norm separates into the product of the
    // spatial H1 norm and the temporal L2 norm up to the d_theta stencil error.
    CHECK(n.f_norm == doctest::Approx(n.a_norm * n.b_norm).epsilon(5e-3));

    const auto doubled = make_admissible_source("trig", {2.0, 1.0}, "t2-smoothstep",
                                                {2.0, 0.8}, s.mesh, s.tgrid, s.metric);
    const auto sol2 =
        solve_forward(boundary_data(doubled, s.tgrid), s.metric, s.mesh, s.tgrid);
    const DataNorms n2 = compute_data_norms(sol2, doubled, s.params.tau, s.metric, s.mesh);
    CHECK(n2.D_full == doctest::Approx(2.0 * n.D_full).epsilon(1e-10));
    CHECK(n2.D_outer == doctest::Approx(2.0 * n.D_outer).epsilon(1e-10));
    CHECK(n2.f_norm == doctest::Approx(2.0 * n.f_norm).epsilon(1e-10));
    CHECK(n2.b_norm == doctest::Approx(2.0 * n.b_norm).epsilon(1e-10));
    CHECK(n2.a_norm == doctest::Approx(n.a_norm).epsilon(1e-14));

    CHECK_THROWS_AS(compute_data_norms(sol, src, 0.0, s.metric, s.mesh), ConfigError);
    CHECK_THROWS_AS(compute_data_norms(sol, src, 3.0, s.metric, s.mesh), ConfigError);
}

TEST_CASE("zero amplitude gives identically zero norms") {
    const Setup s;
    const auto src = make_admissible_source("trig", {2.0, 1.0}, "pulse", {0.0, 0.4, 0.5},
                                            s.mesh, s.tgrid, s.metric);
    const auto sol = solve_forward(boundary_data(src, s.tgrid), s.metric, s.mesh, s.tgrid);
    const DataNorms n = compute_data_norms(sol, src, s.params.tau, s.metric, s.mesh);
    CHECK(n.D_full == 0.0);
    CHECK(n.D_outer == 0.0);
    CHECK(n.f_norm == 0.0);
    CHECK(n.b_norm == 0.0);
    CHECK(n.a_norm > 0.0);
}

TEST_CASE("verify_theorem certifies the mixed family") {
    const Setup s;
    const auto rep = verify_theorem(mixed_family(s), s.params, default_theta_grid(),
                                    s.metric, s.mesh, s.tgrid);

    CHECK(rep.success);
    CHECK_FALSE(rep.anomaly);
    CHECK(rep.best_spread <= 10.0);
    CHECK(rep.best_C > 0.0);
    CHECK(rep.best_theta > 0.0);
    CHECK(rep.best_theta < 1.0);
    CHECK(rep.implied_c == doctest::Approx(s.params.mu * (1.0 - rep.best_theta) /
                                           rep.best_theta)
                               .epsilon(1e-14));
    CHECK(rep.s_balance.size() == rep.family.size());
    for (const double sb : rep.s_balance) CHECK(sb > 0.0);
    CHECK(rep.corollary_ok);

    double scale = 0.0;
    for (const auto& m : rep.family) scale = std::max(scale, m.norms.D_full);
    CHECK(rep.tangential_margin <= 1e-8 * std::max(1.0, scale));
}

TEST_CASE("scalar multiples of one source give spread 1 at every theta") {
    const Setup s;
    std::vector<AdmissibleSource> fam;
    for (const double amp : {1.0, 2.0, 4.0, 8.0, 16.0})
        fam.push_back(make_admissible_source("trig", {2.0, 1.0}, "t2-smoothstep",
                                             {amp, 0.8}, s.mesh, s.tgrid, s.metric));
    const std::vector<double> thetas = {0.25, 0.5, 0.75};
    const auto rep = verify_theorem(fam, s.params, thetas, s.metric, s.mesh, s.tgrid);
    // Both numerator and denominator of the ratio are 1-homogeneous in the
    // amplitude, so the spread over the family is exactly 1.
    for (const double sp : rep.spread) CHECK(sp == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(rep.success);
}

TEST_CASE("verify_theorem input validation") {
    const Setup s;
    auto fam = mixed_family(s);
    fam.resize(4);
    CHECK_THROWS_AS(verify_theorem(fam, s.params, default_theta_grid(), s.metric, s.mesh,
                                   s.tgrid),
                    ConfigError);
    CHECK_THROWS_AS(verify_theorem(mixed_family(s), s.params, {0.5, 1.0}, s.metric, s.mesh,
                                   s.tgrid),
                    ConfigError);
}

TEST_CASE("holder probe recovers exponent 1 for a scaled family") {
    const Setup s;
    std::vector<AdmissibleSource> fam;
    for (const double amp : {1.0, 0.5, 0.25, 0.125})
        fam.push_back(make_admissible_source("trig", {2.0, 1.0}, "sin-ramp", {amp, 2.0},
                                             s.mesh, s.tgrid, s.metric));
    const auto probe = holder_exponent_probe(fam, s.params.tau, s.metric, s.mesh, s.tgrid);
    CHECK(probe.log_d_outer.size() == 4);
    CHECK(probe.slope == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("delayed pulses expose a genuine Hoelder exponent") {
    // Pulses launched closer and closer to T - (R - r0) / c radiate only a
    // truncated tail through Sigma_0 before the clock stops, so the outer data
    // decays faster than the source norm and the fitted exponent drops
    // strictly below 1.
    const WeightFunction phi = make_weight("shifted-square", {1.0});
    const MetricField metric = make_metric("identity");
    const AnnularMesh mesh = build_annulus_mesh(1.0, 2.0, 24, 48);
    const TimeGrid tgrid = build_time_grid(4.0, 256);
    const double tau = 3.2;

    std::vector<AdmissibleSource> fam;
    const double onsets[] = {0.4, 1.2, 2.0, 2.5, 2.8, 2.95};
    double amp = 1.0;
    for (const double onset : onsets) {
        fam.push_back(make_admissible_source("trig", {2.0, 1.0}, "pulse", {amp, 0.3, onset},
                                             mesh, tgrid, metric));
        amp *= 0.5;
    }
    const auto probe = holder_exponent_probe(fam, tau, metric, mesh, tgrid);
    CHECK(probe.slope > 0.0);
    CHECK(probe.slope < 1.0);
}

TEST_CASE("holder probe rejects degenerate families") {
    const Setup s;
    std::vector<AdmissibleSource> tiny;
    tiny.push_back(make_admissible_source("constant", {1.0}, "t3", {1.0}, s.mesh, s.tgrid,
                                          s.metric));
    tiny.push_back(make_admissible_source("constant", {1.0}, "t3", {0.0}, s.mesh, s.tgrid,
                                          s.metric));
    CHECK_THROWS_AS(holder_exponent_probe(tiny, s.params.tau, s.metric, s.mesh, s.tgrid),
                    ConfigError);

    std::vector<AdmissibleSource> same(4, make_admissible_source("constant", {1.0}, "t3",
                                                                 {1.0}, s.mesh, s.tgrid,
                                                                 s.metric));
    CHECK_THROWS_AS(holder_exponent_probe(same, s.params.tau, s.metric, s.mesh, s.tgrid),
                    ConfigError);
}

TEST_CASE("weighted trace dominates the truncated source norm") {
    const Setup s;
    const auto src = make_admissible_source("trig", {2.0, 1.0}, "t2-smoothstep", {1.0, 0.8},
                                            s.mesh, s.tgrid, s.metric);
    const auto sweep = default_s_sweep(s.params);
    const double margin = theorem_lower_bound_margin(src, s.phi, s.params, sweep, s.metric,
                                                     s.mesh, s.tgrid);
    CHECK(margin >= -1e-12);
    CHECK(std::isfinite(margin));
}
