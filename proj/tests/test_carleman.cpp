#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "wavelab/carleman.hpp"

using namespace wavelab;

namespace {

CarlemanParams example_params() {
    const WeightFunction phi = make_weight("shifted-square", {1.0});
    const MetricField id = make_metric("identity");
    const AnnularMesh mesh = build_annulus_mesh(1.0, 2.0, 48, 96);
    return carleman_params(geometric_constants(phi, id, mesh), 2.0, 0.25);
}

// Smooth bump vanishing with its radial derivative on both rings.
double bump(const AnnularMesh& mesh, int i, int j) {
    const double r = mesh.r[i];
    return sqr((r - mesh.r0) * (mesh.R - r)) *
           (1.0 + 0.3 * mesh.cos_t[j] + 0.2 * std::sin(2.0 * mesh.theta[j]));
}

SpaceTimeField bump_field(const AnnularMesh& mesh, const TimeGrid& tg,
                          double (*profile)(double)) {
    SpaceTimeField u = make_space_time_field(mesh, tg);
    for (int k = 0; k <= tg.n_t; ++k)
        for (int i = 0; i < mesh.n_r; ++i)
            for (int j = 0; j < mesh.n_theta; ++j)
                u.at(k, mesh.idx(i, j)) = profile(tg.t(k)) * bump(mesh, i, j);
    return u;
}

double t_squared(double t) { return t * t; }

double rel_l2(const SpaceTimeField& a, const SpaceTimeField& b, const SpaceTimeField& ref) {
    double num = 0.0, den = 0.0;
    for (std::size_t n = 0; n < a.values.size(); ++n) {
        num += sqr(a.values[n] - b.values[n]);
        den += sqr(ref.values[n]);
    }
    return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("conjugation at s = 0 is the plain wave operator") {
    const WeightFunction phi = make_weight("shifted-square", {1.0});
    const MetricField id = make_metric("identity");
    const AnnularMesh mesh = build_annulus_mesh(1.0, 2.0, 32, 64);
    const TimeGrid tg = build_time_grid(2.0, 32);
    const CarlemanParams p = example_params();

    SpaceTimeField z = make_space_time_field(mesh, tg);
    for (int k = 0; k <= tg.n_t; ++k)
        for (int i = 0; i < mesh.n_r; ++i)
            for (int j = 0; j < mesh.n_theta; ++j) {
                const Vec x = mesh.node(i, j);
                z.at(k, mesh.idx(i, j)) = std::sin(x[0] + tg.t(k)) * x[1];
            }
    const ConjugatedDecomposition dec = conjugate_decompose(z, phi, p, 0.0, id);
    CHECK_FALSE(dec.overflow);
    for (std::size_t n = 0; n < z.values.size(); ++n) {
        CHECK(dec.P_minus.values[n] == 0.0);
        CHECK(dec.P.values[n] == doctest::Approx(dec.P_plus.values[n]).epsilon(1e-12));
    }
}

TEST_CASE("P- on a time-independent field matches the symbolic oracle") {
    const WeightFunction phi = make_weight("shifted-square", {1.0});
    const MetricField id = make_metric("identity");
    const AnnularMesh mesh = build_annulus_mesh(1.0, 2.0, 48, 96);
    const TimeGrid tg = build_time_grid(1.0, 16);
    const CarlemanParams p = example_params();
    const double s = 1.7;

    SpaceTimeField z = make_space_time_field(mesh, tg);
    for (int k = 0; k <= tg.n_t; ++k)
        for (int i = 0; i < mesh.n_r; ++i)
            for (int j = 0; j < mesh.n_theta; ++j) {
                const Vec x = mesh.node(i, j);
                z.at(k, mesh.idx(i, j)) = x[0] * x[1];
            }
    const ConjugatedDecomposition dec = conjugate_decompose(z, phi, p, s, id);
    // P- z = 2s <grad phi, grad z> + s Delta phi z = 8s x1 x2 + 4s x1 x2.
    for (int i = 0; i < mesh.n_r; ++i)
        for (int j = 0; j < mesh.n_theta; ++j) {
            const Vec x = mesh.node(i, j);
            CHECK(dec.P_minus.at(0, mesh.idx(i, j)) ==
                  doctest::Approx(12.0 * s * x[0] * x[1]).epsilon(5e-3));
        }
}

TEST_CASE("conjugation identity converges at second order") {
    const WeightFunction phi = make_weight("shifted-square", {1.0});
    const MetricField cm = make_metric("conformal-poly", {0.0, 0.1, -0.05, 0.04, 0.02, 0.0});
    const CarlemanParams p = example_params();
    const double s = 2.0;

    std::vector<double> errs;
    for (const auto& [n, nt] : {std::pair{24, 32}, std::pair{48, 64}, std::pair{96, 128}}) {
        const AnnularMesh mesh = build_annulus_mesh(1.0, 2.0, n, 2 * n);
        const TimeGrid tg = build_time_grid(2.0, nt);
        SpaceTimeField z = make_space_time_field(mesh, tg);
        for (int k = 0; k <= tg.n_t; ++k)
            for (int i = 0; i < mesh.n_r; ++i)
                for (int j = 0; j < mesh.n_theta; ++j) {
                    const Vec x = mesh.node(i, j);
                    z.at(k, mesh.idx(i, j)) =
                        sqr(tg.t(k)) * std::cos(x[0] + 0.4 * x[1]);
                }
        const ConjugatedDecomposition dec = conjugate_decompose(z, phi, p, s, cm);
        SpaceTimeField sum = dec.P_plus;
        for (std::size_t m = 0; m < sum.values.size(); ++m)
            sum.values[m] += dec.P_minus.values[m];
        errs.push_back(rel_l2(dec.P, sum, dec.P));
    }
    CHECK(std::log2(errs[0] / errs[1]) > 1.9);
    CHECK(std::log2(errs[1] / errs[2]) > 1.9);
}

TEST_CASE("carleman sides basics") {
    const WeightFunction phi = make_weight("shifted-square", {1.0});
    const MetricField id = make_metric("identity");
    const AnnularMesh mesh = build_annulus_mesh(1.0, 2.0, 32, 64);
    const TimeGrid tg = build_time_grid(2.0, 64);
    const CarlemanParams p = example_params();

    SUBCASE("zero field") {
        const SpaceTimeField zero = make_space_time_field(mesh, tg);
        const CarlemanSides sides = assemble_carleman_sides(zero, phi, p, 2.0, id);
        CHECK(sides.lhs_total() == 0.0);
        CHECK(sides.rhs_total() == 0.0);
    }

    SUBCASE("nonnegativity and s = 0 degeneration") {
        const SpaceTimeField u = bump_field(mesh, tg, t_squared);
        const CarlemanSides sides = assemble_carleman_sides(u, phi, p, 3.0, id);
        CHECK(sides.lhs_volume > 0.0);
        CHECK(sides.lhs_sigma >= 0.0);
        CHECK(sides.rhs_source > 0.0);
        CHECK(sides.rhs_sigma_tangential >= 0.0);
        CHECK(sides.rhs_sigma0 >= 0.0);
        CHECK(sides.rhs_final_time >= 0.0);

        const CarlemanSides s0 = assemble_carleman_sides(u, phi, p, 0.0, id);
        CHECK(s0.lhs_total() == 0.0);
    }

    SUBCASE("nonzero initial data is rejected") {
        SpaceTimeField u = make_space_time_field(mesh, tg);
        for (auto& v : u.values) v = 1.0;
        CHECK_THROWS_AS(assemble_carleman_sides(u, phi, p, 1.0, id), ClassViolationError);
    }
}

TEST_CASE("integration-by-parts ledger") {
    const WeightFunction phi = make_weight("shifted-square", {1.0});
    const MetricField id = make_metric("identity");
    const CarlemanParams p = example_params();

    SUBCASE("zero field") {
        const AnnularMesh mesh = build_annulus_mesh(1.0, 2.0, 32, 64);
        const TimeGrid tg = build_time_grid(2.0, 32);
        const IbpLedger led =
            verify_ibp_identity(make_space_time_field(mesh, tg), phi, p, 1.0, id);
        CHECK(led.inner_product == 0.0);
        CHECK(led.residual == 0.0);
        for (const double v : led.i_terms) CHECK(v == 0.0);
    }

    SUBCASE("identity residual <= 5% at base grid, decreasing under refinement") {
        std::vector<double> rel;
        for (const auto& [n, nt] :
             {std::pair{48, 64}, std::pair{96, 128}, std::pair{192, 256}}) {
            const AnnularMesh mesh = build_annulus_mesh(1.0, 2.0, n, 2 * n);
            const TimeGrid tg = build_time_grid(2.0, nt);
            const SpaceTimeField z = bump_field(mesh, tg, t_squared);
            const IbpLedger led = verify_ibp_identity(z, phi, p, 1.0, id);
            const double scale = std::abs(led.inner_product) +
                                 std::abs(led.boundary_total()) +
                                 std::abs(led.volume_total());
            CHECK(std::abs(led.i_sum_residual) <= 1e-10 * scale);
            rel.push_back(std::abs(led.residual) / scale);
        }
        CHECK(rel[0] <= 0.05);
        CHECK(rel[1] < rel[0]);
        CHECK(rel[2] < rel[1]);
    }

    SUBCASE("interior-supported field has no boundary contribution") {
        const AnnularMesh mesh = build_annulus_mesh(1.0, 2.0, 48, 96);
        const TimeGrid tg = build_time_grid(2.0, 64);
        // Support strictly inside (r0, R) x (0, T).
        SpaceTimeField z = make_space_time_field(mesh, tg);
        for (int k = 0; k <= tg.n_t; ++k) {
            const double t = tg.t(k);
            const double bt = (t > 0.4 && t < 1.6) ? std::pow((t - 0.4) * (1.6 - t), 3) : 0.0;
            for (int i = 0; i < mesh.n_r; ++i) {
                const double r = mesh.r[i];
                const double br =
                    (r > 1.2 && r < 1.8) ? std::pow((r - 1.2) * (1.8 - r), 3) : 0.0;
                for (int j = 0; j < mesh.n_theta; ++j)
                    z.at(k, mesh.idx(i, j)) = bt * br * (1.0 + 0.5 * mesh.cos_t[j]);
            }
        }
        const IbpLedger led = verify_ibp_identity(z, phi, p, 1.5, id);
        const double scale = std::abs(led.inner_product) + std::abs(led.volume_total());
        CHECK(scale > 0.0);
        CHECK(std::abs(led.b_sigma) <= 1e-12 * scale);
        CHECK(std::abs(led.b_sigma0) <= 1e-12 * scale);
        CHECK(std::abs(led.b_T) <= 1e-12 * scale);
    }
}

TEST_CASE("pointwise convexity identities") {
    const WeightFunction phi = make_weight("shifted-square", {1.0});

    SUBCASE("flat-metric hand oracle at (2, 0)") {
        const MetricField id = make_metric("identity");
        const PointwiseResiduals pr = pointwise_identities({2.0, 0.0}, phi, id);
        CHECK(pr.lhs == doctest::Approx(64.0).epsilon(1e-10));
        CHECK(pr.rhs == doctest::Approx(64.0).epsilon(1e-12));
        CHECK(pr.residual1 <= 1e-8);
        CHECK(pr.residual2 == 0.0);
    }

    SUBCASE("conformal metric at scattered points") {
        const MetricField cm = make_metric("conformal-trig", {0.15, 0.8, 1.1});
        for (const Vec x : {Vec{1.3, 0.2}, Vec{-0.9, 1.4}, Vec{0.4, -1.7}, Vec{-1.5, -0.8}}) {
            const PointwiseResiduals pr = pointwise_identities(x, phi, cm);
            const double scale = std::max(1.0, std::abs(pr.rhs));
            CHECK(pr.residual1 <= 1e-8 * scale);
        }
    }
}

TEST_CASE("carleman report over a small corpus") {
    const WeightFunction phi = make_weight("shifted-square", {1.0});
    const MetricField id = make_metric("identity");
    const AnnularMesh mesh = build_annulus_mesh(1.0, 2.0, 32, 64);
    const TimeGrid tg = build_time_grid(2.0, 64);
    const CarlemanParams p = example_params();

    std::vector<SpaceTimeField> corpus;
    corpus.push_back(make_space_time_field(mesh, tg));  // degenerate, must be excluded
    for (int m = 0; m < 3; ++m) {
        SpaceTimeField u = make_space_time_field(mesh, tg);
        for (int k = 0; k <= tg.n_t; ++k)
            for (int i = 0; i < mesh.n_r; ++i)
                for (int j = 0; j < mesh.n_theta; ++j)
                    u.at(k, mesh.idx(i, j)) =
                        sqr(tg.t(k)) * bump(mesh, i, j) *
                        (1.0 + 0.2 * m * std::cos((m + 1.0) * mesh.theta[j]));
        corpus.push_back(std::move(u));
    }

    const std::vector<double> sweep = default_s_sweep(p);
    CHECK(sweep.size() == 25u);
    CHECK(sweep.front() == doctest::Approx(0.1 / 3.0).epsilon(1e-12));
    CHECK(sweep.back() == doctest::Approx(100.0 / 3.0).epsilon(1e-12));

    const CarlemanReport rep = verify_carleman(corpus, phi, p, sweep, id);
    CHECK(rep.excluded == 1);
    CHECK(rep.corpus_size == 4);
    CHECK(rep.fitted_C > 0.0);
    CHECK(rep.empirical_s_star >= sweep.front());
    CHECK(rep.slope_gradient == doctest::Approx(1.0).epsilon(0.1));
    CHECK(rep.slope_zeroth == doctest::Approx(3.0).epsilon(0.1));

    CHECK_THROWS_AS(verify_carleman({}, phi, p, sweep, id), ConfigError);
}

TEST_CASE("energy estimate margins") {
    const MetricField id = make_metric("identity");
    const AnnularMesh mesh = build_annulus_mesh(1.0, 2.0, 32, 64);
    const TimeGrid tg = build_time_grid(2.0, 128);
    BoundaryTimeField f = make_boundary_time_field(mesh.n_theta, tg);
    for (int k = 0; k <= tg.n_t; ++k)
        for (int j = 0; j < mesh.n_theta; ++j)
            f.at(k, j) = sqr(tg.t(k)) * (2.0 + mesh.cos_t[j]);
    const ForwardSolution sol = solve_forward(f, id, mesh, tg);

    const EnergyReport rep = verify_energy_estimate(sol, id);
    CHECK(rep.ok);
    CHECK(rep.max_energy > 0.0);
    for (const double m : rep.margins) CHECK(m >= -rep.tolerance);

    // Quadratic homogeneity.
    BoundaryTimeField f2 = f;
    for (auto& v : f2.values) v *= 2.0;
    const EnergyReport rep2 = verify_energy_estimate(solve_forward(f2, id, mesh, tg), id);
    for (std::size_t k = 0; k < rep.margins.size(); ++k)
        CHECK(rep2.margins[k] ==
              doctest::Approx(4.0 * rep.margins[k]).epsilon(1e-9).scale(rep.max_energy));

    // A perturbed field is not a discrete solution.
    ForwardSolution broken = sol;
    broken.u.at(tg.n_t / 2, mesh.idx(mesh.n_r / 2, 3)) += 1.0;
    CHECK_THROWS_AS(verify_energy_estimate(broken, id), ClassViolationError);
}

TEST_CASE("sigma quadratic form is controlled by the complete-the-square constant") {
    const WeightFunction phi = make_weight("shifted-square", {1.0});
    const MetricField id = make_metric("identity");
    const AnnularMesh mesh = build_annulus_mesh(1.0, 2.0, 32, 64);
    const TimeGrid tg = build_time_grid(2.0, 128);
    const CarlemanParams p = example_params();
    BoundaryTimeField f = make_boundary_time_field(mesh.n_theta, tg);
    for (int k = 0; k <= tg.n_t; ++k)
        for (int j = 0; j < mesh.n_theta; ++j)
            f.at(k, j) = sqr(tg.t(k)) * (2.0 + mesh.cos_t[j]);
    const ForwardSolution sol = solve_forward(f, id, mesh, tg);
    const double margin = sigma_sign_structure_margin(sol.u, phi, p, id);
    CHECK(margin <= 1e-9 * std::max(1.0, sqr(sol.stats.max_abs)));
}
