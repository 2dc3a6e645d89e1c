#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "wavelab/operators.hpp"

using namespace wavelab;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("mesh construction and validation") {
    const AnnularMesh mesh = build_annulus_mesh(1.0, 2.0, 64, 128);
    CHECK(mesh.n_nodes() == 64u * 128u);
    for (int j = 0; j < mesh.n_theta; ++j) {
        const Vec g = mesh.node(0, j);
        const Vec g0 = mesh.node(mesh.n_r - 1, j);
        CHECK(std::hypot(g[0], g[1]) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::hypot(g0[0], g0[1]) == doctest::Approx(2.0).epsilon(1e-12));
    }
    for (int i = 0; i < mesh.n_r; ++i) {
        CHECK(mesh.r[i] >= 1.0 - 1e-12);
        CHECK(mesh.r[i] <= 2.0 + 1e-12);
    }

    CHECK_THROWS_AS(build_annulus_mesh(2.0, 1.0, 64, 128), GeometryError);
    CHECK_THROWS_AS(build_annulus_mesh(1.0, 2.0, 8, 8), ResolutionError);
}

TEST_CASE("volume quadrature oracles") {
    const MetricField id = make_metric("identity");
    const MetricField sc = make_metric("scaled", {4.0});

    SUBCASE("annulus area under refinement") {
        for (const int n : {24, 48, 96}) {
            const AnnularMesh mesh = build_annulus_mesh(1.0, 2.0, n, 2 * n);
            GridField one(mesh.n_nodes(), 1.0);
            const double err = std::abs(integrate_volume(one, id, mesh) - 3.0 * kPi);
            CHECK(err < 1e-9);  // trapezoid is exact for this radially linear integrand
        }
    }

    SUBCASE("zero field and constant-metric factor") {
        const AnnularMesh mesh = build_annulus_mesh(1.0, 2.0, 32, 64);
        GridField zero(mesh.n_nodes(), 0.0);
        CHECK(integrate_volume(zero, id, mesh) == 0.0);
        GridField one(mesh.n_nodes(), 1.0);
        CHECK(integrate_volume(one, sc, mesh) ==
              doctest::Approx(4.0 * 3.0 * kPi).epsilon(1e-12));
    }
}

TEST_CASE("surface quadrature oracles") {
    const MetricField id = make_metric("identity");
    const MetricField sc = make_metric("scaled", {4.0});
    const AnnularMesh mesh = build_annulus_mesh(1.0, 2.0, 32, 64);
    std::vector<double> one(mesh.n_theta, 1.0), zero(mesh.n_theta, 0.0);
    CHECK(integrate_surface(one, id, mesh, Boundary::Gamma) ==
          doctest::Approx(2.0 * kPi).epsilon(1e-12));
    CHECK(integrate_surface(one, id, mesh, Boundary::Gamma0) ==
          doctest::Approx(4.0 * kPi).epsilon(1e-12));
    CHECK(integrate_surface(zero, sc, mesh, Boundary::Gamma) == 0.0);
    CHECK(integrate_surface(one, sc, mesh, Boundary::Gamma) ==
          doctest::Approx(4.0 * 2.0 * kPi).epsilon(1e-12));
}

TEST_CASE("boundary-time Sobolev norms") {
    const MetricField id = make_metric("identity");
    const AnnularMesh mesh = build_annulus_mesh(1.0, 2.0, 32, 64);
    const TimeGrid tg = build_time_grid(2.0, 64);

    BoundaryTimeField one = make_boundary_time_field(mesh.n_theta, tg);
    for (auto& v : one.values) v = 1.0;
    // Constant trace: derivative terms vanish, norm = sqrt(2 pi r0 T).
    CHECK(sobolev_norm(one, NormKind::H1BoundaryTime, id, mesh, Boundary::Gamma) ==
          doctest::Approx(std::sqrt(2.0 * kPi * 2.0)).epsilon(1e-10));
    CHECK(sobolev_norm(one, NormKind::L2BoundaryTime, id, mesh, Boundary::Gamma) ==
          doctest::Approx(std::sqrt(2.0 * kPi * 2.0)).epsilon(1e-10));

    BoundaryTimeField zero = make_boundary_time_field(mesh.n_theta, tg);
    CHECK(sobolev_norm(zero, NormKind::H1BoundaryTime, id, mesh, Boundary::Gamma) == 0.0);

    // Homogeneity.
    BoundaryTimeField w = make_boundary_time_field(mesh.n_theta, tg);
    for (int k = 0; k <= tg.n_t; ++k)
        for (int j = 0; j < mesh.n_theta; ++j)
            w.at(k, j) = std::sin(mesh.theta[j]) * tg.t(k) * tg.t(k);
    BoundaryTimeField w2 = w;
    for (auto& v : w2.values) v *= 2.0;
    const double n1 = sobolev_norm(w, NormKind::H1BoundaryTime, id, mesh, Boundary::Gamma);
    const double n2 = sobolev_norm(w2, NormKind::H1BoundaryTime, id, mesh, Boundary::Gamma);
    CHECK(n2 == doctest::Approx(2.0 * n1).epsilon(1e-12));
    CHECK(n1 > 0.0);

    // Restriction to (0, tau) is monotone in tau.
    const double full = sobolev_norm(w, NormKind::L2TimeH1Gamma, id, mesh, Boundary::Gamma);
    const double half =
        sobolev_norm(w, NormKind::L2TimeH1Gamma, id, mesh, Boundary::Gamma, 1.0);
    CHECK(half < full);
    CHECK(half > 0.0);
}

TEST_CASE("volume Sobolev norms") {
    const MetricField id = make_metric("identity");
    const AnnularMesh mesh = build_annulus_mesh(1.0, 2.0, 32, 64);

    GridField zero(mesh.n_nodes(), 0.0);
    CHECK(sobolev_norm(zero, NormKind::L2Volume, id, mesh) == 0.0);
    CHECK(sobolev_norm(zero, NormKind::H2Volume, id, mesh) == 0.0);

    GridField one(mesh.n_nodes(), 1.0);
    CHECK(sobolev_norm(one, NormKind::L2Volume, id, mesh) ==
          doctest::Approx(std::sqrt(3.0 * kPi)).epsilon(1e-10));
    CHECK(sobolev_norm(one, NormKind::H1Volume, id, mesh) ==
          doctest::Approx(std::sqrt(3.0 * kPi)).epsilon(1e-6));

    // Single code path: integrating |grad w|_g^2 directly matches the H1 norm.
    GridField w(mesh.n_nodes());
    for (int i = 0; i < mesh.n_r; ++i)
        for (int j = 0; j < mesh.n_theta; ++j) {
            const Vec x = mesh.node(i, j);
            w[mesh.idx(i, j)] = std::sin(x[0]) + x[1] * x[1];
        }
    const DiscreteOperators ops(id, mesh);
    const GradientHessian gh = ops.gradient_and_hessian(w);
    GridField dens(mesh.n_nodes());
    for (std::size_t n = 0; n < mesh.n_nodes(); ++n) dens[n] = w[n] * w[n] + gh.grad_norm2[n];
    const double direct = std::sqrt(ops.integrate(dens));
    CHECK(sobolev_norm(w, NormKind::H1Volume, id, mesh) ==
          doctest::Approx(direct).epsilon(1e-12));
}
