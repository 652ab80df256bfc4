#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gradflux/chemotaxis.hpp"
#include "test_support.hpp"

using namespace gradflux;

namespace {

ChemoSystem system_a(double eps = 0.1) {
    ChemoSystem s;
    s.variant = ChemoVariant::A;
    s.eps = eps;
    s.has_g = true;
    s.g = {0.0, 1.0, 2.0};  // g(u) = -u^2
    return s;
}

ChemoSystem system_b(double chi = 1.0, double eps = 0.1) {
    ChemoSystem s;
    s.variant = ChemoVariant::B;
    s.chi = chi;
    s.eps = eps;
    s.has_g = false;
    return s;
}

ChemoSystem system_c(double chi = 1.0, double eps = 0.1) {
    ChemoSystem s;
    s.variant = ChemoVariant::C;
    s.chi = chi;
    s.eps = eps;
    s.has_g = true;
    s.g = {0.0, 1.0, 2.0};
    return s;
}

}  // namespace

TEST_CASE("taxis_face_flux: zeros, upwind donor selection, positivity guard") {
    Grid g = make_grid(1, {1.0}, {4});

    ScalarField u0(g, 0.0), v(g, 1.0);
    FaceField f0 = taxis_face_flux(u0, v, system_a());
    for (double x : f0.axis_values[0]) CHECK(x == 0.0);

    ScalarField u(g, 1.0);
    FaceField fc = taxis_face_flux(u, v, system_b());
    for (double x : fc.axis_values[0]) CHECK(x == 0.0);  // constant v, no gradient

    // two-cell check: v larger on the right -> positive flux, left donor
    ScalarField ur(g, 0.0), vr(g, 1.0);
    ur[0] = 3.0;
    ur[1] = 7.0;
    vr[1] = 2.0;  // gradient positive on face 0
    const ChemoSystem sb = system_b(2.0, 0.1);
    FaceField flux = taxis_face_flux(ur, vr, sb);
    const double grad = (2.0 - 1.0) / g.spacing(0);
    const double donor_mobility = sb.chi * 3.0 / ((1.0 + sb.eps * 3.0) * 1.0);
    CHECK(flux.axis_values[0][0] == Catch::Approx(grad * donor_mobility).epsilon(1e-14));
    CHECK(flux.axis_values[0][0] > 0.0);

    ScalarField vbad(g, 1.0);
    vbad[2] = -0.5;
    CHECK_THROWS_AS(taxis_face_flux(ur, vbad, system_b()), PositivityError);
}

TEST_CASE("decoupling: u identically zero leaves v linear, and constant for C") {
    Grid g = make_grid(1, {1.0}, {32});
    SolverConfig cfg;
    cfg.dt = 1e-3;

    ChemoRun run = solve_chemo(system_c(), ScalarField(g, 0.0), constant_field(g, 1.5),
                               0.2, cfg);
    for (const auto& f : run.u_traj.frames)
        for (double v : f.values) CHECK(v == 0.0);
    for (const auto& f : run.v_traj.frames)
        for (double v : f.values) CHECK(v == Catch::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("constant states follow the two-ODE reduction (system A oracle)") {
    Grid g = make_grid(1, {1.0}, {8});
    const double eps = 0.1, u0 = 1.2, v0 = 0.4, T = 1.0;

    // reference: RK4 on u' = -u^2, v' = -v + u/(1+eps u)
    double u = u0, v = v0;
    const double hr = 1e-5;
    const int n_ref = static_cast<int>(T / hr);
    auto fu = [](double uu) { return -uu * uu; };
    auto fv = [eps](double uu, double vv) { return -vv + uu / (1.0 + eps * uu); };
    for (int n = 0; n < n_ref; ++n) {
        const double k1u = fu(u), k1v = fv(u, v);
        const double k2u = fu(u + 0.5 * hr * k1u), k2v = fv(u + 0.5 * hr * k1u, v + 0.5 * hr * k1v);
        const double k3u = fu(u + 0.5 * hr * k2u), k3v = fv(u + 0.5 * hr * k2u, v + 0.5 * hr * k2v);
        const double k4u = fu(u + hr * k3u), k4v = fv(u + hr * k3u, v + hr * k3v);
        u += hr / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        v += hr / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }

    SolverConfig cfg;
    cfg.dt = 2e-5;
    ChemoRun run = solve_chemo(system_a(eps), constant_field(g, u0), constant_field(g, v0),
                               T, cfg);
    CHECK(run.u_traj.frames.back()[0] == Catch::Approx(u).margin(1e-4));
    CHECK(run.v_traj.frames.back()[0] == Catch::Approx(v).margin(1e-4));
}

TEST_CASE("system B conserves mass to solver tolerance") {
    Grid g = make_grid(1, {1.0}, {128});
    SolverConfig cfg;
    cfg.dt = 1e-3;
    ScalarField u0 = sample_field(g, [](double x) { return 1.0 + 0.5 * std::cos(2.0 * M_PI * x); });
    ScalarField v0 = sample_field(g, [](double x) { return 1.0 + 0.2 * std::cos(M_PI * x); });
    ChemoRun run = solve_chemo(system_b(), u0, v0, 1.0, cfg);
    const double m0 = integrate(run.u_traj.frames.front());
    for (const auto& f : run.u_traj.frames)
        CHECK(integrate(f) == Catch::Approx(m0).epsilon(1e-10));
}

TEST_CASE("systems A and C satisfy the per-step mass identity with explicit g") {
    Grid g = make_grid(1, {1.0}, {64});
    SolverConfig cfg;
    cfg.dt = 1e-3;
    ScalarField u0 = sample_field(g, [](double x) { return 0.5 + 0.3 * std::cos(M_PI * x); });
    ScalarField v0 = constant_field(g, 1.0);
    for (const ChemoSystem& sys : {system_a(), system_c()}) {
        ChemoRun run = solve_chemo(sys, u0, v0, 0.3, cfg);
        for (std::size_t n = 0; n + 1 < run.u_traj.frame_count(); ++n) {
            const double dm = integrate(run.u_traj.frames[n + 1]) -
                              integrate(run.u_traj.frames[n]);
            CHECK(dm == Catch::Approx(cfg.dt * run.diagnostics[n].g_integral).margin(1e-12));
        }
    }
}

TEST_CASE("positivity of u and strict positivity of v hold along runs") {
    Grid g = make_grid(2, {1.0, 1.0}, {24, 24});
    SolverConfig cfg;
    cfg.dt = 2e-3;
    ScalarField u0 = sample_field(g, [](double x, double y) {
        return 0.5 * (1.0 + std::cos(2.0 * M_PI * x) * std::cos(M_PI * y));
    });
    ScalarField v0 = sample_field(g, [](double x, double) {
        return 1.0 + 0.2 * std::cos(M_PI * x);
    });
    ChemoRun run = solve_chemo(system_c(), u0, v0, 0.1, cfg);
    for (const auto& d : run.diagnostics) {
        CHECK(d.min_u >= -1e-12);
        CHECK(d.min_v > 0.0);
    }
}

TEST_CASE("system C: sup of v never exceeds the initial sup") {
    Grid g = make_grid(1, {1.0}, {128});
    SolverConfig cfg;
    cfg.dt = 1e-3;
    ScalarField u0 = sample_field(g, [](double x) { return 0.5 + 0.5 * std::cos(2.0 * M_PI * x); });
    ScalarField v0 = sample_field(g, [](double x) { return 1.0 + 0.2 * std::cos(M_PI * x); });
    ChemoRun run = solve_chemo(system_c(), u0, v0, 0.5, cfg);
    const double v0max = run.diagnostics.front().max_v;
    for (const auto& d : run.diagnostics) CHECK(d.max_v <= v0max + 1e-12);
}

TEST_CASE("system B: v stays above min v0 times e^{-t}") {
    Grid g = make_grid(1, {1.0}, {128});
    SolverConfig cfg;
    cfg.dt = 5e-4;
    ScalarField u0 = sample_field(g, [](double x) { return 0.7 + 0.3 * std::cos(M_PI * x); });
    ScalarField v0 = sample_field(g, [](double x) { return 1.0 + 0.3 * std::cos(2.0 * M_PI * x); });
    ChemoRun run = solve_chemo(system_b(), u0, v0, 1.0, cfg);
    const double v0min = run.diagnostics.front().min_v;
    for (const auto& d : run.diagnostics)
        CHECK(d.min_v >= v0min * std::exp(-d.t) - 1e-9);
}

TEST_CASE("system A mass growth is capped by the positive part of g") {
    Grid g = make_grid(1, {1.0}, {64});
    SolverConfig cfg;
    cfg.dt = 1e-3;
    ChemoSystem sys;
    sys.variant = ChemoVariant::A;
    sys.eps = 0.2;
    sys.has_g = true;
    sys.g = {0.5, 1.0, 2.0};  // g(u) = u/2 - u^2, positive for u < 1/2
    ScalarField u0 = sample_field(g, [](double x) { return 0.2 + 0.1 * std::cos(M_PI * x); });
    ChemoRun run = solve_chemo(sys, u0, constant_field(g, 0.5), 1.0, cfg);
    const double m0 = integrate(run.u_traj.frames.front());
    const double gplus = std::max(0.0, sys.g.max_g());
    for (const auto& d : run.diagnostics)
        CHECK(d.mass_u <= m0 + g.domain_volume() * d.t * gplus + 1e-9);
}

TEST_CASE("CFL and dampening guards raise hard errors instead of corrupting runs") {
    Grid g = make_grid(1, {1.0}, {64});
    SolverConfig cfg;
    cfg.dt = 0.05;  // far beyond the advective CFL for steep v
    ScalarField u0 = constant_field(g, 1.0);
    ScalarField v0 = sample_field(g, [](double x) { return 1.0 + 0.9 * std::cos(2.0 * M_PI * x); });
    CHECK_THROWS_AS(solve_chemo(system_b(), u0, v0, 0.5, cfg), CflError);

    ChemoSystem stiff = system_a();
    stiff.g.mu = 100.0;  // dt |g'| > 1/2 on the sampled range
    SolverConfig cfg2;
    cfg2.dt = 5e-3;
    CHECK_THROWS_AS(
        solve_chemo(stiff, constant_field(g, 2.0), constant_field(g, 1.0), 0.1, cfg2),
        CflError);
}

TEST_CASE("quasi_energy closed forms") {
    Grid g = make_grid(1, {1.0}, {16});
    CHECK(quasi_energy(ScalarField(g, 0.0), constant_field(g, 1.0), 1.0) ==
          Catch::Approx(0.0).margin(1e-14));
    CHECK(quasi_energy(constant_field(g, std::exp(1.0) - 1.0), constant_field(g, 1.0),
                       1.0) == Catch::Approx(-1.0).epsilon(1e-12));
    CHECK(quasi_energy(ScalarField(g, 0.0), constant_field(g, std::exp(-1.0)), 2.0) ==
          Catch::Approx(4.0).epsilon(1e-12));
    CHECK_THROWS_AS(quasi_energy(ScalarField(g, 0.0), ScalarField(g, 0.0), 1.0), Error);
}

TEST_CASE("functional_upvq closed forms and homogeneity") {
    Grid g = make_grid(1, {1.0}, {16});
    CHECK(functional_upvq(constant_field(g, 1.0), constant_field(g, 1.0), 0.5, 0.5) ==
          Catch::Approx(1.0).epsilon(1e-14));
    CHECK(functional_upvq(constant_field(g, 4.0), constant_field(g, 1.0), 0.5, 1.0) ==
          Catch::Approx(2.0).epsilon(1e-14));

    ScalarField u = sample_field(g, [](double x) { return 0.5 + x; });
    ScalarField v = sample_field(g, [](double x) { return 1.0 + x * x; });
    const double base = functional_upvq(u, v, 0.5, 0.5);
    ScalarField u4 = u;
    for (double& w : u4.values) w *= 4.0;
    CHECK(functional_upvq(u4, v, 0.5, 0.5) == Catch::Approx(2.0 * base).epsilon(1e-13));
}

TEST_CASE("variant/config invariants are enforced") {
    ChemoSystem bad = system_b();
    bad.has_g = true;
    CHECK_THROWS_AS(bad.validate(), Error);
    ChemoSystem bad2 = system_a();
    bad2.eps = 1.5;
    CHECK_THROWS_AS(bad2.validate(), Error);
    DampeningSpec sublinear{1.0, 0.5, 1.0};  // beta = 1 does not dampen
    CHECK_THROWS_AS(sublinear.validate(), Error);
}
