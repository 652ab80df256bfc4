#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gradflux/chemotaxis.hpp"
#include "gradflux/heat.hpp"
#include "gradflux/test_functions.hpp"
#include "gradflux/verifier.hpp"
#include "test_support.hpp"

using namespace gradflux;

namespace {

FieldTrajectory constant_source(const Grid& g, double value, double dt, int steps) {
    FieldTrajectory f(g, dt);
    for (int n = 0; n <= steps; ++n) f.push(constant_field(g, value));
    return f;
}

ChemoRun smooth_a_run(double dt = 1e-3, int cells = 64, double T = 0.5) {
    Grid g = make_grid(1, {1.0}, {cells});
    SolverConfig cfg;
    cfg.dt = dt;
    ChemoSystem sys;
    sys.variant = ChemoVariant::A;
    sys.eps = 0.1;
    sys.has_g = true;
    sys.g = {0.5, 1.0, 2.0};
    ScalarField u0 = sample_field(g, [](double x) { return 0.3 + 0.2 * std::cos(2.0 * M_PI * x); });
    ScalarField v0 = sample_field(g, [](double x) { return 0.5 + 0.1 * std::cos(M_PI * x); });
    return solve_chemo(sys, u0, v0, T, cfg);
}

ChemoRun smooth_run(ChemoVariant variant, double dt = 1e-3, int cells = 64,
                    double T = 0.5) {
    Grid g = make_grid(1, {1.0}, {cells});
    SolverConfig cfg;
    cfg.dt = dt;
    ChemoSystem sys;
    sys.variant = variant;
    sys.chi = 1.0;
    sys.eps = 0.1;
    sys.has_g = variant != ChemoVariant::B;
    if (sys.has_g) sys.g = {0.0, 1.0, 2.0};
    ScalarField u0 = sample_field(g, [](double x) { return 0.5 + 0.3 * std::cos(2.0 * M_PI * x); });
    ScalarField v0 = sample_field(g, [](double x) { return 1.0 + 0.2 * std::cos(M_PI * x); });
    return solve_chemo(sys, u0, v0, T, cfg);
}

}  // namespace

TEST_CASE("EstimateReport pass rule: margin >= -tolerance in both modes") {
    EstimateReport a = EstimateReport::inequality("x", 1.0, 2.0, 0.0, 0);
    CHECK(a.pass);
    CHECK(a.margin == 1.0);
    EstimateReport b = EstimateReport::inequality("x", 2.0, 1.0, 0.5, 0);
    CHECK_FALSE(b.pass);
    EstimateReport c = EstimateReport::equality("x", 1.0, 1.0 + 1e-12, 1e-10, 0);
    CHECK(c.pass);
    CHECK(c.margin <= 0.0);
    EstimateReport d = EstimateReport::equality("x", 1.0, 1.1, 1e-10, 0);
    CHECK_FALSE(d.pass);
}

TEST_CASE("check_heat_apriori on the constant run: every report passes") {
    Grid g = make_grid(1, {1.0}, {64});
    SolverConfig cfg;
    cfg.dt = 1e-3;
    HeatProblem p;
    p.v0 = constant_field(g, 1.0);
    p.f = constant_source(g, 2.0, cfg.dt, 1000);
    FieldTrajectory traj = solve_heat(p, 1.0, cfg);

    auto reports = check_heat_apriori(traj, p, cfg);
    REQUIRE(!reports.empty());
    bool saw_identity = false;
    for (const auto& r : reports) {
        INFO(r.lemma_id << " lhs=" << r.lhs << " rhs=" << r.rhs << " margin=" << r.margin);
        CHECK(r.pass);
        if (r.lemma_id == "L2.1 C0L1 identity") {
            saw_identity = true;
            CHECK(std::abs(r.lhs - 3.0) <= 1e-10);
        }
    }
    CHECK(saw_identity);
}

TEST_CASE("check_heat_apriori on the spike run: paper constants with positive margin") {
    Grid g = make_grid(1, {1.0}, {128});
    SolverConfig cfg;
    cfg.dt = 1e-3;
    HeatProblem p;
    p.v0 = gftest::spike_field(g, 1.0);
    FieldTrajectory traj = solve_heat(p, 1.0, cfg);
    auto reports = check_heat_apriori(traj, p, cfg);
    for (const auto& r : reports) {
        INFO(r.lemma_id << " lhs=" << r.lhs << " rhs=" << r.rhs);
        CHECK(r.pass);
        if (r.lemma_id.rfind("L2.2", 0) == 0 || r.lemma_id.rfind("L2.3", 0) == 0)
            CHECK(r.margin >= 0.0);
    }
}

TEST_CASE("checker reports are reproducible bit for bit") {
    Grid g = make_grid(1, {1.0}, {64});
    SolverConfig cfg;
    cfg.dt = 2e-3;
    HeatProblem p;
    p.v0 = gftest::spike_field(g, 1.0);
    FieldTrajectory traj = solve_heat(p, 0.3, cfg);
    auto a = check_heat_apriori(traj, p, cfg);
    auto b = check_heat_apriori(traj, p, cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].lhs == b[i].lhs);
        CHECK(a[i].rhs == b[i].rhs);
        CHECK(a[i].inputs_digest == b[i].inputs_digest);
    }
}

TEST_CASE("weak v-equation checker: pass on honest runs, fail on injected defects") {
    Grid g = make_grid(1, {1.0}, {128});
    SolverConfig cfg;
    cfg.dt = 1e-3;
    HeatProblem p;
    p.v0 = sample_field(g, [](double x) { return 1.0 + 0.5 * std::cos(M_PI * x); });
    p.f = constant_source(g, 0.5, cfg.dt, 500);
    FieldTrajectory traj = solve_heat(p, 0.5, cfg);
    TestFunctionSet tests = default_test_set(g, 0.5, cfg.dt);

    EstimateReport ok = check_weak_solution_v(heat_weak_form(traj, p), tests);
    CHECK(ok.pass);

    FieldTrajectory bad = traj;
    for (double& v : bad.frames[250].values) v += 1.0;
    EstimateReport broken = check_weak_solution_v(heat_weak_form(bad, p), tests);
    CHECK_FALSE(broken.pass);
}

TEST_CASE("weak residual halves when dt and h halve on a smooth run") {
    auto residual_for = [](int cells, double dt) {
        Grid g = make_grid(1, {1.0}, {cells});
        SolverConfig cfg;
        cfg.dt = dt;
        HeatProblem p;
        p.v0 = sample_field(g, [](double x) { return 1.0 + 0.5 * std::cos(M_PI * x); });
        const int steps = static_cast<int>(0.5 / dt);
        FieldTrajectory f(g, dt);
        for (int n = 0; n <= steps; ++n) f.push(constant_field(g, 0.5));
        p.f = f;
        FieldTrajectory traj = solve_heat(p, 0.5, cfg);
        VWeakForm form = heat_weak_form(traj, p);
        TestFunctionSet tests = default_test_set(g, 0.5, dt);
        double worst = 0.0;
        for (const auto& t : tests.members)
            worst = std::max(worst, std::abs(weak_residual_single(form, t)));
        return worst;
    };
    const double coarse = residual_for(64, 2e-3);
    const double fine = residual_for(128, 1e-3);
    CHECK(fine <= 0.75 * coarse);
    CHECK(fine >= 0.25 * coarse);
}

TEST_CASE("phi-supersolution margins are near equality for smooth system A runs") {
    ChemoRun run = smooth_a_run();
    TestFunctionSet tests = default_test_set(run.u_traj.grid, 0.5, run.u_traj.dt);
    auto reports = check_phi_supersolution(run, default_supersol_family(), tests);
    REQUIRE(reports.size() >= 6);
    for (const auto& r : reports) {
        INFO(r.lemma_id << " margin=" << r.margin);
        CHECK(r.pass);
    }
}

TEST_CASE("phi-supersolution margins shrink under (dt,h)-halving") {
    auto worst_margin = [](double dt, int cells) {
        ChemoRun run = smooth_a_run(dt, cells);
        TestFunctionSet tests = default_test_set(run.u_traj.grid, 0.5, dt);
        double worst = 0.0;
        for (const auto& phi : default_supersol_family().members)
            for (const auto& t : tests.members) {
                if (!t.nonnegative) continue;
                worst = std::max(worst, std::abs(phi_supersol_margin(run, phi, t)));
            }
        return worst;
    };
    const double coarse = worst_margin(2e-3, 64);
    const double fine = worst_margin(1e-3, 128);
    CHECK(fine <= 0.75 * coarse);
}

TEST_CASE("phi-supersolution with B linear on the range reduces to the weak u-equation") {
    ChemoRun run = smooth_a_run();
    // bump placed beyond the solution range: B(u) = u, C = 1 wherever u lives
    double umax = 0.0;
    for (const auto& d : run.diagnostics) umax = std::max(umax, d.max_u);
    PhiSupersol linear{"linear", umax + 1.0, umax + 2.0, 0.0, 1.0, 1.0, 0.0};
    TestFunctionSet tests = default_test_set(run.u_traj.grid, 0.5, run.u_traj.dt);

    // independent evaluation of the u-equation weak residual
    const Grid& g = run.u_traj.grid;
    const double dt = run.u_traj.dt;
    for (const auto& test : tests.members) {
        if (!test.nonnegative) continue;
        const double margin = phi_supersol_margin(run, linear, test);

        double lhs = 0.0, rhs = 0.0;
        for (std::size_t n = 0; n + 1 < run.u_traj.frame_count(); ++n) {
            const double t = n * dt;
            if (t >= test.t_end) break;
            const ScalarField& u = run.u_traj.frames[n];
            const ScalarField& v = run.v_traj.frames[n];
            double cl = 0.0, cr = 0.0;
            for (int i = 0; i < g.cells[0]; ++i) {
                const std::array<double, 2> x{g.center(0, i), 0.0};
                const double dtau =
                    (test.value(x, t + dt) - test.value(x, t - dt)) / (2.0 * dt);
                cl += -u[i] * dtau;
                cr += run.system.g.g(u[i]) * test.value(x, t);
            }
            double fa = 0.0;
            for_each_face(g, [&](int axis, std::size_t, std::size_t l, std::size_t r,
                                 double xf, double) {
                (void)axis;
                const double h = g.spacing(0);
                const double gu = (u[r] - u[l]) / h;
                const double gv = (v[r] - v[l]) / h;
                const double ub = 0.5 * (u[l] + u[r]);
                const std::array<double, 2> x{xf, 0.0};
                const double gtau = test.grad(0, x, t);
                fa += -gu * gtau + ub * gv * gtau;
            });
            lhs += dt * cl * g.cell_volume();
            rhs += dt * (cr + fa) * g.cell_volume();
        }
        double init = 0.0;
        for (int i = 0; i < g.cells[0]; ++i) {
            const std::array<double, 2> x{g.center(0, i), 0.0};
            init += run.u_traj.frames.front()[i] * test.value(x, 0.0);
        }
        lhs -= init * g.cell_volume();
        CHECK(margin == Catch::Approx(lhs - rhs).margin(1e-12));
    }
}

TEST_CASE("supersolution margins scale exactly with the test function") {
    ChemoRun run = smooth_a_run(2e-3, 32, 0.2);
    TestFunctionSet tests = default_test_set(run.u_traj.grid, 0.2, run.u_traj.dt, 4);
    PhiSupersol phi = default_supersol_family().members[0];
    for (const auto& t : tests.members) {
        if (!t.nonnegative) continue;
        TestFunction scaled = t;
        auto p = t.space;
        scaled.space = [p](const std::array<double, 2>& x) { return 2.0 * p(x); };
        auto g0 = t.space_grad[0], g1 = t.space_grad[1];
        scaled.space_grad[0] = [g0](const std::array<double, 2>& x) { return 2.0 * g0(x); };
        scaled.space_grad[1] = [g1](const std::array<double, 2>& x) { return 2.0 * g1(x); };
        CHECK(phi_supersol_margin(run, phi, scaled) ==
              2.0 * phi_supersol_margin(run, phi, t));
    }
}

TEST_CASE("ln-supersolution: vacuous for u = 0, near equality for smooth B and C runs") {
    Grid g = make_grid(1, {1.0}, {64});
    SolverConfig cfg;
    cfg.dt = 1e-3;
    ChemoSystem sys;
    sys.variant = ChemoVariant::C;
    sys.chi = 1.0;
    sys.eps = 0.1;
    sys.has_g = true;
    sys.g = {0.0, 1.0, 2.0};
    ChemoRun zero = solve_chemo(sys, ScalarField(g, 0.0), constant_field(g, 1.0), 0.2, cfg);
    TestFunctionSet tests = default_test_set(g, 0.2, cfg.dt);
    EstimateReport rz = check_ln_supersolution(zero, tests);
    CHECK(rz.pass);
    CHECK(std::abs(rz.lhs) <= 1e-10);

    for (ChemoVariant variant : {ChemoVariant::B, ChemoVariant::C}) {
        ChemoRun run = smooth_run(variant);
        TestFunctionSet ts = default_test_set(run.u_traj.grid, 0.5, run.u_traj.dt);
        EstimateReport r = check_ln_supersolution(run, ts);
        INFO(r.lemma_id << " lhs=" << r.lhs << " tol=" << r.tolerance);
        CHECK(r.pass);
    }
}

TEST_CASE("ln-supersolution margin refines toward zero on smooth runs") {
    auto worst = [](double dt, int cells) {
        ChemoRun run = smooth_run(ChemoVariant::C, dt, cells);
        TestFunctionSet tests = default_test_set(run.u_traj.grid, 0.5, dt);
        double w = 0.0;
        for (const auto& t : tests.members) {
            if (!t.nonnegative) continue;
            w = std::max(w, std::abs(ln_supersol_margin(run, t)));
        }
        return w;
    };
    CHECK(worst(1e-3, 128) <= 0.75 * worst(2e-3, 64));
}

TEST_CASE("mass budget: equality for B, telescoped inequality for A and C, zero run") {
    ChemoRun b = smooth_run(ChemoVariant::B);
    auto rb = check_mass_budget(b);
    REQUIRE(rb.size() == 1);
    CHECK(rb[0].pass);
    CHECK(rb[0].equality_mode);

    for (ChemoVariant variant : {ChemoVariant::A, ChemoVariant::C}) {
        ChemoRun run = variant == ChemoVariant::A ? smooth_a_run() : smooth_run(variant);
        auto r = check_mass_budget(run);
        REQUIRE(r.size() == 1);
        INFO(r[0].lemma_id << " lhs=" << r[0].lhs);
        CHECK(r[0].pass);
        CHECK(std::abs(r[0].lhs) <= 1e-10);  // discrete identity, not just inequality
    }

    Grid g = make_grid(1, {1.0}, {32});
    SolverConfig cfg;
    cfg.dt = 1e-3;
    ChemoSystem sys;
    sys.variant = ChemoVariant::C;
    sys.eps = 0.1;
    sys.has_g = true;
    sys.g = {0.0, 1.0, 2.0};
    ChemoRun zero = solve_chemo(sys, ScalarField(g, 0.0), constant_field(g, 1.0), 0.1, cfg);
    auto rz = check_mass_budget(zero);
    CHECK(rz[0].pass);
    CHECK(rz[0].lhs == 0.0);  // all margins exactly zero
}

TEST_CASE("mass budget flips when a frame is tampered with") {
    ChemoRun run = smooth_run(ChemoVariant::B);
    for (double& v : run.u_traj.frames[run.u_traj.frame_count() / 2].values)
        v *= 1.001;  // relative defect 1e-3
    auto r = check_mass_budget(run);
    CHECK_FALSE(r[0].pass);
}

TEST_CASE("dissipation bounds per system") {
    ChemoRun a = smooth_a_run();
    auto ra = check_dissipation_bounds(a);
    bool saw_budget = false;
    for (const auto& r : ra) {
        INFO(r.lemma_id);
        CHECK(r.pass);
        if (r.lemma_id.rfind("L5.3", 0) == 0) {
            saw_budget = true;
            CHECK(r.margin >= 0.0);
        }
    }
    CHECK(saw_budget);

    ChemoRun b = smooth_run(ChemoVariant::B);
    auto rbv = check_dissipation_bounds(b);
    bool saw_lower = false, saw_64 = false;
    for (const auto& r : rbv) {
        CHECK(r.pass);
        if (r.lemma_id.rfind("L6.3", 0) == 0) saw_lower = true;
        if (r.lemma_id.rfind("L6.4", 0) == 0) {
            saw_64 = true;
            CHECK(std::isfinite(r.lhs));
        }
    }
    CHECK(saw_lower);
    CHECK(saw_64);

    ChemoRun c = smooth_run(ChemoVariant::C);
    auto rcv = check_dissipation_bounds(c);
    bool saw_sup = false, saw_qe = false;
    for (const auto& r : rcv) {
        INFO(r.lemma_id << " lhs=" << r.lhs << " rhs=" << r.rhs);
        CHECK(r.pass);
        if (r.lemma_id.rfind("L7.2", 0) == 0) saw_sup = true;
        if (r.lemma_id.rfind("L7.3", 0) == 0) saw_qe = true;
    }
    CHECK(saw_sup);
    CHECK(saw_qe);
}

TEST_CASE("frozen calibration constants still dominate fresh measurements") {
    // weak residual on a manufactured smooth heat run, worst probed case
    {
        Grid g = make_grid(1, {1.0}, {256});
        SolverConfig cfg;
        cfg.dt = 4e-3;
        HeatProblem p;
        p.v0 = sample_field(g, [](double x) { return 1.0 + 0.5 * std::cos(M_PI * x); });
        const int steps = static_cast<int>(0.5 / cfg.dt);
        p.f = FieldTrajectory(g, cfg.dt);
        for (int m = 0; m <= steps; ++m)
            p.f.push(sample_field(g, [&](double x) {
                return 0.5 + 0.3 * std::cos(2.0 * M_PI * x) * std::exp(-m * cfg.dt);
            }));
        FieldTrajectory traj = solve_heat(p, 0.5, cfg);
        VWeakForm form = heat_weak_form(traj, p);
        double worst = 0.0;
        for (const auto& t : default_test_set(g, 0.5, cfg.dt).members)
            worst = std::max(worst, std::abs(weak_residual_single(form, t)));
        CHECK(worst <= kWeakResidualC * (cfg.dt + g.spacing(0)) * form.data_scale);
    }
    // supersolution margin on a smooth system A run
    {
        ChemoRun run = smooth_a_run(2e-3, 128);
        TestFunctionSet tests = default_test_set(run.u_traj.grid, 0.5, run.u_traj.dt);
        double worst = 0.0;
        for (const auto& phi : default_supersol_family().members)
            for (const auto& t : tests.members) {
                if (!t.nonnegative) continue;
                worst = std::max(worst, std::abs(phi_supersol_margin(run, phi, t)));
            }
        const double scale =
            std::max(1.0, spacetime_l1(run.u_traj) + spacetime_l1(run.v_traj));
        CHECK(worst <=
              kSupersolC * (run.u_traj.dt + run.u_traj.grid.spacing(0)) * scale);
    }
}
