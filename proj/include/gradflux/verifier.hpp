#pragma once

// Turns the estimates into computable reports with explicit LHS, RHS and
// margin. Inequality reports pass iff margin = RHS − LHS >= −tolerance;
// equality-mode reports store margin = −|RHS − LHS| so the same rule
// applies. Checkers never throw on failed checks — failures are results.
//
// Tolerance policy: tol = tol_model + tol_discr with tol_model = 1e−8 times
// the scale of the larger side and tol_discr = C·(dt+h)·scale. The C for
// each weak-form checker was calibrated once on manufactured smooth
// solutions and is frozen below.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "gradflux/chemotaxis.hpp"
#include "gradflux/functionals.hpp"
#include "gradflux/grid.hpp"
#include "gradflux/heat.hpp"
#include "gradflux/test_functions.hpp"

namespace gradflux {

// Calibration constants for the discretization part of weak-form
// tolerances, frozen from refinement runs on manufactured solutions
// (see tests/test_verifier.cpp, which re-derives them as a regression
// guard).
inline constexpr double kWeakResidualC = 2.0;
inline constexpr double kSupersolC = 1.5;
inline constexpr double kQuasiEnergyC = 2.0;
inline constexpr double kModelTol = 1e-8;

struct EstimateReport {
    std::string lemma_id;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;  // rhs − lhs, or −|rhs − lhs| in equality mode
    double tolerance = 0.0;
    bool equality_mode = false;
    bool pass = false;
    std::string note;
    std::uint64_t inputs_digest = 0;

    static EstimateReport inequality(std::string id, double lhs, double rhs, double tol,
                                     std::uint64_t dig, std::string note = "") {
        EstimateReport r;
        r.lemma_id = std::move(id);
        r.lhs = lhs;
        r.rhs = rhs;
        r.margin = rhs - lhs;
        r.tolerance = tol;
        r.pass = r.margin >= -tol;
        r.inputs_digest = dig;
        r.note = std::move(note);
        return r;
    }
    static EstimateReport equality(std::string id, double lhs, double rhs, double tol,
                                   std::uint64_t dig, std::string note = "") {
        EstimateReport r;
        r.lemma_id = std::move(id);
        r.lhs = lhs;
        r.rhs = rhs;
        r.margin = -std::abs(rhs - lhs);
        r.tolerance = tol;
        r.equality_mode = true;
        r.pass = r.margin >= -tol;
        r.inputs_digest = dig;
        r.note = std::move(note);
        return r;
    }
};

namespace detail {

inline double mesh_scale(const FieldTrajectory& traj) {
    double h = traj.grid.spacing(0);
    if (traj.grid.dim == 2) h = std::max(h, traj.grid.spacing(1));
    return traj.dt + h;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Heat a priori estimates (κ = 0; callers with κ ≠ 0 apply the e^{κt}
// change of variables first).

inline std::vector<EstimateReport> check_heat_apriori(const FieldTrajectory& traj,
                                                      const HeatProblem& problem,
                                                      const SolverConfig& config) {
    require(problem.kappa == 0.0,
            "check_heat_apriori: requires kappa = 0 (rescale by e^{kappa t} first)");
    require(config.theta == 1.0,
            "check_heat_apriori: energy identities assume the implicit Euler stepper");
    std::vector<EstimateReport> out;
    const std::uint64_t dig = digest(traj);
    const Grid& g = traj.grid;

    // data norms: f by left-endpoint quadrature, and by the stepper's blend
    double f_l1_left = 0.0, f_l1_blend = 0.0;
    const std::size_t steps = traj.steps();
    for (std::size_t n = 0; n < steps; ++n) {
        if (!problem.f.frames.empty()) {
            f_l1_left += traj.dt * l1_norm(problem.f.frames[n]);
            f_l1_blend += traj.dt * l1_norm(source_blend(problem, config, n, g));
        }
    }
    const double data_l1 = l1_norm(problem.v0) + f_l1_left;
    const double data_l1_blend = l1_norm(problem.v0) + f_l1_blend;
    const double scale = std::max(1.0, data_l1);

    // L2.1: sup_t ∫|z| bounded by the data; equality for sign-definite data.
    {
        const double lhs = c0l1_norm(traj);
        const double tol = kModelTol * scale + std::abs(f_l1_blend - f_l1_left);
        out.push_back(EstimateReport::inequality("L2.1 C0L1 bound", lhs, data_l1_blend,
                                                 tol, dig));
        bool v0_nonneg = true, f_nonneg = true;
        for (double v : problem.v0.values) v0_nonneg = v0_nonneg && v >= 0.0;
        for (const auto& fr : problem.f.frames)
            for (double v : fr.values) f_nonneg = f_nonneg && v >= 0.0;
        if (v0_nonneg && f_nonneg)
            out.push_back(EstimateReport::equality("L2.1 C0L1 identity", lhs,
                                                   data_l1_blend, 1e-9 * scale, dig,
                                                   "sign-definite data"));
    }

    // Mass identity against the stepper's own source blend.
    {
        double blend_mass = 0.0;
        for (std::size_t n = 0; n < steps; ++n)
            if (!problem.f.frames.empty())
                blend_mass += traj.dt * integrate(source_blend(problem, config, n, g));
        const double lhs = integrate(traj.frames.back()) - integrate(traj.frames.front());
        out.push_back(EstimateReport::equality("L2.1 mass identity", lhs, blend_mass,
                                               std::max(config.linear_tol, 1e-12) * scale *
                                                   10.0,
                                               dig));
    }

    // L2.2: truncated gradient energies.
    for (double k : {1.0, 2.0, 4.0, 8.0}) {
        const double lhs = truncated_gradient_energy(traj, k);
        out.push_back(EstimateReport::inequality(
            "L2.2 truncated gradient k=" + std::to_string(static_cast<int>(k)), lhs,
            2.0 * k * data_l1_blend, kModelTol * (1.0 + 2.0 * k * scale), dig));
    }

    // L2.3: α-weighted energies with constant 4 Σ (2^{−α})^j = 4/(1−2^{−α}).
    for (double alpha : {0.5, 1.0, 2.0}) {
        const double c1 = 4.0 / (1.0 - std::pow(2.0, -alpha));
        const double lhs = weighted_gradient_energy(traj, alpha);
        out.push_back(EstimateReport::inequality(
            "L2.3 weighted gradient alpha=" + std::to_string(alpha), lhs,
            c1 * data_l1_blend, kModelTol * (1.0 + c1 * scale), dig));
    }

    // L2.4 / L2.5: inequality shape with measured constants. The paper-side
    // constants come from Gagliardo–Nirenberg and are not computable here;
    // the frozen factors below were measured on spike reference runs and
    // doubled, and the reports say so.
    {
        const double q = g.dim == 1 ? 2.0 : 1.5;
        ScalarField shifted(g);
        double lq = 0.0;
        for (std::size_t n = 1; n < traj.frame_count(); ++n) {
            for (std::size_t i = 0; i < shifted.size(); ++i)
                shifted[i] = std::abs(traj.frames[n][i]) + 1.0;
            const double v = lp_norm(shifted, q);
            lq += traj.dt * std::pow(v, q);
        }
        lq = std::pow(lq, 1.0 / q);
        const double c_meas = g.dim == 1 ? 2.4 : 4.0;
        out.push_back(EstimateReport::inequality(
            "L2.4 Lq bound q=" + std::to_string(q), lq,
            c_meas * std::pow(data_l1_blend + 1.0, 1.0 + 1.0 / q), 0.0, dig,
            "constant unverifiable - inequality shape only (measured constant)"));
    }
    for (double lambda : {1.0, 1.1}) {
        const double lhs = grad_lambda_norm(traj, lambda);
        const double c_meas = 3.0;
        out.push_back(EstimateReport::inequality(
            "L2.5 grad L-lambda lambda=" + std::to_string(lambda), lhs,
            c_meas * (data_l1_blend + 1.0) * (data_l1_blend + 1.0), 0.0, dig,
            "constant unverifiable - inequality shape only (measured constant)"));
    }

    // L2.6: dual surrogate against the discrete testing bound, which holds
    // exactly for the blend the stepper used.
    {
        DualDictionary dict = dual_test_dictionary(g);
        const double lhs = dual_time_derivative_surrogate(traj, dict);
        double rhs = 0.0;
        for (std::size_t n = 1; n < traj.frame_count(); ++n) {
            const ScalarField& z = traj.frames[n];  // theta = 1 blend state
            double grad_l1 = 0.0;
            for_each_face(g, [&](int axis, std::size_t, std::size_t l, std::size_t r,
                                 double, double) {
                grad_l1 += std::abs((z[r] - z[l]) / g.spacing(axis));
            });
            rhs += traj.dt * grad_l1 * g.cell_volume();
            if (!problem.f.frames.empty())
                rhs += traj.dt * l1_norm(source_blend(problem, config, n - 1, g));
        }
        out.push_back(EstimateReport::inequality("L2.6 dual surrogate", lhs, rhs,
                                                 kModelTol * (1.0 + rhs), dig,
                                                 "surrogate is a dictionary lower bound"));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Weak residual of the v-equation. The zeroth-order provider Z(n) bundles
// source minus decay so one evaluator covers the heat problem and all three
// systems.

struct VWeakForm {
    std::string label;
    const FieldTrajectory* v = nullptr;
    const ScalarField* v0 = nullptr;
    std::function<ScalarField(std::size_t)> zeroth_order;  // f − κv etc. at frame n
    double data_scale = 1.0;
};

inline VWeakForm heat_weak_form(const FieldTrajectory& traj, const HeatProblem& problem) {
    VWeakForm w;
    w.label = "heat";
    w.v = &traj;
    w.v0 = &problem.v0;
    const double kappa = problem.kappa;
    const FieldTrajectory* f = &problem.f;
    const FieldTrajectory* v = &traj;
    w.zeroth_order = [f, v, kappa](std::size_t n) {
        ScalarField z(v->grid, 0.0);
        for (std::size_t i = 0; i < z.size(); ++i) {
            double s = -kappa * v->frames[n][i];
            if (!f->frames.empty()) s += f->frames[n][i];
            z[i] = s;
        }
        return z;
    };
    w.data_scale = std::max(1.0, l1_norm(problem.v0) + spacetime_l1(*f) +
                                     std::abs(kappa) * spacetime_l1(traj));
    return w;
}

inline VWeakForm chemo_weak_form(const ChemoRun& run) {
    VWeakForm w;
    w.label = "chemo v " + to_string(run.system.variant);
    w.v = &run.v_traj;
    w.v0 = &run.v_traj.frames.front();
    const ChemoRun* r = &run;
    w.zeroth_order = [r](std::size_t n) {
        const ScalarField& u = r->u_traj.frames[n];
        const ScalarField& v = r->v_traj.frames[n];
        const double eps = r->system.eps;
        ScalarField z(u.grid, 0.0);
        switch (r->system.variant) {
            case ChemoVariant::A:
                for (std::size_t i = 0; i < z.size(); ++i)
                    z[i] = u[i] / (1.0 + eps * u[i]) - v[i];
                break;
            case ChemoVariant::B:
                for (std::size_t i = 0; i < z.size(); ++i) z[i] = u[i] - v[i];
                break;
            case ChemoVariant::C:
                for (std::size_t i = 0; i < z.size(); ++i)
                    z[i] = -u[i] * v[i] / ((1.0 + eps * u[i]) * (1.0 + eps * v[i]));
                break;
        }
        return z;
    };
    w.data_scale = std::max(1.0, l1_norm(*w.v0) + spacetime_l1(run.u_traj) +
                                     spacetime_l1(run.v_traj));
    return w;
}

// LHS − RHS of the weak v-equation for one test function, evaluated with
// midpoint space and left-endpoint time quadrature; φ_t by centered
// differencing of the analytic profile.
inline double weak_residual_single(const VWeakForm& form, const TestFunction& test) {
    const FieldTrajectory& traj = *form.v;
    const Grid& g = traj.grid;
    const double dt = traj.dt;
    const double vol = g.cell_volume();

    double lhs = 0.0, rhs = 0.0;
    const int n1 = g.dim == 2 ? g.cells[1] : 1;
    for (std::size_t n = 0; n + 1 < traj.frame_count(); ++n) {
        const double t = n * dt;
        if (t >= test.t_end) break;
        const ScalarField& v = traj.frames[n];
        ScalarField z = form.zeroth_order(n);
        double time_term = 0.0, zero_term = 0.0;
        for (int i1 = 0; i1 < n1; ++i1)
            for (int i0 = 0; i0 < g.cells[0]; ++i0) {
                const std::array<double, 2> x{g.center(0, i0),
                                              g.dim == 2 ? g.center(1, i1) : 0.0};
                const double dphi =
                    (test.value(x, t + dt) - test.value(x, t - dt)) / (2.0 * dt);
                const std::size_t ci = g.index(i0, i1);
                time_term += v[ci] * dphi;
                zero_term += z[ci] * test.value(x, t);
            }
        double grad_term = 0.0;
        for_each_face(g, [&](int axis, std::size_t, std::size_t left, std::size_t right,
                             double face_coord, double transverse) {
            const double grad_v = (v[right] - v[left]) / g.spacing(axis);
            std::array<double, 2> x{};
            x[axis] = face_coord;
            x[1 - axis] = transverse;
            grad_term += grad_v * test.grad(axis, x, t);
        });
        lhs += -dt * time_term * vol;
        rhs += dt * (-grad_term * vol + zero_term * vol);
    }
    // initial-datum term
    double init = 0.0;
    for (int i1 = 0; i1 < n1; ++i1)
        for (int i0 = 0; i0 < g.cells[0]; ++i0) {
            const std::array<double, 2> x{g.center(0, i0),
                                          g.dim == 2 ? g.center(1, i1) : 0.0};
            init += (*form.v0)[g.index(i0, i1)] * test.value(x, 0.0);
        }
    lhs -= init * vol;
    return lhs - rhs;
}

inline std::vector<double> weak_residual(const FieldTrajectory& traj,
                                         const HeatProblem& problem,
                                         const TestFunctionSet& tests) {
    VWeakForm form = heat_weak_form(traj, problem);
    std::vector<double> out;
    out.reserve(tests.members.size());
    for (const auto& t : tests.members) out.push_back(weak_residual_single(form, t));
    return out;
}

inline EstimateReport check_weak_solution_v(const VWeakForm& form,
                                            const TestFunctionSet& tests) {
    double worst = 0.0;
    for (const auto& t : tests.members)
        worst = std::max(worst, std::abs(weak_residual_single(form, t)));
    const double tol =
        kModelTol * form.data_scale + kWeakResidualC * detail::mesh_scale(*form.v) *
                                          form.data_scale;
    return EstimateReport::inequality("weak v-equation (" + form.label + ")", worst, 0.0,
                                      tol, digest(*form.v),
                                      "max |residual| over " +
                                          std::to_string(tests.members.size()) + " tests");
}

// ---------------------------------------------------------------------------
// φ-supersolution check for system A runs. Both sides of the inequality are
// evaluated with the run's own regularized production term, so classical
// smooth runs sit at equality up to discretization.

inline double phi_supersol_margin(const ChemoRun& run, const PhiSupersol& phi,
                                  const TestFunction& test) {
    const Grid& g = run.u_traj.grid;
    const double dt = run.u_traj.dt;
    const double vol = g.cell_volume();
    const double eps = run.system.eps;
    const bool has_g = run.system.has_g;
    const int n1 = g.dim == 2 ? g.cells[1] : 1;

    double lhs = 0.0, rhs = 0.0;
    for (std::size_t n = 0; n + 1 < run.u_traj.frame_count(); ++n) {
        const double t = n * dt;
        if (t >= test.t_end) break;
        const ScalarField& u = run.u_traj.frames[n];
        const ScalarField& v = run.v_traj.frames[n];

        double cell_acc_lhs = 0.0, cell_acc_rhs = 0.0;
        for (int i1 = 0; i1 < n1; ++i1)
            for (int i0 = 0; i0 < g.cells[0]; ++i0) {
                const std::size_t ci = g.index(i0, i1);
                const std::array<double, 2> x{g.center(0, i0),
                                              g.dim == 2 ? g.center(1, i1) : 0.0};
                const double tau = test.value(x, t);
                const double dtau =
                    (test.value(x, t + dt) - test.value(x, t - dt)) / (2.0 * dt);
                cell_acc_lhs += -phi.phi(u[ci], v[ci]) * dtau;
                double zero = -v[ci] * phi.phi_v(u[ci], v[ci]) +
                              (u[ci] / (1.0 + eps * u[ci])) * phi.phi_v(u[ci], v[ci]);
                if (has_g) zero += run.system.g.g(u[ci]) * phi.phi_u(u[ci], v[ci]);
                cell_acc_rhs += zero * tau;
            }

        double face_acc = 0.0;
        for_each_face(g, [&](int axis, std::size_t, std::size_t left, std::size_t right,
                             double face_coord, double transverse) {
            const double h = g.spacing(axis);
            const double gu = (u[right] - u[left]) / h;
            const double gv = (v[right] - v[left]) / h;
            const double ubar = 0.5 * (u[left] + u[right]);
            const double vbar = 0.5 * (v[left] + v[right]);
            std::array<double, 2> x{};
            x[axis] = face_coord;
            x[1 - axis] = transverse;
            const double tau = test.value(x, t);
            const double gtau = test.grad(axis, x, t);
            face_acc += -phi.phi_uu(ubar, vbar) * gu * gu * tau;
            face_acc += -(phi.phi_vv(ubar, vbar) - ubar * phi.phi_uv(ubar, vbar)) * gv *
                        gv * tau;
            face_acc += -(2.0 * phi.phi_uv(ubar, vbar) - ubar * phi.phi_uu(ubar, vbar)) *
                        gu * gv * tau;
            face_acc += -phi.phi_u(ubar, vbar) * gu * gtau;
            face_acc += -(phi.phi_v(ubar, vbar) - ubar * phi.phi_u(ubar, vbar)) * gv * gtau;
        });
        lhs += dt * cell_acc_lhs * vol;
        rhs += dt * (cell_acc_rhs * vol + face_acc * vol);
    }
    double init = 0.0;
    const ScalarField& u0 = run.u_traj.frames.front();
    const ScalarField& v0 = run.v_traj.frames.front();
    for (int i1 = 0; i1 < n1; ++i1)
        for (int i0 = 0; i0 < g.cells[0]; ++i0) {
            const std::array<double, 2> x{g.center(0, i0),
                                          g.dim == 2 ? g.center(1, i1) : 0.0};
            init += phi.phi(u0[g.index(i0, i1)], v0[g.index(i0, i1)]) * test.value(x, 0.0);
        }
    lhs -= init * vol;
    return lhs - rhs;
}

inline std::vector<EstimateReport> check_phi_supersolution(const ChemoRun& run,
                                                           const PhiSupersolFamily& family,
                                                           const TestFunctionSet& tests) {
    require(run.system.variant == ChemoVariant::A,
            "check_phi_supersolution: system A runs only");
    std::vector<EstimateReport> out;
    const std::uint64_t dig = digest(run.u_traj) ^ digest(run.v_traj);
    const double scale =
        std::max(1.0, spacetime_l1(run.u_traj) + spacetime_l1(run.v_traj));
    const double tol = kModelTol * scale +
                       kSupersolC * detail::mesh_scale(run.u_traj) * scale;
    for (const auto& phi : family.members) {
        // admissibility of the member itself
        bool uu_ok = true;
        for (int i = 0; i <= 100 && uu_ok; ++i)
            for (int j = 0; j <= 100; ++j)
                if (phi.phi_uu(phi.far_corner_u() * i / 100.0,
                               phi.far_corner_u() * j / 100.0) > 0.0) {
                    uu_ok = false;
                    break;
                }
        const double fc = phi.far_corner_u();
        const bool corner_ok = phi.Bp(fc) == 0.0 && phi.Cp(fc) == 0.0;
        for (const auto& test : tests.members) {
            if (!test.nonnegative) continue;
            const double margin = phi_supersol_margin(run, phi, test);
            EstimateReport r = EstimateReport::inequality(
                "D5.1 phi-supersolution " + phi.name + " x " + test.name, -margin, 0.0,
                tol, dig);
            if (!uu_ok || !corner_ok) {
                r.pass = false;
                r.note = "inadmissible phi member";
            }
            out.push_back(std::move(r));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// ln-supersolution check for systems B and C.

inline double ln_supersol_margin(const ChemoRun& run, const TestFunction& test) {
    const Grid& g = run.u_traj.grid;
    const double dt = run.u_traj.dt;
    const double vol = g.cell_volume();
    const double eps = run.system.eps;
    const double chi = run.system.chi;
    const bool has_g = run.system.has_g;
    const int n1 = g.dim == 2 ? g.cells[1] : 1;

    double lhs = 0.0, rhs = 0.0;
    for (std::size_t n = 0; n + 1 < run.u_traj.frame_count(); ++n) {
        const double t = n * dt;
        if (t >= test.t_end) break;
        const ScalarField& u = run.u_traj.frames[n];
        const ScalarField& v = run.v_traj.frames[n];
        double cl = 0.0, cr = 0.0;
        for (int i1 = 0; i1 < n1; ++i1)
            for (int i0 = 0; i0 < g.cells[0]; ++i0) {
                const std::size_t ci = g.index(i0, i1);
                const std::array<double, 2> x{g.center(0, i0),
                                              g.dim == 2 ? g.center(1, i1) : 0.0};
                const double dtau =
                    (test.value(x, t + dt) - test.value(x, t - dt)) / (2.0 * dt);
                cl += -std::log1p(u[ci]) * dtau;
                // the +g/(u+1) sign is what testing the u-equation with
                // tau/(u+1) produces (the phi_u factor of the general
                // supersolution form at phi = ln(u+1))
                if (has_g)
                    cr += (run.system.g.g(u[ci]) / (u[ci] + 1.0)) * test.value(x, t);
            }
        double fa = 0.0;
        for_each_face(g, [&](int axis, std::size_t, std::size_t left, std::size_t right,
                             double face_coord, double transverse) {
            const double h = g.spacing(axis);
            const double gu = (u[right] - u[left]) / h;
            const double gv = (v[right] - v[left]) / h;
            const double ub = 0.5 * (u[left] + u[right]);
            const double vb = 0.5 * (v[left] + v[right]);
            std::array<double, 2> x{};
            x[axis] = face_coord;
            x[1 - axis] = transverse;
            const double tau = test.value(x, t);
            const double gtau = test.grad(axis, x, t);
            const double up1 = ub + 1.0;
            fa += gu * gu / (up1 * up1) * tau;
            fa += -gu * gtau / up1;
            fa += -chi * ub * gu * gv / ((1.0 + eps * ub) * up1 * up1 * vb) * tau;
            fa += chi * ub * gv * gtau / ((1.0 + eps * ub) * up1 * vb);
        });
        lhs += dt * cl * vol;
        rhs += dt * (cr * vol + fa * vol);
    }
    double init = 0.0;
    const ScalarField& u0 = run.u_traj.frames.front();
    for (int i1 = 0; i1 < n1; ++i1)
        for (int i0 = 0; i0 < g.cells[0]; ++i0) {
            const std::array<double, 2> x{g.center(0, i0),
                                          g.dim == 2 ? g.center(1, i1) : 0.0};
            init += std::log1p(u0[g.index(i0, i1)]) * test.value(x, 0.0);
        }
    lhs -= init * vol;
    return lhs - rhs;
}

inline EstimateReport check_ln_supersolution(const ChemoRun& run,
                                             const TestFunctionSet& tests) {
    require(run.system.variant != ChemoVariant::A,
            "check_ln_supersolution: systems B and C only");
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& test : tests.members) {
        if (!test.nonnegative) continue;
        worst = std::min(worst, ln_supersol_margin(run, test));
    }
    require(std::isfinite(worst), "check_ln_supersolution: no nonnegative tests given");
    const double scale =
        std::max(1.0, spacetime_l1(run.u_traj) + spacetime_l1(run.v_traj));
    const double tol = kModelTol * scale +
                       kSupersolC * detail::mesh_scale(run.u_traj) * scale;
    return EstimateReport::inequality(
        run.system.variant == ChemoVariant::B ? "D6.1 ln-supersolution"
                                              : "D7.1 ln-supersolution",
        -worst, 0.0, tol, digest(run.u_traj) ^ digest(run.v_traj),
        "min margin over nonnegative tests");
}

// ---------------------------------------------------------------------------
// Mass budget: equality for B, inequality (with the g budget) for A and C.

inline std::vector<EstimateReport> check_mass_budget(const ChemoRun& run) {
    std::vector<EstimateReport> out;
    const std::uint64_t dig = digest(run.u_traj);
    const double mass0 = integrate(run.u_traj.frames.front());
    const double scale = std::max(1.0, std::abs(mass0));
    double worst_eq = 0.0, worst_ineq = std::numeric_limits<double>::infinity();
    double g_budget = 0.0;
    std::size_t worst_frame = 0;
    for (std::size_t n = 1; n < run.u_traj.frame_count(); ++n) {
        const double m = integrate(run.u_traj.frames[n]);
        if (run.system.variant == ChemoVariant::B) {
            if (std::abs(m - mass0) > worst_eq) {
                worst_eq = std::abs(m - mass0);
                worst_frame = n;
            }
        } else {
            g_budget += run.u_traj.dt * run.diagnostics[n - 1].g_integral;
            const double margin = mass0 + g_budget - m;
            if (margin < worst_ineq) {
                worst_ineq = margin;
                worst_frame = n;
            }
        }
    }
    if (run.system.variant == ChemoVariant::B) {
        out.push_back(EstimateReport::equality("D6.1 mass conservation", worst_eq, 0.0,
                                               1e-9 * scale, dig,
                                               "worst frame " + std::to_string(worst_frame)));
    } else {
        const char* id = run.system.variant == ChemoVariant::A ? "D5.1 mass budget"
                                                               : "D7.1 mass budget";
        out.push_back(EstimateReport::inequality(
            id, -worst_ineq, 0.0, 1e-9 * scale, dig,
            "per-frame min of mass0 + integral of g - mass(t); worst frame " +
                std::to_string(worst_frame)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dissipation functionals and bounds per system.

inline std::vector<EstimateReport> check_dissipation_bounds(const ChemoRun& run) {
    std::vector<EstimateReport> out;
    const std::uint64_t dig = digest(run.u_traj) ^ digest(run.v_traj);
    const Grid& g = run.u_traj.grid;
    const double dt = run.u_traj.dt;
    const double T = run.u_traj.horizon();
    const double finite_guard = 1e12;

    if (run.system.variant == ChemoVariant::C) {
        // v never exceeds its initial sup.
        double vmax = 0.0;
        for (const auto& d : run.diagnostics) vmax = std::max(vmax, d.max_v);
        const double v0max = run.diagnostics.front().max_v;
        out.push_back(EstimateReport::inequality("L7.2 v upper bound", vmax, v0max, 1e-12,
                                                 dig));

        // per-step quasi-energy dissipation inequality
        double worst = std::numeric_limits<double>::infinity();
        const double chi = run.system.chi;
        double h = g.spacing(0);
        if (g.dim == 2) h = std::max(h, g.spacing(1));
        const double tol_discr = kQuasiEnergyC * (dt + h);
        for (std::size_t n = 0; n + 1 < run.u_traj.frame_count(); ++n) {
            const auto& d0 = run.diagnostics[n];
            const auto& d1 = run.diagnostics[n + 1];
            const double lhs = (d1.quasi_energy - d0.quasi_energy) / dt;
            const double rhs = -0.5 * d1.diss_u - 0.5 * chi * chi * d1.diss_v +
                               d0.g_abs_integral + d0.mass_u;
            worst = std::min(worst, rhs + tol_discr - lhs);
        }
        out.push_back(EstimateReport::inequality(
            "L7.3 quasi-energy dissipation", -worst, 0.0, 0.0, dig,
            "per-step with tol_discr = " + std::to_string(tol_discr)));
    }

    if (run.system.variant == ChemoVariant::A) {
        // |g| budget: discrete mass identity plus |g| <= 2 max g+ − g.
        double g_abs = 0.0, g_signed = 0.0;
        for (std::size_t n = 0; n + 1 < run.u_traj.frame_count(); ++n) {
            g_abs += dt * run.diagnostics[n].g_abs_integral;
            g_signed += dt * run.diagnostics[n].g_integral;
        }
        const double gmax = std::max(0.0, run.system.g.max_g());
        const double rhs = 2.0 * gmax * g.domain_volume() * T - g_signed;
        out.push_back(EstimateReport::inequality("L5.3 dampening budget", g_abs, rhs,
                                                 kModelTol * (1.0 + rhs), dig));

        // L5.5 diagnostic: ∇((u+1)^{−p} e^{−κv}) over a (p, κ) grid.
        for (double p : {0.25, 0.5, 1.0})
            for (double kap : {0.5, 1.0}) {
                double val = 0.0;
                for (std::size_t n = 1; n < run.u_traj.frame_count(); ++n) {
                    const ScalarField& u = run.u_traj.frames[n];
                    const ScalarField& v = run.v_traj.frames[n];
                    ScalarField w(g);
                    for (std::size_t i = 0; i < w.size(); ++i)
                        w[i] = std::pow(u[i] + 1.0, -p) * std::exp(-kap * v[i]);
                    val += dt * detail::face_energy(w, [](double, double) { return 1.0; });
                }
                out.push_back(EstimateReport::inequality(
                    "L5.5 weighted gradient p=" + std::to_string(p) +
                        " kappa=" + std::to_string(kap),
                    val, finite_guard, 0.0, dig,
                    "value report; boundedness across eps checked by sweeps"));
            }

        // L5.6 diagnostic: doubly truncated ∇u energies.
        for (double hlev : {1.0, 2.0, 4.0, 8.0}) {
            double val = 0.0;
            for (std::size_t n = 1; n < run.u_traj.frame_count(); ++n) {
                const ScalarField& u = run.u_traj.frames[n];
                const ScalarField& v = run.v_traj.frames[n];
                double acc = 0.0;
                for_each_face(g, [&](int axis, std::size_t, std::size_t l, std::size_t r,
                                     double, double) {
                    if (u[l] <= hlev && u[r] <= hlev && v[l] <= hlev && v[r] <= hlev) {
                        const double gu = (u[r] - u[l]) / g.spacing(axis);
                        acc += gu * gu;
                    }
                });
                val += dt * acc * g.cell_volume();
            }
            out.push_back(EstimateReport::inequality(
                "L5.6 truncated grad-u h=" + std::to_string(hlev), val, finite_guard, 0.0,
                dig, "value report; boundedness across eps checked by sweeps"));
        }
    }

    if (run.system.variant == ChemoVariant::B) {
        // lower comparison bound min v0 e^{-t}
        double worst = std::numeric_limits<double>::infinity();
        const double v0min = run.diagnostics.front().min_v;
        for (const auto& d : run.diagnostics)
            worst = std::min(worst, d.min_v - v0min * std::exp(-d.t));
        out.push_back(EstimateReport::inequality("L6.3 v lower bound", -worst, 0.0, 1e-9,
                                                 dig));

        // L6.4 functionals (r pinned to 3/2 for reporting)
        double diss = 0.0, ur = 0.0;
        for (std::size_t n = 1; n < run.u_traj.frame_count(); ++n) {
            diss += dt * run.diagnostics[n].diss_u;
            const ScalarField& u = run.u_traj.frames[n];
            double a = 0.0;
            for (double uv : u.values) a += std::pow(std::max(uv, 0.0), 1.5);
            ur += dt * a * g.cell_volume();
        }
        out.push_back(EstimateReport::inequality(
            "L6.4 dissipation + L^r", diss + ur, finite_guard, 0.0, dig,
            "value report; boundedness across eps checked by sweeps"));
    }
    return out;
}

}  // namespace gradflux
