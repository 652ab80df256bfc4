#pragma once

// Semi-implicit finite-volume solvers for three regularized cross-diffusion
// systems on Neumann boxes:
//   A:  u_t = Δu − ∇·(u ∇v) + g(u),              v_t = Δv − v + u/(1+εu)
//   B:  u_t = Δu − χ∇·(u/((1+εu)v) ∇v),          v_t = Δv − v + u
//   C:  u_t = Δu − χ∇·(u/((1+εu)v) ∇v) + g(u),   v_t = Δv − u v/((1+εu)(1+εv))
//
// Each step solves v first with its linear part implicit (consumption and
// decay folded into the operator with coefficients frozen at t_n, so v stays
// positive), then u with implicit diffusion, explicit upwind taxis built on
// v_{n+1}, and explicit g(u_n). Positivity is asserted every step and never
// repaired by clipping.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gradflux/functionals.hpp"
#include "gradflux/grid.hpp"
#include "gradflux/heat.hpp"

namespace gradflux {

struct DampeningSpec {
    double lambda = 0.0;
    double mu = 1.0;
    double beta = 2.0;  // g(s) = λs − μ s^β

    void validate() const {
        require(mu > 0.0 && beta > 1.0,
                "DampeningSpec: need mu > 0, beta > 1 so that g(s)/s -> -inf");
    }
    double g(double s) const { return lambda * s - mu * std::pow(s, beta); }
    double dg(double s) const {
        return lambda - mu * beta * std::pow(s, beta - 1.0);
    }
    // sup{s >= 0 : g(s) >= 0}
    double positive_root() const {
        return lambda <= 0.0 ? 0.0 : std::pow(lambda / mu, 1.0 / (beta - 1.0));
    }
    double max_g() const {
        // maximum of g on [0, ∞), attained where g' = 0
        if (lambda <= 0.0) return 0.0;
        const double s = std::pow(lambda / (mu * beta), 1.0 / (beta - 1.0));
        return g(s);
    }
};

enum class ChemoVariant { A, B, C };

inline std::string to_string(ChemoVariant v) {
    switch (v) {
        case ChemoVariant::A: return "A";
        case ChemoVariant::B: return "B";
        case ChemoVariant::C: return "C";
    }
    return "?";
}

struct ChemoSystem {
    ChemoVariant variant = ChemoVariant::A;
    double chi = 1.0;  // ignored for A, whose flux is u ∇v
    double eps = 0.1;
    bool has_g = true;
    DampeningSpec g;

    void validate() const {
        require(eps > 0.0 && eps < 1.0, "ChemoSystem: eps must lie in (0,1)");
        require(chi > 0.0, "ChemoSystem: chi must be positive");
        if (variant == ChemoVariant::B)
            require(!has_g, "ChemoSystem: variant B carries no dampening term");
        else
            require(has_g, "ChemoSystem: variants A and C require a dampening term");
        if (has_g) g.validate();
    }
};

class PositivityError : public Error {
public:
    using Error::Error;
};
class CflError : public Error {
public:
    using Error::Error;
};

// Upwind taxis flux on interior faces: (face gradient of v) times the donor
// cell's mobility, donor chosen by the sign of the gradient.
inline FaceField taxis_face_flux(const ScalarField& u, const ScalarField& v,
                                 const ChemoSystem& system) {
    require(u.grid == v.grid, "taxis_face_flux: grid mismatch");
    const Grid& g = u.grid;
    auto mobility = [&](std::size_t cell) {
        const double uc = u[cell];
        if (system.variant == ChemoVariant::A) return uc;
        const double vc = v[cell];
        return system.chi * uc / ((1.0 + system.eps * uc) * vc);
    };
    if (system.variant != ChemoVariant::A) {
        for (std::size_t i = 0; i < v.size(); ++i)
            if (!(v[i] > 0.0))
                throw PositivityError("taxis_face_flux: v <= 0 at cell " + std::to_string(i));
    }
    FaceField flux(g);
    for_each_face(g, [&](int axis, std::size_t fi, std::size_t left, std::size_t right,
                         double, double) {
        const double grad_v = (v[right] - v[left]) / g.spacing(axis);
        const std::size_t donor = grad_v >= 0.0 ? left : right;
        flux.axis_values[axis][fi] = grad_v * mobility(donor);
    });
    return flux;
}

struct ChemoFrameDiagnostics {
    double t = 0.0;
    double mass_u = 0.0;
    double min_u = 0.0, max_u = 0.0;
    double min_v = 0.0, max_v = 0.0;
    double quasi_energy = 0.0;   // system C only
    double diss_u = 0.0;         // ∫ |∇u|²/(u+1)²
    double diss_v = 0.0;         // ∫ |∇v|²/v²
    double g_integral = 0.0;     // ∫ g(u)
    double g_abs_integral = 0.0; // ∫ |g(u)|
};

struct ChemoRun {
    ChemoSystem system;
    FieldTrajectory u_traj;
    FieldTrajectory v_traj;
    std::vector<ChemoFrameDiagnostics> diagnostics;
};

// −(∫ ln(u+1) + χ² ∫ ln v)
inline double quasi_energy(const ScalarField& u, const ScalarField& v, double chi) {
    require(u.grid == v.grid, "quasi_energy: grid mismatch");
    double su = 0.0, sv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        require(v[i] > 0.0, "quasi_energy: v <= 0");
        su += std::log1p(u[i]);
        sv += std::log(v[i]);
    }
    const double vol = u.grid.cell_volume();
    return -(su * vol + chi * chi * sv * vol);
}

// ∫ u^p v^q for p, q in (0, 1]
inline double functional_upvq(const ScalarField& u, const ScalarField& v, double p,
                              double q) {
    require(u.grid == v.grid, "functional_upvq: grid mismatch");
    require(p > 0.0 && p <= 1.0 && q > 0.0 && q <= 1.0,
            "functional_upvq: p, q must lie in (0,1]");
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        require(u[i] >= 0.0 && v[i] > 0.0, "functional_upvq: needs u >= 0, v > 0");
        s += std::pow(u[i], p) * std::pow(v[i], q);
    }
    return s * u.grid.cell_volume();
}

namespace detail {

// Implicit solve of (1/dt − Δ + r) w = rhs with cell-wise r >= 0: Thomas in
// 1D, CG in 2D. Reuses the heat machinery for constant r; variable r keeps
// its own path.
inline ScalarField solve_reaction_diffusion(const Grid& g, const ScalarField& rhs,
                                            const ScalarField& r, double dt,
                                            const SolverConfig& cfg) {
    if (g.dim == 1) {
        const int n = g.cells[0];
        const double h = g.spacing(0);
        const double off = -1.0 / (h * h);
        std::vector<double> diag(n), gam(n, 0.0), x(rhs.values);
        for (int i = 0; i < n; ++i) {
            const int nfaces = (i == 0 || i == n - 1) ? 1 : 2;
            diag[i] = 1.0 / dt + r[i] + nfaces / (h * h);
        }
        double bet = diag[0];
        x[0] /= bet;
        for (int i = 1; i < n; ++i) {
            gam[i] = off / bet;
            bet = diag[i] - off * gam[i];
            x[i] = (x[i] - off * x[i - 1]) / bet;
        }
        for (int i = n - 2; i >= 0; --i) x[i] -= gam[i + 1] * x[i + 1];
        ScalarField out(g);
        out.values = std::move(x);
        return out;
    }
    // matrix-free CG
    auto apply = [&](const ScalarField& z) {
        ScalarField lap = laplacian_neumann(z);
        ScalarField out(g);
        for (std::size_t i = 0; i < z.size(); ++i)
            out[i] = z[i] / dt + r[i] * z[i] - lap[i];
        return out;
    };
    ScalarField x(g, 0.0), res = rhs, p = res;
    auto dot = [](const ScalarField& a, const ScalarField& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    };
    double rr = dot(res, res);
    const double rhs_norm = std::sqrt(rr);
    if (rhs_norm == 0.0) return x;
    for (int it = 0; it < cfg.max_iter; ++it) {
        if (std::sqrt(rr) <= cfg.linear_tol * rhs_norm) return x;
        ScalarField ap = apply(p);
        const double alpha = rr / dot(p, ap);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] += alpha * p[i];
            res[i] -= alpha * ap[i];
        }
        const double rr_new = dot(res, res);
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = res[i] + beta * p[i];
    }
    if (std::sqrt(rr) <= cfg.linear_tol * rhs_norm) return x;
    throw SolverError("chemo: CG failed to converge");
}

inline void assert_nonnegative(const ScalarField& f, const char* what) {
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] < -1e-12)
            throw PositivityError(std::string(what) + " lost positivity at cell " +
                                  std::to_string(i) + " (value " + std::to_string(f[i]) +
                                  ")");
}

inline void assert_positive(const ScalarField& f, const char* what) {
    for (std::size_t i = 0; i < f.size(); ++i)
        if (!(f[i] > 0.0))
            throw PositivityError(std::string(what) + " lost strict positivity at cell " +
                                  std::to_string(i));
}

}  // namespace detail

// One step: v first (implicit linear part, coefficients frozen at t_n), then
// u (implicit diffusion, explicit upwind taxis on v_{n+1}, explicit g).
inline std::pair<ScalarField, ScalarField> step_chemo(const ScalarField& u_n,
                                                      const ScalarField& v_n,
                                                      const ChemoSystem& system, double dt,
                                                      const SolverConfig& config) {
    system.validate();
    require(u_n.grid == v_n.grid, "step_chemo: grid mismatch");
    const Grid& g = u_n.grid;

    // v-update: (1/dt − Δ + r_n) v_{n+1} = v_n/dt + s_n
    ScalarField r(g, 0.0), s(g, 0.0);
    switch (system.variant) {
        case ChemoVariant::A:
            for (std::size_t i = 0; i < r.size(); ++i) {
                r[i] = 1.0;
                s[i] = u_n[i] / (1.0 + system.eps * u_n[i]);
            }
            break;
        case ChemoVariant::B:
            for (std::size_t i = 0; i < r.size(); ++i) {
                r[i] = 1.0;
                s[i] = u_n[i];
            }
            break;
        case ChemoVariant::C:
            for (std::size_t i = 0; i < r.size(); ++i)
                r[i] = u_n[i] /
                       ((1.0 + system.eps * u_n[i]) * (1.0 + system.eps * v_n[i]));
            break;
    }
    ScalarField rhs_v(g);
    for (std::size_t i = 0; i < rhs_v.size(); ++i) rhs_v[i] = v_n[i] / dt + s[i];
    ScalarField v_next = detail::solve_reaction_diffusion(g, rhs_v, r, dt, config);
    detail::assert_positive(v_next, "chemo v");

    // CFL for the explicit upwind taxis, velocity = flux / donor u.
    FaceField flux = taxis_face_flux(u_n, v_next, system);
    double vmax = 0.0;
    double hmin = g.spacing(0);
    if (g.dim == 2) hmin = std::min(hmin, g.spacing(1));
    for_each_face(g, [&](int axis, std::size_t fi, std::size_t left, std::size_t right,
                         double, double) {
        const double grad_v = (v_next[right] - v_next[left]) / g.spacing(axis);
        const std::size_t donor = grad_v >= 0.0 ? left : right;
        double vel = std::abs(grad_v);
        if (system.variant != ChemoVariant::A)
            vel *= system.chi / ((1.0 + system.eps * u_n[donor]) * v_next[donor]);
        (void)fi;
        vmax = std::max(vmax, vel);
    });
    if (dt > hmin / (2.0 * std::max(vmax, 1e-300)))
        throw CflError("step_chemo: advective CFL violated (max taxis velocity " +
                       std::to_string(vmax) + ", need dt <= " +
                       std::to_string(hmin / (2.0 * vmax)) + "); reduce dt");
    if (system.has_g) {
        double dg_max = 0.0;
        for (std::size_t i = 0; i < u_n.size(); ++i)
            dg_max = std::max(dg_max, std::abs(system.g.dg(u_n[i])));
        if (dt * dg_max > 0.5)
            throw CflError("step_chemo: dampening step bound dt*|g'| <= 1/2 violated "
                           "(dt*|g'| = " +
                           std::to_string(dt * dg_max) + "); reduce dt");
    }

    // u-update: (1/dt − Δ) u_{n+1} = u_n/dt − div(flux) + g(u_n)
    ScalarField rhs_u(g);
    for (std::size_t i = 0; i < rhs_u.size(); ++i)
        rhs_u[i] = u_n[i] / dt + (system.has_g ? system.g.g(u_n[i]) : 0.0);
    for_each_face(g, [&](int axis, std::size_t fi, std::size_t left, std::size_t right,
                         double, double) {
        const double f = flux.axis_values[axis][fi];
        const double h = g.spacing(axis);
        rhs_u[left] -= f / h;
        rhs_u[right] += f / h;
    });
    ScalarField zero_r(g, 0.0);
    ScalarField u_next = detail::solve_reaction_diffusion(g, rhs_u, zero_r, dt, config);
    detail::assert_nonnegative(u_next, "chemo u");

    return {std::move(u_next), std::move(v_next)};
}

inline ChemoRun solve_chemo(const ChemoSystem& system, const ScalarField& u0,
                            const ScalarField& v0, double T, const SolverConfig& config) {
    system.validate();
    config.validate();
    require(u0.grid == v0.grid, "solve_chemo: grid mismatch");
    detail::assert_nonnegative(u0, "chemo u0");
    if (system.variant != ChemoVariant::A) detail::assert_positive(v0, "chemo v0");
    else detail::assert_nonnegative(v0, "chemo v0");

    const std::size_t steps = static_cast<std::size_t>(std::ceil(T / config.dt - 1e-12));
    ChemoRun run;
    run.system = system;
    run.u_traj = FieldTrajectory(u0.grid, config.dt);
    run.v_traj = FieldTrajectory(u0.grid, config.dt);
    run.u_traj.push(u0);
    run.v_traj.push(v0);

    auto record = [&](std::size_t n) {
        const ScalarField& u = run.u_traj.frames[n];
        const ScalarField& v = run.v_traj.frames[n];
        ChemoFrameDiagnostics d;
        d.t = n * config.dt;
        d.mass_u = integrate(u);
        d.min_u = *std::min_element(u.values.begin(), u.values.end());
        d.max_u = *std::max_element(u.values.begin(), u.values.end());
        d.min_v = *std::min_element(v.values.begin(), v.values.end());
        d.max_v = *std::max_element(v.values.begin(), v.values.end());
        d.diss_u = detail::face_energy(u, [](double l, double r) {
            const double m = 0.5 * (l + r) + 1.0;
            return 1.0 / (m * m);
        });
        d.diss_v = detail::face_energy(v, [](double l, double r) {
            const double m = 0.5 * (l + r);
            return 1.0 / (m * m);
        });
        if (system.variant == ChemoVariant::C)
            d.quasi_energy = quasi_energy(u, v, system.chi);
        if (system.has_g) {
            double gs = 0.0, ga = 0.0;
            for (double uv : u.values) {
                const double gv = system.g.g(uv);
                gs += gv;
                ga += std::abs(gv);
            }
            d.g_integral = gs * u.grid.cell_volume();
            d.g_abs_integral = ga * u.grid.cell_volume();
        }
        run.diagnostics.push_back(d);
    };

    record(0);
    for (std::size_t n = 0; n < steps; ++n) {
        auto [u_next, v_next] =
            step_chemo(run.u_traj.frames.back(), run.v_traj.frames.back(), system,
                       config.dt, config);
        run.u_traj.push(std::move(u_next));
        run.v_traj.push(std::move(v_next));
        record(n + 1);
    }
    return run;
}

}  // namespace gradflux
