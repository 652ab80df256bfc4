#pragma once

// Implicit θ-scheme for v_t = Δv − κv + f with homogeneous Neumann data.
// 1D steps go through a tridiagonal elimination, 2D through matrix-free
// conjugate gradients on the SPD operator I/dt + θκ − θΔ.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gradflux/grid.hpp"

namespace gradflux {

struct SolverConfig {
    double dt = 1e-3;
    double theta = 1.0;       // in [1/2, 1]; 1 = implicit Euler
    double linear_tol = 1e-10;  // relative residual for iterative solves
    int max_iter = 20000;

    void validate() const {
        require(dt > 0.0, "SolverConfig: dt must be positive");
        require(theta >= 0.5 && theta <= 1.0, "SolverConfig: theta must lie in [1/2, 1]");
        require(linear_tol > 0.0 && max_iter > 0, "SolverConfig: bad linear solve limits");
    }
};

struct HeatProblem {
    double kappa = 0.0;
    ScalarField v0;
    FieldTrajectory f;  // frame n = f(·, t_n); may be empty for f ≡ 0
};

class SolverError : public Error {
public:
    using Error::Error;
};

namespace detail {

// Solves (1/dt + theta*kappa - theta*Δ) z = rhs on a 1D grid.
inline ScalarField solve_implicit_1d(const Grid& g, const ScalarField& rhs, double dt,
                                     double theta, double kappa) {
    const int n = g.cells[0];
    const double h = g.spacing(0);
    const double off = -theta / (h * h);
    const double base = 1.0 / dt + theta * kappa;

    std::vector<double> diag(n), upper(n - 1, off), lower(n - 1, off), x(rhs.values);
    for (int i = 0; i < n; ++i) {
        const int nfaces = (i == 0 || i == n - 1) ? 1 : 2;
        diag[i] = base + nfaces * theta / (h * h);
    }
    // Thomas elimination.
    std::vector<double> gam(n, 0.0);
    double bet = diag[0];
    require(bet > 0.0, "heat: implicit operator lost positivity (reduce dt for kappa < 0)");
    x[0] /= bet;
    for (int i = 1; i < n; ++i) {
        gam[i] = upper[i - 1] / bet;
        bet = diag[i] - lower[i - 1] * gam[i];
        require(bet > 0.0, "heat: tridiagonal elimination broke down");
        x[i] = (x[i] - lower[i - 1] * x[i - 1]) / bet;
    }
    for (int i = n - 2; i >= 0; --i) x[i] -= gam[i + 1] * x[i + 1];

    ScalarField out(g);
    out.values = std::move(x);
    return out;
}

inline ScalarField apply_implicit_op(const ScalarField& z, double dt, double theta,
                                     double kappa) {
    ScalarField lap = laplacian_neumann(z);
    ScalarField out(z.grid);
    const double c = 1.0 / dt + theta * kappa;
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = c * z[i] - theta * lap[i];
    return out;
}

inline ScalarField solve_implicit_cg(const Grid& g, const ScalarField& rhs, double dt,
                                     double theta, double kappa, double tol,
                                     int max_iter) {
    ScalarField x(g, 0.0);
    ScalarField r = rhs;
    ScalarField p = r;
    auto dot = [](const ScalarField& a, const ScalarField& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    };
    double rr = dot(r, r);
    const double rhs_norm = std::sqrt(dot(rhs, rhs));
    if (rhs_norm == 0.0) return x;
    const double target = tol * rhs_norm;
    for (int it = 0; it < max_iter; ++it) {
        if (std::sqrt(rr) <= target) return x;
        ScalarField ap = apply_implicit_op(p, dt, theta, kappa);
        const double alpha = rr / dot(p, ap);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        const double rr_new = dot(r, r);
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
    }
    if (std::sqrt(rr) <= target) return x;
    throw SolverError("heat: CG failed to reach relative residual " + std::to_string(tol) +
                      " within " + std::to_string(max_iter) +
                      " iterations (residual " + std::to_string(std::sqrt(rr) / rhs_norm) +
                      ")");
}

inline ScalarField solve_implicit(const Grid& g, const ScalarField& rhs, double dt,
                                  double theta, double kappa, const SolverConfig& cfg) {
    if (kappa < 0.0)
        require(dt * theta * std::abs(kappa) < 1.0,
                "heat: for kappa < 0 require dt < 1/(theta*|kappa|)");
    if (g.dim == 1) return solve_implicit_1d(g, rhs, dt, theta, kappa);
    return solve_implicit_cg(g, rhs, dt, theta, kappa, cfg.linear_tol, cfg.max_iter);
}

}  // namespace detail

// One step of (I/dt − θ(Δ−κ)) z_{n+1} = z_n/dt + (1−θ)(Δ−κ)z_n + θf_next + (1−θ)f_now.
inline ScalarField step_theta(const ScalarField& current, const ScalarField& f_now,
                              const ScalarField& f_next, double kappa,
                              const SolverConfig& config) {
    config.validate();
    require(current.grid == f_now.grid && current.grid == f_next.grid,
            "step_theta: grids must match");
    const double th = config.theta;
    ScalarField rhs(current.grid);
    if (th < 1.0) {
        ScalarField lap = laplacian_neumann(current);
        for (std::size_t i = 0; i < rhs.size(); ++i)
            rhs[i] = current[i] / config.dt + (1.0 - th) * (lap[i] - kappa * current[i]) +
                     th * f_next[i] + (1.0 - th) * f_now[i];
    } else {
        for (std::size_t i = 0; i < rhs.size(); ++i)
            rhs[i] = current[i] / config.dt + f_next[i];
    }
    return detail::solve_implicit(current.grid, rhs, config.dt, th, kappa, config);
}

inline FieldTrajectory solve_heat(const HeatProblem& problem, double T,
                                  const SolverConfig& config) {
    config.validate();
    require(T > 0.0, "solve_heat: horizon must be positive");
    const Grid& g = problem.v0.grid;
    const std::size_t steps = static_cast<std::size_t>(std::ceil(T / config.dt - 1e-12));
    const bool have_f = !problem.f.frames.empty();
    if (have_f) {
        require(problem.f.grid == g, "solve_heat: source grid mismatch");
        require(problem.f.frame_count() >= steps + 1,
                "solve_heat: source trajectory does not cover [0, T]");
    }
    const ScalarField zero(g, 0.0);
    FieldTrajectory traj(g, config.dt);
    traj.push(problem.v0);
    for (std::size_t n = 0; n < steps; ++n) {
        const ScalarField& fn = have_f ? problem.f.frames[n] : zero;
        const ScalarField& fn1 = have_f ? problem.f.frames[n + 1] : zero;
        traj.push(step_theta(traj.frames.back(), fn, fn1, problem.kappa, config));
    }
    return traj;
}

// θ-blend of the source actually used in step n; the discrete mass identity
// ∫z_M − ∫z_0 = Σ_n dt ∫ f̂_n holds against exactly this blend.
inline ScalarField source_blend(const HeatProblem& problem, const SolverConfig& config,
                                std::size_t n, const Grid& g) {
    if (problem.f.frames.empty()) return ScalarField(g, 0.0);
    const ScalarField& fn = problem.f.frames[n];
    const ScalarField& fn1 = problem.f.frames[n + 1];
    ScalarField out(g);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = config.theta * fn1[i] + (1.0 - config.theta) * fn[i];
    return out;
}

inline double c0l1_norm(const FieldTrajectory& traj) {
    double m = 0.0;
    for (const auto& f : traj.frames) m = std::max(m, l1_norm(f));
    return m;
}

}  // namespace gradflux
