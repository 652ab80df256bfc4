#pragma once

// The functionals the estimates are made of: truncations T_k and S_k,
// truncated/weighted/ψ-weighted gradient energies, L^λ gradient norms, the
// dual-norm surrogate, the Landes relaxation η_{σ}, and the one-parameter
// de la Vallée Poussin weight Φ_c with its Young constant.
//
// Trajectory energies are summed over frames 1..M (the states produced by
// the implicit stepper). With that rule the discrete energy identities hold
// with the same constants as the continuum estimates; a left-endpoint sum
// would sample the initial layer of rough data and break them.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "gradflux/grid.hpp"
#include "gradflux/test_functions.hpp"

namespace gradflux {

inline double truncate_value(double s, double k) { return std::clamp(s, -k, k); }

inline ScalarField truncate(const ScalarField& z, double k) {
    require(k > 0.0, "truncate: k must be positive");
    ScalarField out = z;
    for (double& v : out.values) v = truncate_value(v, k);
    return out;
}

// ∫ S_k(z) with S_k(s) = s²/2 for |s| <= k and k|s| − k²/2 beyond.
inline double sk_integral(const ScalarField& z, double k) {
    require(k > 0.0, "sk_integral: k must be positive");
    double s = 0.0;
    for (double v : z.values) {
        const double a = std::abs(v);
        s += a <= k ? 0.5 * v * v : k * a - 0.5 * k * k;
    }
    return s * z.grid.cell_volume();
}

namespace detail {

inline double face_energy(const ScalarField& z,
                          const std::function<double(double, double)>& face_weight) {
    const Grid& g = z.grid;
    double s = 0.0;
    for_each_face(g, [&](int axis, std::size_t, std::size_t left, std::size_t right,
                         double, double) {
        const double grad = (z[right] - z[left]) / g.spacing(axis);
        s += face_weight(z[left], z[right]) * grad * grad;
    });
    return s * g.cell_volume();
}

// Σ over frames 1..M of dt * E(frame).
template <class FrameFunctional>
double trajectory_energy(const FieldTrajectory& traj, FrameFunctional&& per_frame) {
    require(traj.frame_count() >= 2, "trajectory energy: need at least one step");
    double s = 0.0;
    for (std::size_t n = 1; n < traj.frame_count(); ++n) s += per_frame(traj.frames[n]);
    return s * traj.dt;
}

}  // namespace detail

inline double truncated_gradient_energy_frame(const ScalarField& z, double k) {
    ScalarField tz = truncate(z, k);
    return detail::face_energy(tz, [](double, double) { return 1.0; });
}

inline double truncated_gradient_energy(const FieldTrajectory& traj, double k) {
    require(k > 0.0, "truncated_gradient_energy: k must be positive");
    return detail::trajectory_energy(
        traj, [k](const ScalarField& z) { return truncated_gradient_energy_frame(z, k); });
}

inline double gradient_energy(const FieldTrajectory& traj) {
    return detail::trajectory_energy(traj, [](const ScalarField& z) {
        return detail::face_energy(z, [](double, double) { return 1.0; });
    });
}

// ∫∫ |∇z|² / (|z|+1)^{1+α}, weight evaluated at the arithmetic face mean of |z|.
inline double weighted_gradient_energy(const FieldTrajectory& traj, double alpha) {
    require(alpha > 0.0, "weighted_gradient_energy: alpha must be positive");
    return detail::trajectory_energy(traj, [alpha](const ScalarField& z) {
        return detail::face_energy(z, [alpha](double l, double r) {
            const double zbar = 0.5 * (std::abs(l) + std::abs(r));
            return std::pow(zbar + 1.0, -(1.0 + alpha));
        });
    });
}

struct PsiSpec {
    std::string family = "power";
    double p = 2.0;  // ψ(s) = (s+1)^p for the power family
    std::function<double(double)> psi, dpsi, ddpsi;

    static PsiSpec power(double p) {
        require(p > 1.0, "PsiSpec: power exponent must exceed 1");
        PsiSpec s;
        s.family = "power";
        s.p = p;
        s.psi = [p](double v) { return std::pow(std::max(v, 0.0) + 1.0, p); };
        s.dpsi = [p](double v) { return p * std::pow(std::max(v, 0.0) + 1.0, p - 1.0); };
        s.ddpsi = [p](double v) {
            return p * (p - 1.0) * std::pow(std::max(v, 0.0) + 1.0, p - 2.0);
        };
        return s;
    }
    static PsiSpec tabulated(std::function<double(double)> f, std::function<double(double)> df,
                             std::function<double(double)> ddf) {
        PsiSpec s;
        s.family = "custom-tabulated";
        s.psi = std::move(f);
        s.dpsi = std::move(df);
        s.ddpsi = std::move(ddf);
        return s;
    }

    // ψ ≥ 0 and convex on the sampled range; monotone unbounded tail.
    void check_on_range(double lo, double hi, int samples = 512) const {
        for (int i = 0; i <= samples; ++i) {
            const double s = lo + (hi - lo) * i / samples;
            require(psi(s) >= 0.0, "PsiSpec: psi negative at sampled point");
            require(ddpsi(s) >= 0.0, "PsiSpec: psi not convex at sampled point");
        }
        require(psi(hi) >= psi(0.5 * (lo + hi)),
                "PsiSpec: psi not monotone toward the range maximum");
    }
};

// ∫∫ ψ''(z) |∇z|², ψ'' evaluated at the face mean of |z|.
inline double psi_weighted_energy(const FieldTrajectory& traj, const PsiSpec& psi) {
    return detail::trajectory_energy(traj, [&psi](const ScalarField& z) {
        return detail::face_energy(z, [&psi](double l, double r) {
            return psi.ddpsi(0.5 * (std::abs(l) + std::abs(r)));
        });
    });
}

inline double lambda_upper_bound(int dim) {
    return (dim + 2.0) / (dim + 1.0);
}

// L^λ(Ω×(0,T)) norm of the face gradient, λ in [1, (d+2)/(d+1)).
inline double grad_lambda_norm(const FieldTrajectory& traj, double lambda) {
    const double lmax = lambda_upper_bound(traj.grid.dim);
    require(lambda >= 1.0 && lambda < lmax,
            "grad_lambda_norm: lambda must lie in [1, (n+2)/(n+1)) = [1, " +
                std::to_string(lmax) + ") for n = " + std::to_string(traj.grid.dim));
    const double s = detail::trajectory_energy(traj, [lambda](const ScalarField& z) {
        const Grid& g = z.grid;
        double acc = 0.0;
        for_each_face(g, [&](int axis, std::size_t, std::size_t left, std::size_t right,
                             double, double) {
            const double grad = (z[right] - z[left]) / g.spacing(axis);
            acc += std::pow(std::abs(grad), lambda);
        });
        return acc * g.cell_volume();
    });
    return std::pow(s, 1.0 / lambda);
}

// Σ_n dt · max over the dictionary of |∫ (z_{n+1}−z_n)/dt · φ|. A lower
// bound for the dual-space time-derivative norm over this dictionary only;
// reported as a surrogate, never as the norm.
inline double dual_time_derivative_surrogate(const FieldTrajectory& traj,
                                             const DualDictionary& dict) {
    require(!dict.entries.empty(), "dual surrogate: empty dictionary");
    require(traj.frame_count() >= 2, "dual surrogate: need at least one step");
    const double vol = traj.grid.cell_volume();
    double total = 0.0;
    for (std::size_t n = 0; n + 1 < traj.frame_count(); ++n) {
        const ScalarField& a = traj.frames[n];
        const ScalarField& b = traj.frames[n + 1];
        double best = 0.0;
        for (const auto& e : dict.entries) {
            double s = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i)
                s += (b[i] - a[i]) * e.samples[i];
            best = std::max(best, std::abs(s * vol / traj.dt));
        }
        total += traj.dt * best;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Landes relaxation toward T_k v.

struct LandesParams {
    double k = 1.0;
    double sigma = 1.0;
    ScalarField zeta;  // initial approximation; truncated internally

    void validate() const {
        require(k > 0.0 && sigma > 0.0, "LandesParams: k and sigma must be positive");
    }
};

// Exact exponential integrator for η' = σ(T_k v − η) with T_k v frozen per
// step: η_{n+1} = e^{−σ dt} η_n + (1 − e^{−σ dt}) T_k v_{n+1}. The convex
// combination keeps ‖η‖_∞ ≤ k unconditionally; the final clamp only
// removes last-ulp rounding.
inline FieldTrajectory landes_apply(const FieldTrajectory& traj, const LandesParams& params) {
    params.validate();
    require(params.zeta.grid == traj.grid, "landes_apply: zeta grid mismatch");
    const double decay = std::exp(-params.sigma * traj.dt);
    const double gain = 1.0 - decay;
    FieldTrajectory eta(traj.grid, traj.dt);
    eta.push(truncate(params.zeta, params.k));
    for (std::size_t n = 1; n < traj.frame_count(); ++n) {
        ScalarField next(traj.grid);
        const ScalarField& prev = eta.frames.back();
        const ScalarField& v = traj.frames[n];
        for (std::size_t i = 0; i < next.size(); ++i) {
            const double target = truncate_value(v[i], params.k);
            next[i] = truncate_value(decay * prev[i] + gain * target, params.k);
        }
        eta.push(std::move(next));
    }
    return eta;
}

struct LandesReport {
    double step_residual_max = 0.0;  // relaxation law with the stepper's own blend
    bool initial_exact = false;      // η(0) == T_k ζ bit for bit
    double linf_max = 0.0;           // max over frames of ‖η‖_∞
    std::vector<double> sigma_ladder;              // σ values used for (c)
    std::vector<double> distance_l2w12;            // ‖η − T_k v‖_{L²(W^{1,2})} per σ
    bool ladder_strictly_decreasing = false;
};

inline double l2w12_distance(const FieldTrajectory& a, const FieldTrajectory& b) {
    require(a.frame_count() == b.frame_count(), "l2w12_distance: frame count mismatch");
    double s = 0.0;
    for (std::size_t n = 1; n < a.frame_count(); ++n) {
        ScalarField d(a.grid);
        for (std::size_t i = 0; i < d.size(); ++i)
            d[i] = a.frames[n][i] - b.frames[n][i];
        const double l2 = lp_norm(d, 2.0);
        s += a.dt * (l2 * l2 + detail::face_energy(d, [](double, double) { return 1.0; }));
    }
    return std::sqrt(s);
}

inline LandesReport verify_landes(const FieldTrajectory& traj, const LandesParams& params,
                                  double tol,
                                  const std::vector<double>& sigma_ladder = {1, 4, 16, 64}) {
    params.validate();
    LandesReport report;

    FieldTrajectory eta = landes_apply(traj, params);
    const double decay = std::exp(-params.sigma * traj.dt);
    const double sigma_hat = (1.0 - decay) / traj.dt;  // the stepper's own blend rate
    double worst = 0.0;
    for (std::size_t n = 0; n + 1 < traj.frame_count(); ++n) {
        ScalarField res(traj.grid);
        for (std::size_t i = 0; i < res.size(); ++i) {
            const double target = truncate_value(traj.frames[n + 1][i], params.k);
            res[i] = (eta.frames[n + 1][i] - eta.frames[n][i]) / traj.dt -
                     sigma_hat * (target - eta.frames[n][i]);
        }
        worst = std::max(worst, lp_norm(res, 2.0));
    }
    report.step_residual_max = worst;

    const ScalarField tz = truncate(params.zeta, params.k);
    report.initial_exact = eta.frames.front().values == tz.values;
    for (const auto& f : eta.frames) report.linf_max = std::max(report.linf_max, linf_norm(f));

    FieldTrajectory tkv(traj.grid, traj.dt);
    for (const auto& f : traj.frames) tkv.push(truncate(f, params.k));
    for (double sigma : sigma_ladder) {
        LandesParams p = params;
        p.sigma = sigma;
        report.sigma_ladder.push_back(sigma);
        report.distance_l2w12.push_back(l2w12_distance(landes_apply(traj, p), tkv));
    }
    report.ladder_strictly_decreasing = report.distance_l2w12.size() >= 2;
    double ladder_max = 0.0;
    for (double d : report.distance_l2w12) ladder_max = std::max(ladder_max, d);
    if (ladder_max > 1e-14) {  // an all-zero ladder (constant run) counts as converged
        for (std::size_t i = 0; i + 1 < report.distance_l2w12.size(); ++i)
            if (!(report.distance_l2w12[i + 1] < report.distance_l2w12[i]))
                report.ladder_strictly_decreasing = false;
    }

    (void)tol;
    return report;
}

// ---------------------------------------------------------------------------
// de la Vallée Poussin weight Φ_c(s) = 1 + c[(1+s)ln(1+s) − s].

struct PhiFunction {
    double c = 1.0;
    double young = 0.0;       // c₂ with a·Φ'(b) ≤ Φ(a) + c₂·Φ(b) on the scan grid
    double budget = 0.0;      // certified bound on ∫Φ(|z|) over the families
    std::vector<double> knots;

    double value(double s) const { return 1.0 + c * ((1.0 + s) * std::log1p(s) - s); }
    double deriv(double s) const { return c * std::log1p(s); }
    double second(double s) const { return c / (1.0 + s); }
};

inline double phi_c_integral(const ScalarField& z, double c) {
    PhiFunction phi;
    phi.c = c;
    double s = 0.0;
    for (double v : z.values) s += phi.value(std::abs(v));
    return s * z.grid.cell_volume();
}

class NotUniformlyIntegrable : public Error {
public:
    NotUniformlyIntegrable(const std::string& what, std::vector<double> tails)
        : Error(what), tail_masses(std::move(tails)) {}
    std::vector<double> tail_masses;  // ∫_{|z|>s} |z| of the worst member at s = 1,4,16,64
};

// Smallest c₂ on a (points+1)² grid over [0, range_max]² such that
// a·Φ'(b) ≤ Φ(a) + c₂·Φ(b) holds at every grid point, plus 10% headroom.
inline double young_constant(const PhiFunction& phi, double range_max, int points) {
    require(range_max > 0.0 && points >= 2, "young_constant: bad scan parameters");
    double worst = 0.0;
    for (int i = 0; i <= points; ++i) {
        const double a = range_max * i / points;
        const double pa = phi.value(a);
        for (int j = 0; j <= points; ++j) {
            const double b = range_max * j / points;
            worst = std::max(worst, (a * phi.deriv(b) - pa) / phi.value(b));
        }
    }
    return 1.1 * std::max(worst, 0.0);
}

// Selects the largest c in {1, 1/2, …, 2⁻²⁰} with sup over both families of
// ∫Φ_c(|z|) ≤ budget; throws NotUniformlyIntegrable when no rung qualifies.
inline PhiFunction build_dlvp_phi(const std::vector<std::vector<ScalarField>>& families,
                                  double budget, int knot_count = 10000) {
    require(!families.empty(), "build_dlvp_phi: no families given");
    double value_max = 0.0;
    for (const auto& fam : families) {
        require(!fam.empty(), "build_dlvp_phi: empty family");
        for (const auto& z : fam) {
            require(z.finite(), "build_dlvp_phi: non-finite member");
            value_max = std::max(value_max, linf_norm(z));
        }
    }

    for (int level = 0; level <= 20; ++level) {
        const double c = std::ldexp(1.0, -level);
        double sup = 0.0;
        for (const auto& fam : families)
            for (const auto& z : fam) sup = std::max(sup, phi_c_integral(z, c));
        if (sup <= budget) {
            PhiFunction phi;
            phi.c = c;
            phi.budget = sup;
            const double knot_max = std::max(100.0, value_max);
            phi.knots.resize(knot_count);
            for (int i = 0; i < knot_count; ++i)
                phi.knots[i] = knot_max * i / (knot_count - 1);
            phi.young = young_constant(phi, std::max(100.0, value_max), 400);
            return phi;
        }
    }

    // Report the tails of the worst offender at the smallest c.
    const double c_floor = std::ldexp(1.0, -20);
    const ScalarField* worst = nullptr;
    double worst_val = -1.0;
    for (const auto& fam : families)
        for (const auto& z : fam) {
            const double v = phi_c_integral(z, c_floor);
            if (v > worst_val) {
                worst_val = v;
                worst = &z;
            }
        }
    std::vector<double> tails;
    for (double level : {1.0, 4.0, 16.0, 64.0}) {
        double t = 0.0;
        for (double v : worst->values)
            if (std::abs(v) > level) t += std::abs(v);
        tails.push_back(t * worst->grid.cell_volume());
    }
    throw NotUniformlyIntegrable(
        "build_dlvp_phi: not-uniformly-integrable at this budget (" + std::to_string(budget) +
            "): even c = 2^-20 gives sup integral " + std::to_string(worst_val),
        std::move(tails));
}

// Structural checks of Lemma-4.1 type on the knot table, plus a closed-form
// superlinearity probe Φ(S)/S ≥ 10 · min over knots of Φ(s)/s.
struct PhiStructureReport {
    bool phi_ge_one = true;
    bool convex = true;
    bool s_phi_pp_le_one = true;
    bool superlinear_proxy = true;
    double probe_point = 0.0;
};

inline PhiStructureReport check_phi_structure(const PhiFunction& phi) {
    PhiStructureReport r;
    double min_ratio = std::numeric_limits<double>::infinity();
    for (double s : phi.knots) {
        if (!(phi.value(s) >= 1.0)) r.phi_ge_one = false;
        if (!(phi.second(s) >= 0.0)) r.convex = false;
        if (!(s * phi.second(s) <= 1.0)) r.s_phi_pp_le_one = false;
        if (s > 0.0) min_ratio = std::min(min_ratio, phi.value(s) / s);
    }
    const double target = 10.0 * min_ratio;
    // Φ_c(S)/S ≈ c(ln S − 1) for large S; solve for the probe point.
    const double lnS = std::min(700.0, target / phi.c + 1.0);
    r.probe_point = std::exp(lnS);
    r.superlinear_proxy = phi.value(r.probe_point) / r.probe_point >= target;
    return r;
}

}  // namespace gradflux
