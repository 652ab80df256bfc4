#pragma once

// ε-ladders: data families, sweeps, and Cauchy diagnostics standing in for
// the strong-convergence statements. A ConvergenceReport never claims a
// limit — it reports successive differences, a fitted decay slope and a
// three-way verdict with the thresholds spelled out.

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <string>
#include <vector>

#include "gradflux/functionals.hpp"
#include "gradflux/grid.hpp"
#include "gradflux/heat.hpp"
#include "gradflux/verifier.hpp"

namespace gradflux {

struct HeatData {
    ScalarField v0;
    FieldTrajectory f;  // may be empty for f ≡ 0
};

enum class FamilyKind { MollifiedSpike, TruncatedPower, Custom };

struct DataFamilySpec {
    FamilyKind kind = FamilyKind::MollifiedSpike;
    double target_mass = 1.0;
    double gamma = 0.5;  // width_eps = eps^gamma
    int J = 6;           // J+1 rungs eps_j = 2^{-(j_start+j)}, j = 0..J
    int j_start = 0;
    std::array<double, 2> center{0.5, 0.5};
    std::function<HeatData(double eps, const Grid&, double T, double dt)> custom;
};

struct DataFamily {
    std::vector<double> eps;
    std::vector<HeatData> data;
    std::vector<double> data_l1_differences;  // ‖v0_{j} − v0_{j+1}‖₁
    bool data_l1_cauchy = false;  // checked, not assumed
};

namespace detail {

inline ScalarField renormalize_to_mass(ScalarField f, double mass) {
    const double m = integrate(f);
    require(m > 0.0, "data family: degenerate profile");
    for (double& v : f.values) v *= mass / m;
    return f;
}

inline ScalarField gaussian_bump(const Grid& g, double width,
                                 const std::array<double, 2>& center, double mass) {
    ScalarField f(g, 0.0);
    const int n1 = g.dim == 2 ? g.cells[1] : 1;
    for (int i1 = 0; i1 < n1; ++i1)
        for (int i0 = 0; i0 < g.cells[0]; ++i0) {
            double r2 = std::pow(g.center(0, i0) - center[0], 2);
            if (g.dim == 2) r2 += std::pow(g.center(1, i1) - center[1], 2);
            if (r2 > 16.0 * width * width) continue;  // truncated at 4 widths
            f[g.index(i0, i1)] = std::exp(-r2 / (2.0 * width * width));
        }
    return renormalize_to_mass(std::move(f), mass);
}

inline ScalarField truncated_power_bump(const Grid& g, double width,
                                        const std::array<double, 2>& center, double mass) {
    const double q = 0.5;
    const double cap = std::pow(width, -q);
    ScalarField f(g, 0.0);
    const int n1 = g.dim == 2 ? g.cells[1] : 1;
    for (int i1 = 0; i1 < n1; ++i1)
        for (int i0 = 0; i0 < g.cells[0]; ++i0) {
            double r2 = std::pow(g.center(0, i0) - center[0], 2);
            if (g.dim == 2) r2 += std::pow(g.center(1, i1) - center[1], 2);
            f[g.index(i0, i1)] = std::min(std::pow(r2, -q / 2.0), cap);
        }
    return renormalize_to_mass(std::move(f), mass);
}

}  // namespace detail

inline DataFamily make_data_family(const DataFamilySpec& spec, const Grid& grid, double T,
                                   double dt) {
    require(spec.J >= 1, "make_data_family: ladder needs at least two rungs");
    DataFamily fam;
    double hmax = grid.spacing(0);
    if (grid.dim == 2) hmax = std::max(hmax, grid.spacing(1));
    for (int j = 0; j <= spec.J; ++j) {
        const double eps = std::ldexp(1.0, -(spec.j_start + j));
        fam.eps.push_back(eps);
        if (spec.kind == FamilyKind::Custom) {
            require(static_cast<bool>(spec.custom),
                    "make_data_family: custom kind needs a generator");
            fam.data.push_back(spec.custom(eps, grid, T, dt));
            continue;
        }
        const double width = std::pow(eps, spec.gamma);
        if (width < 2.0 * hmax)
            throw Error("make_data_family: grid cannot resolve this eps (width " +
                        std::to_string(width) + " < 2h = " + std::to_string(2.0 * hmax) +
                        "); refine or shorten ladder");
        HeatData d;
        d.v0 = spec.kind == FamilyKind::MollifiedSpike
                   ? detail::gaussian_bump(grid, width, spec.center, spec.target_mass)
                   : detail::truncated_power_bump(grid, width, spec.center,
                                                  spec.target_mass);
        fam.data.push_back(std::move(d));
    }
    for (std::size_t j = 0; j + 1 < fam.data.size(); ++j) {
        ScalarField diff = fam.data[j].v0;
        for (std::size_t i = 0; i < diff.size(); ++i)
            diff[i] -= fam.data[j + 1].v0[i];
        fam.data_l1_differences.push_back(l1_norm(diff));
    }
    fam.data_l1_cauchy = true;
    for (std::size_t j = 0; j + 1 < fam.data_l1_differences.size(); ++j)
        if (fam.data_l1_differences[j + 1] > fam.data_l1_differences[j])
            fam.data_l1_cauchy = false;
    return fam;
}

struct SweepResult {
    std::vector<double> eps;
    std::vector<HeatData> data;
    std::vector<FieldTrajectory> runs;  // one v-trajectory per rung
    bool data_l1_cauchy = false;
    bool degenerate = false;  // all members identical
    double gamma = 0.0;
    // functional tables: quantity name -> per-rung values
    std::vector<std::pair<std::string, std::vector<double>>> tables;
};

struct SweepConfig {
    double T = 1.0;
    SolverConfig solver;
    double kappa = 0.0;
    int threads = 1;
};

inline SweepResult run_eps_sweep(const DataFamily& family, const SweepConfig& config) {
    require(family.data.size() >= 2, "run_eps_sweep: need at least two rungs");
    SweepResult sweep;
    sweep.eps = family.eps;
    sweep.data = family.data;
    sweep.data_l1_cauchy = family.data_l1_cauchy;

    const std::size_t n = family.data.size();
    sweep.runs.resize(n);
    auto solve_one = [&](std::size_t j) {
        HeatProblem p;
        p.kappa = config.kappa;
        p.v0 = family.data[j].v0;
        p.f = family.data[j].f;
        return solve_heat(p, config.T, config.solver);
    };
    if (config.threads > 1) {
        std::vector<std::future<FieldTrajectory>> futures;
        futures.reserve(n);
        for (std::size_t j = 0; j < n; ++j)
            futures.push_back(std::async(std::launch::async, solve_one, j));
        for (std::size_t j = 0; j < n; ++j) sweep.runs[j] = futures[j].get();
    } else {
        for (std::size_t j = 0; j < n; ++j) sweep.runs[j] = solve_one(j);
    }

    sweep.degenerate = true;
    for (std::size_t j = 1; j < n && sweep.degenerate; ++j)
        sweep.degenerate = sweep.runs[j].frames.back().values ==
                           sweep.runs[0].frames.back().values;

    auto add_table = [&](const std::string& name, std::function<double(std::size_t)> f) {
        std::vector<double> vals(n);
        for (std::size_t j = 0; j < n; ++j) vals[j] = f(j);
        sweep.tables.emplace_back(name, std::move(vals));
    };
    add_table("c0l1", [&](std::size_t j) { return c0l1_norm(sweep.runs[j]); });
    for (double k : {1.0, 2.0, 4.0, 8.0})
        add_table("L2.2 truncated gradient k=" + std::to_string(static_cast<int>(k)),
                  [&, k](std::size_t j) { return truncated_gradient_energy(sweep.runs[j], k); });
    for (double a : {0.5, 1.0, 2.0})
        add_table("L2.3 weighted gradient alpha=" + std::to_string(a),
                  [&, a](std::size_t j) { return weighted_gradient_energy(sweep.runs[j], a); });
    for (double lam : {1.0, 1.1})
        add_table("L2.5 grad norm lambda=" + std::to_string(lam),
                  [&, lam](std::size_t j) { return grad_lambda_norm(sweep.runs[j], lam); });
    return sweep;
}

// ---------------------------------------------------------------------------
// Cauchy ladders

enum class Verdict { CauchyDecreasing, Stagnant, Diverging };

inline std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::CauchyDecreasing: return "cauchy-decreasing";
        case Verdict::Stagnant: return "stagnant";
        case Verdict::Diverging: return "diverging";
    }
    return "?";
}

struct ConvergenceReport {
    std::string quantity;
    std::vector<double> differences;  // d_j between rungs j and j+1
    double fitted_rate = 0.0;         // least-squares slope of log d_j vs j
    Verdict verdict = Verdict::Stagnant;
    std::string policy =
        "cauchy-decreasing iff d nonincreasing over the last half and final <= 0.2*first";
};

inline ConvergenceReport make_report(std::string quantity, std::vector<double> d) {
    ConvergenceReport r;
    r.quantity = std::move(quantity);
    r.differences = std::move(d);
    const std::size_t m = r.differences.size();
    require(m >= 1, "ConvergenceReport: empty ladder");

    double dmax = 0.0;
    for (double v : r.differences) dmax = std::max(dmax, v);
    if (dmax <= 1e-14) {
        r.verdict = Verdict::CauchyDecreasing;  // degenerate ladder
        r.fitted_rate = 0.0;
        return r;
    }

    // least-squares slope of log(d_j) against j over positive entries
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (std::size_t j = 0; j < m; ++j) {
        if (r.differences[j] <= 0.0) continue;
        const double x = static_cast<double>(j), y = std::log(r.differences[j]);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++cnt;
    }
    if (cnt >= 2) r.fitted_rate = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);

    const std::size_t tail = (m + 1) / 2;
    bool tail_decreasing = true;
    for (std::size_t j = m - tail; j + 1 < m; ++j)
        if (r.differences[j + 1] > r.differences[j]) tail_decreasing = false;
    const bool small_final = r.differences.back() <= 0.2 * r.differences.front();
    if (tail_decreasing && small_final)
        r.verdict = Verdict::CauchyDecreasing;
    else if (r.differences.back() >= 1.5 * r.differences.front())
        r.verdict = Verdict::Diverging;
    else
        r.verdict = Verdict::Stagnant;
    return r;
}

namespace detail {

// L²(Ω×(0,T)) distance between per-frame face transforms of two runs.
template <class FaceTransform>
double face_l2_distance(const FieldTrajectory& a, const FieldTrajectory& b,
                        FaceTransform&& transform) {
    require(a.grid == b.grid && a.frame_count() == b.frame_count(),
            "cauchy ladder: runs must share grid, dt and horizon");
    const Grid& g = a.grid;
    double s = 0.0;
    for (std::size_t n = 1; n < a.frame_count(); ++n) {
        const ScalarField& fa = a.frames[n];
        const ScalarField& fb = b.frames[n];
        double acc = 0.0;
        for_each_face(g, [&](int axis, std::size_t, std::size_t l, std::size_t r, double,
                             double) {
            const double h = g.spacing(axis);
            const double da = transform(fa[l], fa[r], h);
            const double db = transform(fb[l], fb[r], h);
            acc += (da - db) * (da - db);
        });
        s += a.dt * acc * g.cell_volume();
    }
    return std::sqrt(s);
}

}  // namespace detail

inline ConvergenceReport cauchy_truncated_gradients(const SweepResult& sweep, double k) {
    require(sweep.runs.size() >= 4, "cauchy ladder: need at least 4 rungs");
    std::vector<double> d;
    for (std::size_t j = 0; j + 1 < sweep.runs.size(); ++j)
        d.push_back(detail::face_l2_distance(
            sweep.runs[j], sweep.runs[j + 1], [k](double l, double r, double h) {
                return (truncate_value(r, k) - truncate_value(l, k)) / h;
            }));
    return make_report("grad T_k, k=" + std::to_string(k), std::move(d));
}

inline ConvergenceReport cauchy_weighted_gradients(const SweepResult& sweep, double r) {
    require(r > 0.5, "cauchy_weighted_gradients: requires r > 1/2");
    std::vector<double> d;
    for (std::size_t j = 0; j + 1 < sweep.runs.size(); ++j)
        d.push_back(detail::face_l2_distance(
            sweep.runs[j], sweep.runs[j + 1], [r](double l, double rr, double h) {
                const double zbar = 0.5 * (std::abs(l) + std::abs(rr));
                return std::pow(zbar + 1.0, -r) * (rr - l) / h;
            }));
    return make_report("(|v|+1)^-r grad v, r=" + std::to_string(r), std::move(d));
}

inline ConvergenceReport cauchy_lambda_gradients(const SweepResult& sweep, double lambda) {
    const double lmax = lambda_upper_bound(sweep.runs.front().grid.dim);
    require(lambda >= 1.0 && lambda < lmax,
            "cauchy_lambda_gradients: lambda must lie in [1, (n+2)/(n+1)) = [1, " +
                std::to_string(lmax) + ")");
    std::vector<double> d;
    const Grid& g = sweep.runs.front().grid;
    for (std::size_t j = 0; j + 1 < sweep.runs.size(); ++j) {
        const FieldTrajectory& a = sweep.runs[j];
        const FieldTrajectory& b = sweep.runs[j + 1];
        double s = 0.0;
        for (std::size_t n = 1; n < a.frame_count(); ++n) {
            double acc = 0.0;
            for_each_face(g, [&](int axis, std::size_t, std::size_t l, std::size_t r,
                                 double, double) {
                const double h = g.spacing(axis);
                const double da = (a.frames[n][r] - a.frames[n][l]) / h;
                const double db = (b.frames[n][r] - b.frames[n][l]) / h;
                acc += std::pow(std::abs(da - db), lambda);
            });
            s += a.dt * acc * g.cell_volume();
        }
        d.push_back(std::pow(s, 1.0 / lambda));
    }
    return make_report("grad v in L^lambda, lambda=" + std::to_string(lambda),
                       std::move(d));
}

inline ConvergenceReport cauchy_l1(const SweepResult& sweep) {
    std::vector<double> d;
    for (std::size_t j = 0; j + 1 < sweep.runs.size(); ++j) {
        const FieldTrajectory& a = sweep.runs[j];
        const FieldTrajectory& b = sweep.runs[j + 1];
        double s = 0.0;
        for (std::size_t n = 0; n + 1 < a.frame_count(); ++n) {
            ScalarField diff = a.frames[n];
            for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= b.frames[n][i];
            s += a.dt * l1_norm(diff);
        }
        d.push_back(s);
    }
    return make_report("v in L1(Omega x (0,T))", std::move(d));
}

inline ConvergenceReport cauchy_c0l1(const SweepResult& sweep) {
    require(sweep.data_l1_cauchy,
            "cauchy_c0l1: the data family does not converge strongly in L1 "
            "(its L1 ladder is not decreasing), so the C0-L1 diagnostic is refused");
    std::vector<double> d;
    for (std::size_t j = 0; j + 1 < sweep.runs.size(); ++j) {
        const FieldTrajectory& a = sweep.runs[j];
        const FieldTrajectory& b = sweep.runs[j + 1];
        double worst = 0.0;
        for (std::size_t n = 0; n < a.frame_count(); ++n) {
            ScalarField diff = a.frames[n];
            for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= b.frames[n][i];
            worst = std::max(worst, l1_norm(diff));
        }
        d.push_back(worst);
    }
    return make_report("v in C0([0,T]; L1)", std::move(d));
}

class PsiHypothesisFailure : public Error {
public:
    PsiHypothesisFailure(const std::string& what, ConvergenceReport ladder)
        : Error(what), hypothesis_ladder(std::move(ladder)) {}
    ConvergenceReport hypothesis_ladder;
};

struct PsiConvergenceResult {
    ConvergenceReport hypothesis_data;     // ψ(v0_eps) in L1
    ConvergenceReport hypothesis_source;   // ψ'(v_eps) f_eps in L1
    ConvergenceReport conclusion;          // (ψ''(v_eps))^{1/2} grad v_eps in L2
    std::vector<double> theta_bound;       // ∫∫ Φ'(ψ(v_eps)) ψ''(v_eps) |grad v_eps|² per rung
    PhiFunction phi;
};

// Verifies hypotheses (ψ of the data and ψ' of the source) before reporting
// the conclusion ladder; refuses loudly when a hypothesis ladder stagnates.
inline PsiConvergenceResult cauchy_psi_gradients(const SweepResult& sweep,
                                                 const PsiSpec& psi) {
    PsiConvergenceResult res;
    const std::size_t n = sweep.runs.size();
    require(n >= 4, "cauchy_psi_gradients: need at least 4 rungs");

    std::vector<double> d_data;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        ScalarField diff = sweep.data[j].v0;
        for (std::size_t i = 0; i < diff.size(); ++i)
            diff[i] = psi.psi(diff[i]) - psi.psi(sweep.data[j + 1].v0[i]);
        d_data.push_back(l1_norm(diff));
    }
    res.hypothesis_data = make_report("psi(v0_eps) in L1", std::move(d_data));

    std::vector<double> d_src;
    for (std::size_t j = 0; j + 1 < n; ++j) {
        const FieldTrajectory& a = sweep.runs[j];
        const FieldTrajectory& b = sweep.runs[j + 1];
        const bool fa = !sweep.data[j].f.frames.empty();
        const bool fb = !sweep.data[j + 1].f.frames.empty();
        double s = 0.0;
        for (std::size_t m = 0; m + 1 < a.frame_count(); ++m) {
            ScalarField diff(a.grid, 0.0);
            for (std::size_t i = 0; i < diff.size(); ++i) {
                const double pa =
                    fa ? psi.dpsi(a.frames[m][i]) * sweep.data[j].f.frames[m][i] : 0.0;
                const double pb =
                    fb ? psi.dpsi(b.frames[m][i]) * sweep.data[j + 1].f.frames[m][i] : 0.0;
                diff[i] = pa - pb;
            }
            s += a.dt * l1_norm(diff);
        }
        d_src.push_back(s);
    }
    res.hypothesis_source = make_report("psi'(v_eps) f_eps in L1", std::move(d_src));

    if (res.hypothesis_data.verdict != Verdict::CauchyDecreasing)
        throw PsiHypothesisFailure(
            "cauchy_psi_gradients: hypothesis ladder psi(v0_eps) is " +
                to_string(res.hypothesis_data.verdict) +
                "; refusing to report the conclusion",
            res.hypothesis_data);
    if (res.hypothesis_source.verdict != Verdict::CauchyDecreasing)
        throw PsiHypothesisFailure(
            "cauchy_psi_gradients: hypothesis ladder psi'(v_eps) f_eps is " +
                to_string(res.hypothesis_source.verdict) +
                "; refusing to report the conclusion",
            res.hypothesis_source);

    std::vector<double> d;
    for (std::size_t j = 0; j + 1 < n; ++j)
        d.push_back(detail::face_l2_distance(
            sweep.runs[j], sweep.runs[j + 1], [&psi](double l, double r, double h) {
                const double zbar = 0.5 * (std::abs(l) + std::abs(r));
                return std::sqrt(std::max(psi.ddpsi(zbar), 0.0)) * (r - l) / h;
            }));
    res.conclusion =
        make_report("(psi''(v_eps))^{1/2} grad v_eps in L2", std::move(d));

    // Φ from the two hypothesis families, then the θ = Φ' weighted energies.
    std::vector<std::vector<ScalarField>> families(2);
    for (std::size_t j = 0; j < n; ++j) {
        ScalarField pv = sweep.data[j].v0;
        for (double& v : pv.values) v = psi.psi(v);
        families[0].push_back(std::move(pv));
    }
    // Source family: per-rung space-time samples flattened into one frame of
    // |psi'(v)f| per rung (the certificate only needs the integrals).
    for (std::size_t j = 0; j < n; ++j) {
        const FieldTrajectory& a = sweep.runs[j];
        ScalarField acc(a.grid, 0.0);
        if (!sweep.data[j].f.frames.empty()) {
            for (std::size_t m = 0; m + 1 < a.frame_count(); ++m)
                for (std::size_t i = 0; i < acc.size(); ++i)
                    acc[i] += a.dt * std::abs(psi.dpsi(a.frames[m][i]) *
                                              sweep.data[j].f.frames[m][i]);
        }
        families[1].push_back(std::move(acc));
    }
    double budget = 2.0 * sweep.runs.front().grid.domain_volume();
    for (const auto& fam : families)
        for (const auto& z : fam) budget = std::max(budget, 1.2 * phi_c_integral(z, 1.0));
    res.phi = build_dlvp_phi(families, budget);

    for (std::size_t j = 0; j < n; ++j) {
        const FieldTrajectory& a = sweep.runs[j];
        double s = 0.0;
        for (std::size_t m = 1; m < a.frame_count(); ++m) {
            const ScalarField& z = a.frames[m];
            s += a.dt * detail::face_energy(z, [&](double l, double r) {
                const double zbar = 0.5 * (std::abs(l) + std::abs(r));
                return res.phi.deriv(psi.psi(zbar)) * psi.ddpsi(zbar);
            });
        }
        res.theta_bound.push_back(s);
    }
    return res;
}

struct CrossSequenceResult {
    double distance = 0.0;        // L1(Omega x (0,T)) between the finest members
    double expected_bound = 0.0;  // 3 * (final increment of A + final increment of B)
    bool expected_distinct = false;
};

inline CrossSequenceResult cross_sequence_agreement(const SweepResult& a,
                                                    const SweepResult& b) {
    CrossSequenceResult res;
    const FieldTrajectory& fa = a.runs.back();
    const FieldTrajectory& fb = b.runs.back();
    double s = 0.0;
    for (std::size_t n = 0; n + 1 < fa.frame_count(); ++n) {
        ScalarField diff = fa.frames[n];
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= fb.frames[n][i];
        s += fa.dt * l1_norm(diff);
    }
    res.distance = s;
    res.expected_bound = 3.0 * (cauchy_l1(a).differences.back() +
                                cauchy_l1(b).differences.back());
    const double mass_a = integrate(a.data.back().v0);
    const double mass_b = integrate(b.data.back().v0);
    res.expected_distinct = std::abs(mass_a - mass_b) > 1e-9 * std::max(1.0, mass_a);
    return res;
}

}  // namespace gradflux
