#pragma once

// Cell-centered finite-volume meshes on axis-aligned boxes (d = 1 or 2),
// with the mirror-ghost Neumann calculus every other component builds on.
//
// Conventions, fixed once:
//  * cells are ordered row-major with axis 0 fastest,
//  * gradients live on interior faces; boundary faces carry zero flux and
//    no storage,
//  * each interior face owns a dual volume equal to one cell volume, which
//    makes the summation-by-parts (Green) identity exact,
//  * space-time quadrature is midpoint in space and left endpoint in time.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace gradflux {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw Error(what);
}

struct Grid {
    int dim = 1;
    std::array<double, 2> extents{1.0, 1.0};
    std::array<int, 2> cells{0, 1};

    double spacing(int axis) const { return extents[axis] / cells[axis]; }
    std::size_t cell_count() const {
        return static_cast<std::size_t>(cells[0]) * (dim == 2 ? cells[1] : 1);
    }
    double cell_volume() const {
        double v = spacing(0);
        if (dim == 2) v *= spacing(1);
        return v;
    }
    double domain_volume() const {
        double v = extents[0];
        if (dim == 2) v *= extents[1];
        return v;
    }
    // Row-major, axis 0 fastest.
    std::size_t index(int i0, int i1 = 0) const {
        return static_cast<std::size_t>(i1) * cells[0] + i0;
    }
    double center(int axis, int i) const { return (i + 0.5) * spacing(axis); }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.dim == b.dim && a.extents == b.extents && a.cells == b.cells;
    }
};

inline Grid make_grid(int dim, const std::vector<double>& extents,
                      const std::vector<int>& cells) {
    require(dim == 1 || dim == 2, "make_grid: dim must be 1 or 2");
    require(static_cast<int>(extents.size()) == dim &&
                static_cast<int>(cells.size()) == dim,
            "make_grid: extents/cells must have one entry per axis");
    Grid g;
    g.dim = dim;
    for (int a = 0; a < dim; ++a) {
        require(extents[a] > 0.0, "make_grid: extent must be positive on axis " +
                                      std::to_string(a));
        require(cells[a] >= 4, "make_grid: need at least 4 cells per axis, got " +
                                   std::to_string(cells[a]) + " on axis " +
                                   std::to_string(a));
        g.extents[a] = extents[a];
        g.cells[a] = cells[a];
    }
    if (dim == 1) {
        g.extents[1] = 1.0;
        g.cells[1] = 1;
    }
    return g;
}

struct ScalarField {
    Grid grid;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const Grid& g, double fill = 0.0)
        : grid(g), values(g.cell_count(), fill) {}

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }

    bool finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

// The sampler accepts f(x) or f(x, y); in 1D a two-argument profile sees y = 0.
template <class F>
ScalarField sample_field(const Grid& g, F&& f) {
    ScalarField out(g);
    const int n1 = g.dim == 2 ? g.cells[1] : 1;
    for (int i1 = 0; i1 < n1; ++i1)
        for (int i0 = 0; i0 < g.cells[0]; ++i0) {
            const double x = g.center(0, i0);
            if constexpr (std::is_invocable_v<F, double, double>)
                out[g.index(i0, i1)] = f(x, g.dim == 2 ? g.center(1, i1) : 0.0);
            else
                out[g.index(i0, i1)] = f(x);
        }
    return out;
}

inline ScalarField constant_field(const Grid& g, double c) { return ScalarField(g, c); }

// Interior face values per axis; boundary faces are implicit zero-flux and
// carry no entry. Along axis a there are (cells[a]-1) faces in that
// direction per transverse cell line. Face dual volume = cell volume.
struct FaceField {
    Grid grid;
    std::array<std::vector<double>, 2> axis_values;

    explicit FaceField(const Grid& g) : grid(g) {
        axis_values[0].assign(face_count(g, 0), 0.0);
        if (g.dim == 2) axis_values[1].assign(face_count(g, 1), 0.0);
    }

    static std::size_t face_count(const Grid& g, int axis) {
        if (axis >= g.dim) return 0;
        std::size_t n = static_cast<std::size_t>(g.cells[axis] - 1);
        for (int b = 0; b < g.dim; ++b)
            if (b != axis) n *= g.cells[b];
        return n;
    }

    // Face between (i0,i1) and its +axis neighbor; i_axis in [0, cells-2].
    std::size_t index(int axis, int i0, int i1 = 0) const {
        if (axis == 0) return static_cast<std::size_t>(i1) * (grid.cells[0] - 1) + i0;
        return static_cast<std::size_t>(i1) * grid.cells[0] + i0;
    }
    double face_volume() const { return grid.cell_volume(); }
};

// Visits every interior face: f(axis, face_index, left_cell, right_cell,
// axis coordinate of the face plane, transverse center coordinate).
template <class F>
void for_each_face(const Grid& g, F&& f) {
    const int n1 = g.dim == 2 ? g.cells[1] : 1;
    for (int i1 = 0; i1 < n1; ++i1)
        for (int i0 = 0; i0 + 1 < g.cells[0]; ++i0) {
            const std::size_t fi = static_cast<std::size_t>(i1) * (g.cells[0] - 1) + i0;
            f(0, fi, g.index(i0, i1), g.index(i0 + 1, i1), (i0 + 1) * g.spacing(0),
              g.dim == 2 ? g.center(1, i1) : 0.0);
        }
    if (g.dim == 2) {
        for (int i1 = 0; i1 + 1 < g.cells[1]; ++i1)
            for (int i0 = 0; i0 < g.cells[0]; ++i0) {
                const std::size_t fi = static_cast<std::size_t>(i1) * g.cells[0] + i0;
                f(1, fi, g.index(i0, i1), g.index(i0, i1 + 1), (i1 + 1) * g.spacing(1),
                  g.center(0, i0));
            }
    }
}

inline FaceField face_gradient(const ScalarField& z) {
    FaceField grad(z.grid);
    const Grid& g = z.grid;
    for_each_face(g, [&](int axis, std::size_t fi, std::size_t left, std::size_t right,
                         double, double) {
        grad.axis_values[axis][fi] = (z[right] - z[left]) / g.spacing(axis);
    });
    return grad;
}

// Divergence of the zero-flux face gradient. The volume-weighted sum of the
// result telescopes to zero exactly.
inline ScalarField laplacian_neumann(const ScalarField& z) {
    const Grid& g = z.grid;
    ScalarField lap(g, 0.0);
    for_each_face(g, [&](int axis, std::size_t, std::size_t left, std::size_t right,
                         double, double) {
        const double h = g.spacing(axis);
        const double flux = (z[right] - z[left]) / h;
        lap[left] += flux / h;
        lap[right] -= flux / h;
    });
    return lap;
}

inline double integrate(const ScalarField& z) {
    double s = 0.0;
    for (double v : z.values) s += v;
    return s * z.grid.cell_volume();
}

inline double lp_norm(const ScalarField& z, double p) {
    require(p >= 1.0 && std::isfinite(p), "lp_norm: p must lie in [1, inf)");
    double s = 0.0;
    for (double v : z.values) s += std::pow(std::abs(v), p);
    return std::pow(s * z.grid.cell_volume(), 1.0 / p);
}

inline double linf_norm(const ScalarField& z) {
    double m = 0.0;
    for (double v : z.values) m = std::max(m, std::abs(v));
    return m;
}

inline double l1_norm(const ScalarField& z) { return lp_norm(z, 1.0); }

struct FieldTrajectory {
    Grid grid;
    double dt = 0.0;
    std::vector<ScalarField> frames;

    FieldTrajectory() = default;
    FieldTrajectory(const Grid& g, double step) : grid(g), dt(step) {}

    std::size_t frame_count() const { return frames.size(); }
    // Number of time steps spanned, i.e. frames-1.
    std::size_t steps() const { return frames.empty() ? 0 : frames.size() - 1; }
    double time_of(std::size_t n) const { return n * dt; }
    double horizon() const { return steps() * dt; }

    void push(ScalarField f) {
        require(f.grid == grid, "FieldTrajectory: frame grid mismatch");
        frames.push_back(std::move(f));
    }
};

// Left-endpoint-in-time quadrature of a per-frame functional: the final
// frame does not contribute.
template <class FrameFunctional>
double spacetime_integral(const FieldTrajectory& traj, FrameFunctional&& per_frame) {
    require(!traj.frames.empty(), "spacetime_integral: empty trajectory");
    double s = 0.0;
    for (std::size_t n = 0; n + 1 < traj.frames.size(); ++n)
        s += per_frame(traj.frames[n]);
    return s * traj.dt;
}

inline double spacetime_integral(const FieldTrajectory& traj) {
    return spacetime_integral(traj, [](const ScalarField& f) { return integrate(f); });
}

inline double spacetime_l1(const FieldTrajectory& traj) {
    return spacetime_integral(traj, [](const ScalarField& f) { return l1_norm(f); });
}

// FNV-1a over raw double bytes; reports embed this as their inputs digest.
inline std::uint64_t fnv1a64(const double* data, std::size_t n,
                             std::uint64_t seed = 14695981039346656037ull) {
    std::uint64_t h = seed;
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n * sizeof(double); ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t digest(const ScalarField& f, std::uint64_t seed = 14695981039346656037ull) {
    return fnv1a64(f.values.data(), f.values.size(), seed);
}

inline std::uint64_t digest(const FieldTrajectory& t) {
    std::uint64_t h = fnv1a64(&t.dt, 1);
    for (const auto& f : t.frames) h = digest(f, h);
    return h;
}

}  // namespace gradflux
