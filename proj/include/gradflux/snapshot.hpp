#pragma once

// Flat little-endian field snapshots: magic "GFLX", version u32, dim u32,
// cells u32 per axis, extents f64 per axis, then f64 cell values row-major.
// Write-then-read reproduces fields bit for bit.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "gradflux/grid.hpp"

namespace gradflux {

namespace detail {

static_assert(sizeof(double) == 8, "snapshot format assumes 8-byte doubles");

inline bool host_little_endian() {
    const std::uint32_t probe = 1;
    unsigned char b;
    std::memcpy(&b, &probe, 1);
    return b == 1;
}

template <class T>
void put(std::ofstream& out, T value) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    if (!host_little_endian())
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
            std::swap(buf[i], buf[sizeof(T) - 1 - i]);
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
    unsigned char buf[sizeof(T)];
    in.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!host_little_endian())
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
            std::swap(buf[i], buf[sizeof(T) - 1 - i]);
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
}

}  // namespace detail

inline void write_snapshot(const std::string& path, const ScalarField& field) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "write_snapshot: cannot open " + path);
    out.write("GFLX", 4);
    detail::put<std::uint32_t>(out, 1u);  // version
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(field.grid.dim));
    for (int a = 0; a < field.grid.dim; ++a)
        detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(field.grid.cells[a]));
    for (int a = 0; a < field.grid.dim; ++a)
        detail::put<double>(out, field.grid.extents[a]);
    for (double v : field.values) detail::put<double>(out, v);
    require(out.good(), "write_snapshot: write failed for " + path);
}

inline ScalarField read_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "read_snapshot: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    require(in.good() && std::memcmp(magic, "GFLX", 4) == 0,
            "read_snapshot: bad magic in " + path);
    const auto version = detail::get<std::uint32_t>(in);
    require(version == 1u, "read_snapshot: unsupported version in " + path);
    const auto dim = detail::get<std::uint32_t>(in);
    require(dim == 1u || dim == 2u, "read_snapshot: bad dimension in " + path);
    std::vector<int> cells(dim);
    for (auto& c : cells) c = static_cast<int>(detail::get<std::uint32_t>(in));
    std::vector<double> extents(dim);
    for (auto& e : extents) e = detail::get<double>(in);
    Grid g = make_grid(static_cast<int>(dim), extents, cells);
    ScalarField field(g);
    for (double& v : field.values) v = detail::get<double>(in);
    require(in.good(), "read_snapshot: truncated file " + path);
    return field;
}

}  // namespace gradflux
