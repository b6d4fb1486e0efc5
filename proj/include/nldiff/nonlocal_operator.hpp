#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "nldiff/errors.hpp"
#include "nldiff/grid.hpp"
#include "nldiff/kernels.hpp"

namespace nldiff {

// Runs body(begin, end) over [0, n) split into contiguous chunks. Every index
// is written by exactly one worker, so results do not depend on the thread
// count.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    if (threads <= 1 || n < 2 * static_cast<std::size_t>(threads)) {
        body(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned k = 0; k < threads; ++k) {
        const std::size_t lo = k * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& t : pool) t.join();
}

// Calls fn(y, weight) for every stored offset of J that keeps x + offset
// inside the grid, in table order.
template <typename Fn>
inline void for_each_neighbour(const Grid& g, const SpatialKernelTable& J, std::size_t x, Fn&& fn) {
    const auto [i0, i1] = g.multi_index(x);
    const long n0 = static_cast<long>(g.count(0));
    const long n1 = static_cast<long>(g.count(1));
    const auto& offs = J.offsets();
    const auto& ws = J.weights();
    for (std::size_t k = 0; k < offs.size(); ++k) {
        const long j0 = static_cast<long>(i0) + offs[k][0];
        const long j1 = static_cast<long>(i1) + offs[k][1];
        if (j0 < 0 || j0 >= n0 || j1 < 0 || j1 >= n1) continue;
        fn(static_cast<std::size_t>(j0 * n1 + j1), ws[k]);
    }
}

struct OperatorEval {
    Field result;
    double t = 0.0;
    std::uint64_t flops_estimate = 0;
};

inline void require_kernel_grid(const Grid& grid, const SpatialKernelTable& J, const Field& u, const char* where) {
    require_same_grid(grid, J.grid(), where);
    require_same_grid(grid, u.grid(), where);
}

/// node_volume * sum over in-grid offsets of J(offset) A(t, x, y, u[y] - u[x]).
inline OperatorEval apply_nonlocal(const Grid& grid, const SpatialKernelTable& J, const RangeKernel& A, double t,
                                   const Field& u, unsigned threads = 1) {
    require_kernel_grid(grid, J, u, "apply_nonlocal");
    std::vector<double> out(grid.size());
    const double v = grid.node_volume();
    const auto& uv = u.values();
    parallel_for(grid.size(), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t x = lo; x < hi; ++x) {
            double acc = 0.0;
            const double ux = uv[x];
            for_each_neighbour(grid, J, x, [&](std::size_t y, double w) { acc += w * A(t, x, y, uv[y] - ux); });
            out[x] = v * acc;
        }
    });
    OperatorEval e{Field(grid, std::move(out)), t, static_cast<std::uint64_t>(grid.size()) * J.size()};
    return e;
}

struct PairingValue {
    double lhs = 0.0;
    double rhs = 0.0;
};

/// lhs = integral of phi * apply_nonlocal(u);
/// rhs = -1/2 node_volume^2 sum_x sum_offset J A(u[y]-u[x]) (phi[y]-phi[x]).
inline PairingValue dissipation_pairing(const Grid& grid, const SpatialKernelTable& J, const RangeKernel& A,
                                        double t, const Field& u, const Field& phi) {
    require_kernel_grid(grid, J, u, "dissipation_pairing");
    require_same_grid(grid, phi.grid(), "dissipation_pairing");
    const Field op = apply_nonlocal(grid, J, A, t, u).result;
    PairingValue r;
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t x = 0; x < grid.size(); ++x) {
        lhs += phi[x] * op[x];
        for_each_neighbour(grid, J, x, [&](std::size_t y, double w) { rhs += w * A(t, x, y, u[y] - u[x]) * (phi[y] - phi[x]); });
    }
    r.lhs = grid.node_volume() * lhs;
    r.rhs = -0.5 * grid.node_volume() * grid.node_volume() * rhs;
    return r;
}

enum class EnergyKind { p_energy, bilateral_energy };

struct EnergyValue {
    EnergyKind kind = EnergyKind::p_energy;
    double value = 0.0;
    double parameter = 2.0;  // p or h
};

/// (1/p) node_volume^2 sum_x sum_offset J |u[y] - u[x]|^p
inline EnergyValue energy_p(const Grid& grid, const SpatialKernelTable& J, const Field& u, double p) {
    require_kernel_grid(grid, J, u, "energy_p");
    if (!(p >= 1.0)) throw ConfigError("energy_p requires p >= 1");
    double sum = 0.0;
    for (std::size_t x = 0; x < grid.size(); ++x)
        for_each_neighbour(grid, J, x, [&](std::size_t y, double w) {
            const double d = std::abs(u[y] - u[x]);
            sum += w * (p == 2.0 ? d * d : std::pow(d, p));
        });
    const double v = grid.node_volume();
    return {EnergyKind::p_energy, v * v * sum / p, p};
}

/// node_volume^2 sum_x sum_offset J (1 - exp(-(u[y]-u[x])^2 / h^2))
inline EnergyValue energy_bilateral(const Grid& grid, const SpatialKernelTable& J, const Field& u, double h) {
    require_kernel_grid(grid, J, u, "energy_bilateral");
    if (!(h > 0.0)) throw ConfigError("energy_bilateral requires h > 0");
    double sum = 0.0;
    for (std::size_t x = 0; x < grid.size(); ++x)
        for_each_neighbour(grid, J, x, [&](std::size_t y, double w) {
            const double d = u[y] - u[x];
            sum += w * -std::expm1(-(d * d) / (h * h));
        });
    const double v = grid.node_volume();
    return {EnergyKind::bilateral_energy, v * v * sum, h};
}

// The energy whose gradient flow the range kernel generates, scaled so that
// its L2 gradient is exactly -2 apply_nonlocal: J_p for linear and
// p_laplacian, (h^2/2) J_B for the bilateral kernel. Other families have no
// closed-form energy.
inline std::optional<double> flow_energy(const Grid& grid, const SpatialKernelTable& J, const RangeKernel& A,
                                         const Field& u) {
    switch (A.family()) {
        case RangeFamily::linear: return energy_p(grid, J, u, 2.0).value;
        case RangeFamily::p_laplacian: return energy_p(grid, J, u, A.p()).value;
        case RangeFamily::bilateral_gaussian:
            if (std::isinf(A.h())) return energy_p(grid, J, u, 2.0).value;
            return 0.5 * A.h() * A.h() * energy_bilateral(grid, J, u, A.h()).value;
        default: return std::nullopt;
    }
}

// Degree of homogeneity of flow_energy under u -> c u, when it has one.
inline std::optional<double> flow_energy_degree(const RangeKernel& A) {
    switch (A.family()) {
        case RangeFamily::linear: return 2.0;
        case RangeFamily::p_laplacian: return A.p();
        case RangeFamily::bilateral_gaussian:
            if (std::isinf(A.h())) return 2.0;
            return std::nullopt;
        default: return std::nullopt;
    }
}

/// One pass of the bilateral filter:
/// B(u)(x) = sum_y J exp(-(u[y]-u[x])^2/h^2) u[y] / C(x), with C(x) the
/// sum of the same weights. The offset 0 is part of the table, so C > 0.
inline Field bilateral_filter(const Grid& grid, const SpatialKernelTable& J, const Field& u, double h,
                              unsigned threads = 1) {
    require_kernel_grid(grid, J, u, "bilateral_filter");
    if (!(h > 0.0)) throw ConfigError("bilateral filter requires h > 0");
    std::vector<double> out(grid.size());
    parallel_for(grid.size(), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t x = lo; x < hi; ++x) {
            double num = 0.0, den = 0.0;
            for_each_neighbour(grid, J, x, [&](std::size_t y, double w) {
                const double d = u[y] - u[x];
                const double k = w * std::exp(-(d * d) / (h * h));
                num += k * u[y];
                den += k;
            });
            out[x] = den > 0.0 ? num / den : u[x];
        }
    });
    return Field(grid, std::move(out));
}

}  // namespace nldiff
