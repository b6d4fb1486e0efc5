#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nldiff/errors.hpp"
#include "nldiff/grid.hpp"
#include "nldiff/kernels.hpp"
#include "nldiff/nonlocal_operator.hpp"

namespace nldiff {

enum class Scheme { semi_implicit_w, explicit_euler };
enum class MuMode { auto_growth, auto_linf, manual };

inline const char* to_string(Scheme s) { return s == Scheme::semi_implicit_w ? "semi_implicit_w" : "explicit_euler"; }
inline const char* to_string(MuMode m) {
    switch (m) {
        case MuMode::auto_growth: return "auto_growth";
        case MuMode::auto_linf: return "auto_linf";
        case MuMode::manual: return "manual";
    }
    return "?";
}

struct SolverConfig {
    double T = 1.0;
    std::size_t steps = 1000;
    Scheme scheme = Scheme::semi_implicit_w;
    MuMode mu_mode = MuMode::auto_growth;
    double mu = 0.0;  // manual mode only
    double mu_margin = 0.01;
    std::size_t record_every = 1;
    // K = linf_k_factor * ||u0||_inf in the L-infinity rule.
    double linf_k_factor = 1.01;
    bool allow_invalid_assumptions = false;
    std::uint64_t seed = 42;
    unsigned threads = 1;

    double tau() const { return T / static_cast<double>(steps); }
    bool operator==(const SolverConfig&) const = default;
};

struct Problem {
    Grid grid;
    SpatialKernelTable J;
    RangeKernel A;
    Reaction f;
};

class NumericalBlowup : public std::runtime_error {
public:
    NumericalBlowup(std::size_t step, double t, Field last_finite)
        : std::runtime_error("non-finite value produced at step " + std::to_string(step)),
          step_(step),
          t_(t),
          last_(std::move(last_finite)) {}

    std::size_t step() const { return step_; }
    // Time of the last finite state.
    double time() const { return t_; }
    const Field& last_finite_state() const { return last_; }

private:
    std::size_t step_;
    double t_;
    Field last_;
};

class UndefinedRatio : public std::domain_error {
public:
    explicit UndefinedRatio(const std::string& what) : std::domain_error(what) {}
};

/// auto_growth: 2 C_A + C_f + margin. auto_linf: C_f (1 + K) / K.
/// manual: the given value.
inline double select_mu(MuMode mode, double C_A, double C_f, double K, double margin, double manual_mu = 0.0) {
    switch (mode) {
        case MuMode::auto_growth: return 2.0 * C_A + C_f + margin;
        case MuMode::auto_linf:
            if (!(K > 0.0)) throw ConfigError("auto_linf needs K > 0");
            return C_f * (1.0 + K) / K;
        case MuMode::manual:
            if (!(manual_mu >= 0.0)) throw ConfigError("manual mu must be >= 0");
            return manual_mu;
    }
    return 0.0;
}

struct ResolvedConstants {
    double mu = 0.0;
    double mu_linf = 0.0;
    double C_A = 0.0;
    double L_A = 0.0;
    double C_f = 0.0;
    double L_f = 0.0;
    double K = 1.0;
    double M0 = 0.0;
    double working_range = 0.0;  // A is sampled on [-working_range, working_range]
    double kernel_mass = 1.0;
    double tau = 0.0;
    double tau_max = kInfinity;  // positivity / descent restriction
    double linf_certificate = 0.0;
    double gamma = 1.0;  // per-step growth of u caused by the w substitution
};

inline ResolvedConstants resolve_constants(const Problem& pb, const Field& u0, const SolverConfig& cfg) {
    if (!(cfg.T > 0.0) || !std::isfinite(cfg.T)) throw ConfigError("solver horizon T must be positive");
    if (cfg.steps < 1) throw ConfigError("solver.steps must be >= 1");
    if (cfg.record_every < 1) throw ConfigError("solver.record_every must be >= 1");
    if (!(cfg.mu_margin > 0.0)) throw ConfigError("solver.mu_margin must be positive");

    ResolvedConstants c;
    const double u_inf = lp_norm(u0.grid(), u0, kInfinity);
    c.C_f = pb.f.growth_constant();
    c.L_f = pb.f.lipschitz_constant();
    c.K = u_inf > 0.0 ? cfg.linf_k_factor * u_inf : 1.0;
    c.mu_linf = select_mu(MuMode::auto_linf, 0.0, c.C_f, c.K, cfg.mu_margin);
    c.working_range = 2.0 * std::exp(c.mu_linf * cfg.T) * c.K;

    const auto pairs = probe_pairs(pb.A, pb.J);
    c.C_A = sample_growth_constant(pb.A, c.working_range, pairs);
    c.L_A = sample_lipschitz_constant(pb.A, c.working_range, pairs);

    if (cfg.scheme == Scheme::semi_implicit_w && cfg.mu_mode == MuMode::auto_growth && !pb.A.lipschitz())
        throw ConfigError("mu_mode auto_growth needs a range kernel that is Lipschitz at 0; " + pb.A.describe() +
                          " is not. Use a mollified kernel, solver.mu_mode = manual or solver.scheme = explicit_euler");
    c.mu = cfg.scheme == Scheme::explicit_euler ? 0.0
                                                 : select_mu(cfg.mu_mode, c.C_A, c.C_f, c.K, cfg.mu_margin, cfg.mu);

    const double denom = c.mu - 2.0 * c.C_A - c.C_f;
    c.M0 = denom > 0.0 ? std::max(u_inf, c.C_f / denom) : kInfinity;
    c.kernel_mass = pb.J.mass();
    c.tau = cfg.tau();
    const double rate = c.kernel_mass * c.L_A + c.L_f;
    c.tau_max = rate > 0.0 ? 1.0 / rate : kInfinity;
    // The scheme grows u by gamma per step on top of the flow, so the bound
    // uses the larger of the two rates.
    c.linf_certificate = std::exp(std::max(c.mu, c.mu_linf) * cfg.T) * u_inf;
    c.gamma = std::exp(c.mu * c.tau) / (1.0 + c.tau * c.mu);
    return c;
}

namespace detail {

// w + tau e^{-mu t} (op + f) over (1 + tau mu), written so that mu = 0 reduces
// to the explicit Euler expression operation for operation.
inline Field advance(const Problem& pb, double t, double tau, double mu, const Field& w, unsigned threads,
                     std::size_t step_index, Field* op_out = nullptr) {
    const double grow = mu == 0.0 ? 1.0 : std::exp(mu * t);
    const double shrink = mu == 0.0 ? 1.0 : std::exp(-mu * t);
    const double denom = 1.0 + tau * mu;
    Field u = w;
    if (grow != 1.0)
        for (auto& v : u.values()) v *= grow;
    OperatorEval op = apply_nonlocal(pb.grid, pb.J, pb.A, t, u, threads);
    std::vector<double> next(w.size());
    for (std::size_t x = 0; x < next.size(); ++x) {
        const double rhs = op.result[x] + pb.f(t, x, u[x]);
        next[x] = (w[x] + tau * (shrink * rhs)) / denom;
        if (!std::isfinite(next[x])) throw NumericalBlowup(step_index, t, w);
    }
    if (op_out) *op_out = std::move(op.result);
    return Field(w.grid(), std::move(next));
}

}  // namespace detail

/// One step of the w-scheme; step_index only labels a blowup.
inline Field step_semi_implicit(const Grid& grid, const SpatialKernelTable& J, const RangeKernel& A,
                                const Reaction& f, double t_j, double tau, double mu, const Field& w_j,
                                unsigned threads = 1, std::size_t step_index = 0) {
    if (!(tau > 0.0)) throw ConfigError("time step must be positive");
    if (!(mu >= 0.0)) throw ConfigError("mu must be >= 0");
    require_kernel_grid(grid, J, w_j, "step_semi_implicit");
    return detail::advance(Problem{grid, J, A, f}, t_j, tau, mu, w_j, threads, step_index);
}

inline Field step_explicit(const Grid& grid, const SpatialKernelTable& J, const RangeKernel& A, const Reaction& f,
                           double t_j, double tau, const Field& u_j, unsigned threads = 1,
                           std::size_t step_index = 0) {
    if (!(tau > 0.0)) throw ConfigError("time step must be positive");
    require_kernel_grid(grid, J, u_j, "step_explicit");
    return detail::advance(Problem{grid, J, A, f}, t_j, tau, 0.0, u_j, threads, step_index);
}

struct StepDiagnostics {
    std::size_t step = 0;
    double t = 0.0;
    double min = 0.0;
    double max = 0.0;
    double mass = 0.0;
    double energy = std::numeric_limits<double>::quiet_NaN();  // NaN when A has no flow energy
    double operator_sup = 0.0;
    double linf_bound_cert = 0.0;
    bool positivity_ok = true;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<std::size_t> recorded_steps;
    std::vector<Field> states;
    std::vector<StepDiagnostics> per_step;  // one entry per step 0..N
    ResolvedConstants constants;
    SolverConfig config;
    std::vector<std::string> warnings;
};

inline constexpr double kPositivityTolerance = 1e-10;

inline StepDiagnostics diagnose(const Problem& pb, std::size_t step, double t, const Field& u, const Field& op,
                                double cert) {
    StepDiagnostics d;
    d.step = step;
    d.t = t;
    d.min = u.min();
    d.max = u.max();
    d.mass = integrate(pb.grid, u);
    if (auto e = flow_energy(pb.grid, pb.J, pb.A, u)) d.energy = *e;
    d.operator_sup = lp_norm(pb.grid, op, kInfinity);
    d.linf_bound_cert = cert;
    d.positivity_ok = d.min >= -kPositivityTolerance;
    return d;
}

/// Runs cfg.steps steps from u0. The w-scheme starts from w0 = u0 and
/// records u_j = e^{mu t_j} w_j.
inline Trajectory solve(const Problem& pb, const Field& u0, const SolverConfig& cfg) {
    require_kernel_grid(pb.grid, pb.J, u0, "solve");
    const ValidationReport check = validate_assumptions(pb.J, pb.A, pb.f, u0, cfg.seed);
    if (!check.all_passed() && !cfg.allow_invalid_assumptions)
        throw RefusalError("structural assumptions fail (" + check.failures() +
                           "); set solver.allow_invalid_assumptions = true to run anyway");

    Trajectory tr;
    tr.config = cfg;
    tr.constants = resolve_constants(pb, u0, cfg);
    const ResolvedConstants& c = tr.constants;
    if (!check.all_passed()) tr.warnings.push_back("running with failed assumptions: " + check.failures());
    if (std::pow(c.gamma, static_cast<double>(cfg.steps)) > 1.01)
        tr.warnings.push_back("the w substitution inflates u by gamma^N = " +
                              format_double(std::pow(c.gamma, static_cast<double>(cfg.steps))) +
                              " over the run; use more steps or a smaller mu");
    if (c.tau > c.tau_max)
        tr.warnings.push_back("time step " + format_double(c.tau) + " exceeds the positivity restriction " +
                              format_double(c.tau_max));

    const std::size_t N = cfg.steps;
    const double tau = c.tau;
    const double mu = c.mu;
    auto time_of = [&](std::size_t j) { return j == N ? cfg.T : static_cast<double>(j) * tau; };
    auto record = [&](std::size_t j, const Field& u) {
        tr.times.push_back(time_of(j));
        tr.recorded_steps.push_back(j);
        tr.states.push_back(u);
    };

    Field w = u0;
    Field u = u0;
    record(0, u0);
    Field op(pb.grid, 0.0);
    tr.per_step.reserve(N + 1);
    for (std::size_t j = 0; j < N; ++j) {
        const double t = time_of(j);
        Field next;
        try {
            next = detail::advance(pb, t, tau, mu, w, cfg.threads, j + 1, &op);
        } catch (const NumericalBlowup& e) {
            throw NumericalBlowup(e.step(), t, u);
        }
        tr.per_step.push_back(diagnose(pb, j, t, u, op, c.linf_certificate));
        w = std::move(next);
        if (mu == 0.0) {
            u = w;
        } else {
            const double grow = std::exp(mu * time_of(j + 1));
            for (std::size_t x = 0; x < u.size(); ++x) {
                u[x] = grow * w[x];
                if (!std::isfinite(u[x])) throw NumericalBlowup(j + 1, t, tr.states.back());
            }
        }
        if ((j + 1) % cfg.record_every == 0 || j + 1 == N) record(j + 1, u);
    }
    op = apply_nonlocal(pb.grid, pb.J, pb.A, cfg.T, u, cfg.threads).result;
    tr.per_step.push_back(diagnose(pb, N, cfg.T, u, op, c.linf_certificate));
    return tr;
}

inline void write_diagnostics_csv(std::ostream& os, const Trajectory& tr) {
    os << "step,t,min,max,mass,energy,linf_bound_cert,positivity_ok\n";
    for (const auto& d : tr.per_step)
        os << d.step << ',' << format_double(d.t) << ',' << format_double(d.min) << ',' << format_double(d.max)
           << ',' << format_double(d.mass) << ',' << format_double(d.energy) << ','
           << format_double(d.linf_bound_cert) << ',' << (d.positivity_ok ? 1 : 0) << '\n';
}

struct StabilitySeries {
    std::vector<double> times;
    std::vector<double> ratios;
    double max_ratio = 0.0;
    // Least-squares slope of log(ratio) against t through the origin.
    double fitted_rate = 0.0;
};

/// ||u1(t) - u2(t)||_p / ||u01 - u02||_p at every recorded time.
inline StabilitySeries stability_constant_estimate(const Trajectory& a, const Trajectory& b, double p) {
    if (a.times != b.times) throw ContractViolation("stability estimate: trajectories record different times");
    if (a.states.empty()) throw ContractViolation("stability estimate: empty trajectory");
    const Grid& g = a.states.front().grid();
    const double d0 = lp_norm(g, a.states.front() - b.states.front(), p);
    if (!(d0 > 0.0)) throw UndefinedRatio("stability estimate: initial data coincide, the ratio is undefined");
    StabilitySeries s;
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < a.states.size(); ++k) {
        const double r = lp_norm(g, a.states[k] - b.states[k], p) / d0;
        s.times.push_back(a.times[k]);
        s.ratios.push_back(r);
        s.max_ratio = std::max(s.max_ratio, r);
        if (r > 0.0) {
            num += a.times[k] * std::log(r);
            den += a.times[k] * a.times[k];
        }
    }
    s.fitted_rate = den > 0.0 ? num / den : 0.0;
    return s;
}

}  // namespace nldiff
