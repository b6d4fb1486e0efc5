#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "nldiff/errors.hpp"
#include "nldiff/grid.hpp"
#include "nldiff/kernels.hpp"
#include "nldiff/nonlocal_operator.hpp"
#include "nldiff/stepper.hpp"

namespace nldiff {

enum class CheckStatus { pass, fail, skipped };

inline const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::pass: return "pass";
        case CheckStatus::fail: return "fail";
        case CheckStatus::skipped: return "skipped";
    }
    return "?";
}

struct Check {
    std::string id;           // short machine name
    std::string description;  // the property the check witnesses
    CheckStatus status = CheckStatus::pass;
    double measured = 0.0;
    double threshold = 0.0;
    std::string note;
};

/// Outcome of a verification run or study. Failed checks are recorded, never
/// thrown, so every check always runs.
struct RunReport {
    std::vector<Check> checks;
    std::map<std::string, double> constants;
    std::map<std::string, std::vector<double>> series;

    Check& add(std::string id, std::string description, bool ok, double measured, double threshold,
               std::string note = {}) {
        checks.push_back({std::move(id), std::move(description), ok ? CheckStatus::pass : CheckStatus::fail, measured,
                          threshold, std::move(note)});
        return checks.back();
    }
    Check& skip(std::string id, std::string description, double measured, std::string note) {
        checks.push_back({std::move(id), std::move(description), CheckStatus::skipped, measured,
                          std::numeric_limits<double>::quiet_NaN(), std::move(note)});
        return checks.back();
    }

    bool all_passed() const {
        return std::none_of(checks.begin(), checks.end(), [](const Check& c) { return c.status == CheckStatus::fail; });
    }
    const Check* find(const std::string& id) const {
        for (const auto& c : checks)
            if (c.id == id) return &c;
        return nullptr;
    }

    void merge(const RunReport& other, const std::string& prefix = {}) {
        for (auto c : other.checks) {
            c.id = prefix + c.id;
            checks.push_back(std::move(c));
        }
        for (const auto& [k, v] : other.constants) constants[prefix + k] = v;
        for (const auto& [k, v] : other.series) series[prefix + k] = v;
    }
};

inline void write_report_text(std::ostream& os, const RunReport& r) {
    os << "checks\n";
    for (const auto& c : r.checks) {
        os << "  [" << to_string(c.status) << "] " << c.id << ": " << c.description << "\n"
           << "      measured " << format_double(c.measured) << ", threshold " << format_double(c.threshold) << "\n";
        if (!c.note.empty()) os << "      " << c.note << "\n";
    }
    os << "constants\n";
    for (const auto& [k, v] : r.constants) os << "  " << k << " = " << format_double(v) << "\n";
    if (!r.series.empty()) {
        os << "series\n";
        for (const auto& [k, v] : r.series) os << "  " << k << ": " << v.size() << " values\n";
    }
    os << (r.all_passed() ? "result: pass\n" : "result: FAIL\n");
}

inline void write_report_csv(std::ostream& os, const RunReport& r) {
    os << "check,name,pass,measured,threshold\n";
    for (const auto& c : r.checks) {
        std::string name = c.description;
        std::replace(name.begin(), name.end(), ',', ';');
        os << c.id << ',' << name << ',' << to_string(c.status) << ',' << format_double(c.measured) << ','
           << format_double(c.threshold) << '\n';
    }
}

inline void record_constants(RunReport& r, const ResolvedConstants& c) {
    r.constants["mu"] = c.mu;
    r.constants["mu_linf"] = c.mu_linf;
    r.constants["C_A"] = c.C_A;
    r.constants["L_A"] = c.L_A;
    r.constants["C_f"] = c.C_f;
    r.constants["L_f"] = c.L_f;
    r.constants["K"] = c.K;
    r.constants["M0"] = c.M0;
    r.constants["tau"] = c.tau;
    r.constants["tau_max"] = c.tau_max;
    r.constants["linf_certificate"] = c.linf_certificate;
    r.constants["gamma"] = c.gamma;
}

// ---------------------------------------------------------------------------
// Invariant battery
// ---------------------------------------------------------------------------

inline constexpr double kMassTolerance = 1e-10;
inline constexpr double kEnergyTolerance = 1e-10;
inline constexpr double kCertificateSlack = 1e-8;

/// Non-negativity, mass balance, the L-infinity certificate and energy
/// descent along a finished trajectory.
///
/// The w-scheme with mu > 0 multiplies every step by gamma = e^{mu tau}/(1 +
/// tau mu), so mass is compared against gamma^j mass_0 and a p-homogeneous
/// energy against gamma^p times the previous value.
inline RunReport verify_invariants(const Problem& pb, const Trajectory& tr) {
    RunReport r;
    const ResolvedConstants& c = tr.constants;
    record_constants(r, c);
    r.constants["steps"] = static_cast<double>(tr.per_step.size() - 1);

    const Field& u0 = tr.states.front();
    bool data_conformant = u0.min() >= 0.0 && pb.f(0.0, 0, 0.0) >= 0.0;
    double min_all = kInfinity, max_norm = 0.0;
    for (const auto& d : tr.per_step) {
        min_all = std::min(min_all, d.min);
        max_norm = std::max({max_norm, std::abs(d.min), std::abs(d.max)});
    }
    std::vector<double> mins, masses, energies;
    for (const auto& d : tr.per_step) {
        mins.push_back(d.min);
        masses.push_back(d.mass);
        energies.push_back(d.energy);
    }
    r.series["min"] = mins;
    r.series["mass"] = masses;
    r.series["energy"] = energies;

    std::string pos_note = c.tau > c.tau_max ? "time step exceeds the positivity restriction tau_max" : "";
    if (!data_conformant) pos_note = "initial data or f(.,.,0) negative; the property does not apply";
    auto& nn = r.add("nonnegativity", "solution stays non-negative", min_all >= -kPositivityTolerance, min_all,
                     -kPositivityTolerance, pos_note);
    if (!data_conformant) nn.status = CheckStatus::skipped;

    r.add("linf_certificate", "sup norm stays below e^{mu T} ||u0||_inf",
          max_norm <= c.linf_certificate * (1.0 + kCertificateSlack), max_norm,
          c.linf_certificate * (1.0 + kCertificateSlack));

    if (pb.f.is_zero()) {
        const double m0 = tr.per_step.front().mass;
        double worst = 0.0, g = 1.0;
        for (const auto& d : tr.per_step) {
            const double allowed = kMassTolerance * std::abs(m0) + 1e-14;
            worst = std::max(worst, std::abs(d.mass - g * m0) / allowed);
            g *= c.gamma;
        }
        r.add("mass", "mass is conserved without reaction", worst <= 1.0, worst, 1.0,
              "measured is the largest |mass_j - gamma^j mass_0| in units of the tolerance");
    } else {
        r.skip("mass", "mass is conserved without reaction", 0.0, "reaction term present");
    }

    const bool has_energy = std::isfinite(tr.per_step.front().energy);
    const auto degree = flow_energy_degree(pb.A);
    if (!has_energy) {
        r.skip("energy_descent", "flow energy does not increase", 0.0, "kernel has no closed-form energy");
    } else if (!pb.f.is_zero()) {
        r.skip("energy_descent", "flow energy does not increase", 0.0, "reaction term present");
    } else if (c.mu != 0.0 && !degree) {
        r.skip("energy_descent", "flow energy does not increase", 0.0,
               "w-scheme with mu > 0 rescales u and the energy is not homogeneous");
    } else {
        const double scale = c.mu == 0.0 ? 1.0 : std::pow(c.gamma, *degree);
        const double e0 = std::max(tr.per_step.front().energy, std::numeric_limits<double>::min());
        double worst = -kInfinity;
        for (std::size_t j = 1; j < tr.per_step.size(); ++j) {
            const double rise = (tr.per_step[j].energy / scale - tr.per_step[j - 1].energy) / e0;
            worst = std::max(worst, rise);
        }
        auto& ch = r.add("energy_descent", "flow energy does not increase", worst <= kEnergyTolerance, worst,
                         kEnergyTolerance, "measured is the largest per-step rise relative to the initial energy");
        if (c.tau > c.tau_max) ch.note += "; time step exceeds tau_max";
        r.constants["energy_initial"] = tr.per_step.front().energy;
        r.constants["energy_final"] = tr.per_step.back().energy;
    }

    bool finite = true;
    for (const auto& s : tr.states) finite = finite && s.all_finite();
    r.add("finite", "all recorded states are finite", finite, finite ? 1.0 : 0.0, 1.0);
    return r;
}

// ---------------------------------------------------------------------------
// Stability and contraction
// ---------------------------------------------------------------------------

/// Runs the problem from u01 and u02 and compares the L^p distance ratio with
/// the envelope: 1 for non-increasing f, e^{L_f t} otherwise.
inline RunReport contraction_study(const Problem& pb, const Field& u01, const Field& u02, const SolverConfig& cfg,
                                   double p) {
    const Trajectory a = solve(pb, u01, cfg);
    const Trajectory b = solve(pb, u02, cfg);
    const StabilitySeries s = stability_constant_estimate(a, b, p);
    RunReport r;
    record_constants(r, a.constants);
    r.series["t"] = s.times;
    r.series["ratio"] = s.ratios;
    r.constants["p"] = p;
    r.constants["max_ratio"] = s.max_ratio;
    r.constants["fitted_rate"] = s.fitted_rate;

    const bool contractive = pb.f.non_increasing();
    const double L = contractive ? 0.0 : pb.f.lipschitz_constant();
    const double tol = contractive ? 1e-8 : 1e-6;
    double worst = 0.0;
    std::vector<double> env;
    for (std::size_t k = 0; k < s.ratios.size(); ++k) {
        const double e = std::exp(L * s.times[k]);
        env.push_back(e);
        worst = std::max(worst, s.ratios[k] / e);
    }
    r.series["envelope"] = env;
    const std::string id = contractive ? "contraction" : "stability_envelope";
    const std::string what = contractive ? "distance between solutions never grows"
                                         : "distance ratio stays below e^{L_f t}";
    if (pb.A.monotone()) {
        r.add(id, what, worst <= 1.0 + tol, worst, 1.0 + tol, "measured is max ratio / envelope");
        if (!contractive)
            r.add("fitted_rate", "fitted exponential rate of the ratio is at most L_f", s.fitted_rate <= L + 0.02,
                  s.fitted_rate, L + 0.02);
    } else {
        r.skip(id, what, worst, "range kernel is not monotone; measured value is the observed stability constant");
    }
    return r;
}

// ---------------------------------------------------------------------------
// Mollified-kernel Cauchy study
// ---------------------------------------------------------------------------

// tau * node_volume * sum over steps 1..N and nodes of |a - b|.
inline double l1_space_time_distance(const Trajectory& a, const Trajectory& b) {
    if (a.states.size() != b.states.size() || a.times != b.times)
        throw ContractViolation("space-time distance: trajectories record different times");
    if (a.config.record_every != 1) throw ContractViolation("space-time distance needs every step recorded");
    const Grid& g = a.states.front().grid();
    double sum = 0.0;
    for (std::size_t j = 1; j < a.states.size(); ++j)
        for (std::size_t x = 0; x < g.size(); ++x) sum += std::abs(a.states[j][x] - b.states[j][x]);
    return a.constants.tau * g.node_volume() * sum;
}

struct LogLogFit {
    double slope = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
};

// Least squares of log y against log x; pairs with non-positive y are ignored.
inline LogLogFit fit_log_log(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!(y[k] > 0.0)) continue;
        const double lx = std::log(x[k]), ly = std::log(y[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    LogLogFit f;
    if (n < 2) return f;
    const double den = n * sxx - sx * sx;
    if (den == 0.0) return f;
    f.slope = (n * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

struct CauchyStudyResult {
    std::vector<int> levels;
    std::vector<std::vector<double>> pairwise_l1;
    std::vector<double> successive;  // d(levels[k], levels[k+1])
    double fitted_exponent = std::numeric_limits<double>::quiet_NaN();
    double fitted_constant = 0.0;  // max over k of d(n_k, n_{k+1}) n_k^alpha
    Field limit_estimate;
    RunReport report;
};

/// Solves with A_n for every level n and compares the solutions in L^1(Q_T).
/// pb.A is replaced by the mollified base at each level.
inline CauchyStudyResult mollifier_cauchy_study(const Problem& pb, const RangeKernel& base, std::vector<int> levels,
                                                const Field& u0, SolverConfig cfg, std::size_t quad_count = 256) {
    if (levels.size() < 3) throw RefusalError("Cauchy study needs at least three mollifier levels");
    for (std::size_t k = 1; k < levels.size(); ++k)
        if (levels[k] <= levels[k - 1]) throw RefusalError("Cauchy study levels must increase strictly");
    if (!base.monotone())
        throw RefusalError("Cauchy study needs a monotone base kernel; " + base.describe() + " is not monotone");

    cfg.record_every = 1;
    const unsigned fan = std::max(1u, cfg.threads);
    cfg.threads = 1;
    std::vector<Trajectory> runs(levels.size());
    parallel_for(levels.size(), fan, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t k = lo; k < hi; ++k) {
            Problem level = pb;
            level.A = mollify_range_kernel(base, levels[k], quad_count);
            runs[k] = solve(level, u0, cfg);
        }
    });

    CauchyStudyResult res;
    res.levels = levels;
    const std::size_t L = levels.size();
    res.pairwise_l1.assign(L, std::vector<double>(L, 0.0));
    for (std::size_t i = 0; i < L; ++i)
        for (std::size_t j = i + 1; j < L; ++j)
            res.pairwise_l1[i][j] = res.pairwise_l1[j][i] = l1_space_time_distance(runs[i], runs[j]);
    for (std::size_t k = 0; k + 1 < L; ++k) res.successive.push_back(res.pairwise_l1[k][k + 1]);
    res.limit_estimate = runs.back().states.back();

    const double alpha = base.holder_alpha();
    std::vector<double> xs, ys;
    for (std::size_t k = 1; k + 1 < L; ++k) {
        xs.push_back(levels[k]);
        ys.push_back(res.successive[k]);
    }
    res.fitted_exponent = -fit_log_log(xs, ys).slope;
    for (std::size_t k = 0; k + 1 < L; ++k)
        res.fitted_constant = std::max(res.fitted_constant, res.successive[k] * std::pow(levels[k], alpha));

    RunReport& r = res.report;
    record_constants(r, runs.back().constants);
    r.constants["alpha"] = alpha;
    r.constants["fitted_exponent"] = res.fitted_exponent;
    r.constants["fitted_constant"] = res.fitted_constant;
    r.series["successive_l1"] = res.successive;

    double scale = 0.0;
    for (const auto& row : res.pairwise_l1)
        for (double d : row) scale = std::max(scale, d);

    bool successive_down = true;
    for (std::size_t k = 1; k < res.successive.size(); ++k)
        successive_down = successive_down && res.successive[k] < res.successive[k - 1];
    r.add("successive_decrease", "d(n_k, n_k+1) decreases strictly with k", successive_down,
          res.successive.size() > 1 ? res.successive.back() / res.successive.front() : 0.0, 1.0,
          "measured is last / first successive distance");

    // For a fixed finer level n, the distance from coarser levels m shrinks as m approaches n.
    double worst_growth = 0.0;
    for (std::size_t j = 0; j < L; ++j)
        for (std::size_t i = 1; i < j; ++i)
            worst_growth = std::max(worst_growth, res.pairwise_l1[i][j] - res.pairwise_l1[i - 1][j]);
    r.add("row_decrease", "d(m, n) decreases as m grows toward a fixed n", worst_growth <= 0.0, worst_growth, 0.0,
          "measured is the largest increase");

    double triangle = 0.0;
    for (std::size_t i = 0; i < L; ++i)
        for (std::size_t j = 0; j < L; ++j)
            for (std::size_t k = 0; k < L; ++k)
                triangle = std::max(triangle, res.pairwise_l1[i][j] - res.pairwise_l1[i][k] - res.pairwise_l1[k][j]);
    r.add("triangle", "distances satisfy the triangle inequality", triangle <= 1e-12 * std::max(scale, 1.0),
          triangle, 1e-12 * std::max(scale, 1.0));

    const bool in_window = std::abs(res.fitted_exponent - alpha) <= 0.15;
    if (scale <= 1e-10) {
        r.skip("decay_exponent", "fitted decay exponent of d(n, 2n) is close to alpha", res.fitted_exponent,
               "all distances vanish; mollification is exact for this base");
        r.add("vanishing", "distances vanish", true, scale, 1e-10);
    } else {
        r.add("decay_exponent", "fitted decay exponent of d(n, 2n) is close to alpha", in_window,
              res.fitted_exponent, alpha, "window alpha +- 0.15");
    }
    return res;
}

// ---------------------------------------------------------------------------
// Linear oracle and time refinement
// ---------------------------------------------------------------------------

using DenseMatrix = std::vector<std::vector<double>>;

// W - D for the linear kernel: W[x][y] = node_volume J(y - x), D the row sums.
inline DenseMatrix linear_operator_matrix(const Grid& grid, const SpatialKernelTable& J) {
    const std::size_t n = grid.size();
    DenseMatrix M(n, std::vector<double>(n, 0.0));
    for (std::size_t x = 0; x < n; ++x) {
        double row = 0.0;
        for_each_neighbour(grid, J, x, [&](std::size_t y, double w) {
            M[x][y] += grid.node_volume() * w;
            row += grid.node_volume() * w;
        });
        M[x][x] -= row;
    }
    return M;
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    const std::size_t n = a.size();
    DenseMatrix c(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            const double aik = a[i][k];
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) c[i][j] += aik * b[k][j];
        }
    return c;
}

// exp(M) by scaling and squaring with a Taylor series, truncated once the
// terms fall below 1e-17 of the partial sum.
inline DenseMatrix matrix_exponential(const DenseMatrix& M) {
    const std::size_t n = M.size();
    double norm = 0.0;
    for (const auto& row : M) {
        double s = 0.0;
        for (double v : row) s += std::abs(v);
        norm = std::max(norm, s);
    }
    int squarings = 0;
    while (norm / std::ldexp(1.0, squarings) > 0.5) ++squarings;
    DenseMatrix A = M;
    const double scale = std::ldexp(1.0, -squarings);
    for (auto& row : A)
        for (double& v : row) v *= scale;
    DenseMatrix result(n, std::vector<double>(n, 0.0)), term(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) result[i][i] = term[i][i] = 1.0;
    for (int k = 1; k < 40; ++k) {
        term = matmul(term, A);
        double tnorm = 0.0;
        for (auto& row : term)
            for (double& v : row) {
                v /= k;
                tnorm = std::max(tnorm, std::abs(v));
            }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) result[i][j] += term[i][j];
        if (tnorm < 1e-17) break;
    }
    for (int s = 0; s < squarings; ++s) result = matmul(result, result);
    return result;
}

// exp((W - D) T) u0 for the linear kernel.
inline Field linear_flow_oracle(const Grid& grid, const SpatialKernelTable& J, const Field& u0, double T) {
    DenseMatrix M = linear_operator_matrix(grid, J);
    for (auto& row : M)
        for (double& v : row) v *= T;
    const DenseMatrix E = matrix_exponential(M);
    std::vector<double> out(grid.size(), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = 0; j < out.size(); ++j) out[i] += E[i][j] * u0[j];
    return Field(grid, std::move(out));
}

struct RefinementResult {
    std::vector<std::size_t> steps;
    std::vector<double> errors;  // L-infinity error of the final state
    double order = std::numeric_limits<double>::quiet_NaN();
    bool used_oracle = false;
    RunReport report;
};

/// Final-state errors for each step count, against the matrix-exponential
/// oracle when A is linear and f vanishes, otherwise against the finest level.
/// The order is fitted without the coarsest level.
inline RefinementResult time_refinement_study(const Problem& pb, const Field& u0, SolverConfig cfg,
                                              std::vector<std::size_t> steps) {
    if (steps.size() < 3) throw ConfigError("time refinement needs at least three step counts");
    for (std::size_t k = 1; k < steps.size(); ++k)
        if (steps[k] <= steps[k - 1] || steps[k] % steps[k - 1] != 0)
            throw ConfigError("time refinement step counts must increase and divide each other");

    RefinementResult res;
    res.steps = steps;
    res.used_oracle = pb.A.family() == RangeFamily::linear && pb.f.is_zero();
    const unsigned fan = std::max(1u, cfg.threads);
    cfg.threads = 1;
    cfg.record_every = std::numeric_limits<std::size_t>::max();
    std::vector<Field> finals(steps.size());
    std::vector<ResolvedConstants> consts(steps.size());
    parallel_for(steps.size(), fan, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t k = lo; k < hi; ++k) {
            SolverConfig c = cfg;
            c.steps = steps[k];
            Trajectory t = solve(pb, u0, c);
            finals[k] = t.states.back();
            consts[k] = t.constants;
        }
    });

    Field reference = res.used_oracle ? linear_flow_oracle(pb.grid, pb.J, u0, cfg.T) : finals.back();
    const std::size_t levels = res.used_oracle ? steps.size() : steps.size() - 1;
    for (std::size_t k = 0; k < levels; ++k) res.errors.push_back(lp_norm(pb.grid, finals[k] - reference, kInfinity));

    RunReport& r = res.report;
    record_constants(r, consts.back());
    r.series["errors"] = res.errors;
    r.constants["oracle"] = res.used_oracle ? 1.0 : 0.0;

    const double emax = *std::max_element(res.errors.begin(), res.errors.end());
    if (emax <= 1e-12) {
        r.add("stationary", "errors vanish for stationary data", true, emax, 1e-12);
        r.skip("order", "fitted convergence order", res.order, "undefined: all errors vanish");
        return res;
    }
    std::vector<double> xs, ys;
    for (std::size_t k = 1; k < res.errors.size(); ++k) {
        xs.push_back(static_cast<double>(steps[k]));
        ys.push_back(res.errors[k]);
    }
    res.order = -fit_log_log(xs, ys).slope;
    r.constants["order"] = res.order;

    bool down = true;
    for (std::size_t k = 1; k < res.errors.size(); ++k) down = down && res.errors[k] < res.errors[k - 1];
    r.add("monotone_error", "error decreases with every refinement", down, res.errors.back(), res.errors.front());
    if (res.used_oracle)
        r.add("order", "fitted order is first order", res.order >= 0.8 && res.order <= 1.2, res.order, 1.0,
              "window [0.8, 1.2]");
    else
        r.skip("order", "fitted convergence order", res.order,
               "self-refinement against the finest level; the order is reported, not asserted");
    return res;
}

}  // namespace nldiff
