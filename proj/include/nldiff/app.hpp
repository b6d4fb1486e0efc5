#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nldiff/analysis.hpp"
#include "nldiff/config.hpp"
#include "nldiff/errors.hpp"
#include "nldiff/grid.hpp"
#include "nldiff/image.hpp"
#include "nldiff/nonlocal_operator.hpp"
#include "nldiff/stepper.hpp"

namespace nldiff {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitConfig = 2, kExitBlowup = 3 };

struct CliOptions {
    std::string config;
    std::optional<std::string> out;
    unsigned threads = 1;
    std::optional<std::uint64_t> seed;
    bool one_step = false;
};

namespace detail {

inline RunConfig load_run_config(const CliOptions& o) {
    RunConfig cfg = parse_config_file(o.config);
    if (o.seed) cfg.seed = cfg.solver.seed = *o.seed;
    if (o.out) cfg.output.dir = *o.out;
    cfg.solver.threads = o.threads == 0 ? 1 : o.threads;
    return cfg;
}

inline std::filesystem::path prepare_out(const RunConfig& cfg) {
    std::filesystem::path dir(cfg.output.dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw FormatError("cannot write '" + p.string() + "'");
    return os;
}

inline void write_field_file(const std::filesystem::path& p, const Field& f) {
    auto os = open_out(p);
    write_field_csv(os, f);
}

inline void write_trajectory(const std::filesystem::path& dir, const RunConfig& cfg, const Trajectory& tr) {
    if (cfg.output.write_fields) {
        std::filesystem::create_directories(dir / "fields");
        for (std::size_t k = 0; k < tr.states.size(); ++k)
            write_field_file(dir / "fields" / ("field_" + std::to_string(tr.recorded_steps[k]) + ".csv"), tr.states[k]);
    }
    auto os = open_out(dir / "diagnostics.csv");
    write_diagnostics_csv(os, tr);
}

inline void write_summary(const std::filesystem::path& p, const RunConfig& cfg, const Trajectory& tr,
                          const std::vector<std::string>& extra = {}) {
    auto os = open_out(p);
    os << "scheme = " << to_string(cfg.solver.scheme) << "\n";
    os << "steps = " << cfg.solver.steps << "\n";
    RunReport r;
    record_constants(r, tr.constants);
    for (const auto& [k, v] : r.constants) os << k << " = " << format_double(v) << "\n";
    for (const auto& w : tr.warnings) os << "warning: " << w << "\n";
    for (const auto& e : extra) os << e << "\n";
}

inline void write_report(const std::filesystem::path& dir, const RunReport& r) {
    auto txt = open_out(dir / "report.txt");
    write_report_text(txt, r);
    auto csv = open_out(dir / "report.csv");
    write_report_csv(csv, r);
}

// Maps library errors onto exit codes.
inline int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const NumericalBlowup& e) {
        err << "error: " << e.what() << "\n";
        return kExitBlowup;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << "\n";
        for (const auto& o : e.offending()) err << "  " << o << "\n";
    } catch (const RefusalError& e) {
        err << "refused: " << e.what() << "\n";
    } catch (const FormatError& e) {
        err << "format error: " << e.what() << "\n";
    } catch (const UndefinedRatio& e) {
        err << "error: " << e.what() << "\n";
    }
    return kExitConfig;
}

// Solves and writes the trajectory; on blowup the last finite state is saved
// before the error propagates.
inline Trajectory solve_to(const std::filesystem::path& dir, const RunConfig& cfg, const Scenario& sc) {
    try {
        return solve(sc.problem, sc.u0, cfg.solver);
    } catch (const NumericalBlowup& e) {
        write_field_file(dir / "last_finite.csv", e.last_finite_state());
        throw;
    }
}

}  // namespace detail

/// Writes fields/field_<step>.csv, diagnostics.csv and summary.txt.
inline int cmd_solve(const CliOptions& o, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return detail::guarded(err, [&] {
        const RunConfig cfg = detail::load_run_config(o);
        const Scenario sc = build_scenario(cfg);
        const auto dir = detail::prepare_out(cfg);
        const Trajectory tr = detail::solve_to(dir, cfg, sc);
        detail::write_trajectory(dir, cfg, tr);
        detail::write_summary(dir / "summary.txt", cfg, tr);
        for (const auto& w : tr.warnings) err << "warning: " << w << "\n";
        out << "solved " << cfg.solver.steps << " steps, final max " << format_double(tr.per_step.back().max) << "\n";
        return int(kExitOk);
    });
}

/// Solves, runs the invariant battery and exits 1 if any check fails.
inline int cmd_verify(const CliOptions& o, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return detail::guarded(err, [&] {
        const RunConfig cfg = detail::load_run_config(o);
        const Scenario sc = build_scenario(cfg);
        const auto dir = detail::prepare_out(cfg);
        const Trajectory tr = detail::solve_to(dir, cfg, sc);
        auto diag = detail::open_out(dir / "diagnostics.csv");
        write_diagnostics_csv(diag, tr);
        const RunReport r = verify_invariants(sc.problem, tr);
        detail::write_report(dir, r);
        write_report_text(out, r);
        return r.all_passed() ? int(kExitOk) : int(kExitCheckFailed);
    });
}

/// Runs the configured flow on an image (denoised.pgm, energy.csv,
/// final_field.csv, summary.txt) or, with one_step, a single bilateral filter
/// pass (filtered.pgm).
inline int cmd_denoise(const CliOptions& o, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return detail::guarded(err, [&] {
        const RunConfig cfg = detail::load_run_config(o);
        if (cfg.initial.kind != InitialKind::image) throw ConfigError("denoise needs initial.kind = image");
        const Scenario sc = build_scenario(cfg);
        const auto dir = detail::prepare_out(cfg);
        if (o.one_step) {
            const Field filtered = bilateral_filter(sc.problem.grid, sc.problem.J, sc.u0, cfg.range.h, cfg.solver.threads);
            save_pgm(field_to_image(filtered), (dir / "filtered.pgm").string());
            detail::write_field_file(dir / "filtered_field.csv", filtered);
            out << "filtered image written\n";
            return int(kExitOk);
        }
        const Trajectory tr = detail::solve_to(dir, cfg, sc);
        const Field& final_state = tr.states.back();
        save_pgm(field_to_image(final_state), (dir / "denoised.pgm").string());
        detail::write_field_file(dir / "final_field.csv", final_state);
        {
            auto os = detail::open_out(dir / "energy.csv");
            os << "step,t,flow_energy,bilateral_energy\n";
            const bool bil = sc.problem.A.family() == RangeFamily::bilateral_gaussian;
            std::size_t next = 0;
            for (const auto& d : tr.per_step) {
                double jb = std::numeric_limits<double>::quiet_NaN();
                if (bil && next < tr.states.size() && tr.recorded_steps[next] == d.step)
                    jb = energy_bilateral(sc.problem.grid, sc.problem.J, tr.states[next++], sc.problem.A.h()).value;
                os << d.step << ',' << format_double(d.t) << ',' << format_double(d.energy) << ',' << format_double(jb)
                   << '\n';
            }
        }
        const std::string range = "pre-clamp min = " + format_double(final_state.min()) +
                                  "\npre-clamp max = " + format_double(final_state.max());
        detail::write_summary(dir / "summary.txt", cfg, tr, {range});
        for (const auto& w : tr.warnings) err << "warning: " << w << "\n";
        out << range << "\n";
        return int(kExitOk);
    });
}

/// kind is contraction, cauchy or refine.
inline int cmd_study(const std::string& kind, const CliOptions& o, std::ostream& out = std::cout,
                     std::ostream& err = std::cerr) {
    return detail::guarded(err, [&] {
        const RunConfig cfg = detail::load_run_config(o);
        if (kind != "contraction" && kind != "cauchy" && kind != "refine")
            throw ConfigError("unknown study '" + kind + "'; expected contraction, cauchy or refine");
        const Scenario sc = build_scenario(cfg);
        const auto dir = detail::prepare_out(cfg);
        RunReport report;
        if (kind == "contraction") {
            Rng rng(cfg.seed + 1);
            Field u02 = sc.u0;
            for (auto& v : u02.values()) v += cfg.study.offset + cfg.study.noise * rng.uniform();
            report = contraction_study(sc.problem, sc.u0, u02, cfg.solver, cfg.study.norm);
            auto os = detail::open_out(dir / "ratios.csv");
            os << "t,ratio,envelope\n";
            const auto& t = report.series.at("t");
            for (std::size_t k = 0; k < t.size(); ++k)
                os << format_double(t[k]) << ',' << format_double(report.series.at("ratio")[k]) << ','
                   << format_double(report.series.at("envelope")[k]) << '\n';
        } else if (kind == "cauchy") {
            const RangeKernel& A = sc.problem.A;
            const RangeKernel base = A.family() == RangeFamily::mollified ? *A.base() : A;
            const CauchyStudyResult res =
                mollifier_cauchy_study(sc.problem, base, cfg.study.levels, sc.u0, cfg.solver, cfg.range.quad_count);
            report = res.report;
            auto os = detail::open_out(dir / "pairwise_l1.csv");
            os << "m,n,distance\n";
            for (std::size_t i = 0; i < res.levels.size(); ++i)
                for (std::size_t j = 0; j < res.levels.size(); ++j)
                    os << res.levels[i] << ',' << res.levels[j] << ',' << format_double(res.pairwise_l1[i][j]) << '\n';
            detail::write_field_file(dir / "limit_estimate.csv", res.limit_estimate);
        } else {
            const RefinementResult res = time_refinement_study(sc.problem, sc.u0, cfg.solver, cfg.study.steps_list);
            report = res.report;
            auto os = detail::open_out(dir / "errors.csv");
            os << "steps,error\n";
            for (std::size_t k = 0; k < res.errors.size(); ++k)
                os << res.steps[k] << ',' << format_double(res.errors[k]) << '\n';
        }
        detail::write_report(dir, report);
        write_report_text(out, report);
        return report.all_passed() ? int(kExitOk) : int(kExitCheckFailed);
    });
}

}  // namespace nldiff
