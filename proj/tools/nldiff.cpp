#include <algorithm>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nldiff/app.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Nonlocal reaction-diffusion solver"};
    app.require_subcommand(1);

    nldiff::CliOptions opts;
    std::string out;
    std::uint64_t seed = 0;
    std::vector<CLI::Option*> out_opts, seed_opts;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config, "run config file")->required()->check(CLI::ExistingFile);
        out_opts.push_back(sub->add_option("--out", out, "output directory (overrides output.dir)"));
        sub->add_option("--threads", opts.threads, "worker threads for the operator")->check(CLI::PositiveNumber);
        seed_opts.push_back(sub->add_option("--seed", seed, "RNG seed (overrides seed)"));
    };

    auto* solve = app.add_subcommand("solve", "run the flow and write the trajectory");
    common(solve);
    auto* denoise = app.add_subcommand("denoise", "run the flow on a PGM image");
    common(denoise);
    denoise->add_flag("--one-step", opts.one_step, "single bilateral filter pass instead of the flow");
    auto* verify = app.add_subcommand("verify", "solve and check the invariants");
    common(verify);
    auto* study = app.add_subcommand("study", "contraction, Cauchy or time-refinement study");
    study->require_subcommand(1);
    std::string kind;
    for (const char* k : {"contraction", "cauchy", "refine"}) {
        auto* s = study->add_subcommand(k);
        common(s);
        s->callback([&kind, k] { kind = k; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : nldiff::kExitConfig;
    }

    auto given = [](const std::vector<CLI::Option*>& v) {
        return std::any_of(v.begin(), v.end(), [](const CLI::Option* o) { return o->count() > 0; });
    };
    if (given(out_opts)) opts.out = out;
    if (given(seed_opts)) opts.seed = seed;

    if (solve->parsed()) return nldiff::cmd_solve(opts);
    if (denoise->parsed()) return nldiff::cmd_denoise(opts);
    if (verify->parsed()) return nldiff::cmd_verify(opts);
    return nldiff::cmd_study(kind, opts);
}
