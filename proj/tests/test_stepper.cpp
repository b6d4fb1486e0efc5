#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nldiff/analysis.hpp"
#include "nldiff/stepper.hpp"
#include "oracles/closed_forms.hpp"
#include "oracles/dense_operator.hpp"
#include "oracles/symmetric_expm.hpp"

using namespace nldiff;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

Grid unit_grid(std::size_t n) { return build_grid(1, {{0.0, 1.0}}, {n}); }

Field random_field(const Grid& g, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
    Rng rng(seed);
    return Field::from_function(g, [&](std::size_t) { return rng.uniform(lo, hi); });
}

Problem make_problem(std::size_t n, double rho, RangeKernel A, Reaction f = Reaction::zero()) {
    const Grid g = unit_grid(n);
    return Problem{g, make_spatial_kernel(g, SpatialFamily::gaussian, rho), std::move(A), std::move(f)};
}

SolverConfig config(double T, std::size_t steps, Scheme s = Scheme::semi_implicit_w) {
    SolverConfig c;
    c.T = T;
    c.steps = steps;
    c.scheme = s;
    return c;
}

double sup_gap(const Field& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

}  // namespace

TEST_CASE("select_mu examples", "[stepper]") {
    CHECK_THAT(select_mu(MuMode::auto_growth, 1.0, 0.5, 1.0, 0.01), WithinRel(2.51, 1e-15));
    CHECK(select_mu(MuMode::auto_linf, 0.0, 1.0, 1.0, 0.01) == 2.0);
    CHECK(select_mu(MuMode::manual, 7.0, 7.0, 1.0, 0.01, 0.0) == 0.0);
    CHECK_THROWS_AS(select_mu(MuMode::auto_linf, 0.0, 1.0, 0.0, 0.01), ConfigError);
    CHECK_THROWS_AS(select_mu(MuMode::manual, 0.0, 0.0, 1.0, 0.01, -1.0), ConfigError);
}

TEST_CASE("auto modes satisfy their inequalities strictly", "[stepper][property]") {
    Rng rng(3);
    for (int k = 0; k < 200; ++k) {
        const double CA = rng.uniform(0, 5), Cf = rng.uniform(0, 5), K = rng.uniform(0.01, 3);
        CHECK(select_mu(MuMode::auto_growth, CA, Cf, K, 0.01) > 2 * CA + Cf);
        CHECK(select_mu(MuMode::auto_linf, CA, Cf, K, 0.01) == Cf * (1 + K) / K);
    }
}

TEST_CASE("constant w decays by the implicit factor", "[stepper]") {
    const Problem pb = make_problem(10, 0.2, RangeKernel::p_laplacian(3.0));
    const Field w(pb.grid, 0.8);
    const double tau = 0.01, mu = 2.5;
    const Field next = step_semi_implicit(pb.grid, pb.J, pb.A, pb.f, 0.3, tau, mu, w);
    for (double v : next.values()) CHECK(v == 0.8 / (1.0 + tau * mu));
    CHECK_THROWS_AS(step_semi_implicit(pb.grid, pb.J, pb.A, pb.f, 0.0, 0.0, mu, w), ConfigError);
    CHECK_THROWS_AS(step_semi_implicit(pb.grid, pb.J, pb.A, pb.f, 0.0, tau, -1.0, w), ConfigError);
}

TEST_CASE("mu = 0 step is bit-identical to explicit Euler", "[stepper]") {
    const Problem pb = make_problem(14, 0.15, RangeKernel::p_laplacian(1.5), Reaction::logistic(1.0, 1.0));
    const Field w = random_field(pb.grid, 12);
    const Field a = step_semi_implicit(pb.grid, pb.J, pb.A, pb.f, 0.2, 0.01, 0.0, w);
    const Field b = step_explicit(pb.grid, pb.J, pb.A, pb.f, 0.2, 0.01, w);
    CHECK(a.values() == b.values());
    const Field op = apply_nonlocal(pb.grid, pb.J, pb.A, 0.2, w).result;
    for (std::size_t x = 0; x < w.size(); ++x) CHECK(b[x] == w[x] + 0.01 * (op[x] + pb.f(w[x])));
}

TEST_CASE("mu = 0 trajectories are bit-identical across schemes", "[stepper][property]") {
    const Problem pb = make_problem(16, 0.1, RangeKernel::bilateral_gaussian(0.4), Reaction::affine(0.1, -0.3));
    const Field u0 = random_field(pb.grid, 2);
    SolverConfig w = config(0.5, 200);
    w.mu_mode = MuMode::manual;
    w.mu = 0.0;
    const Trajectory a = solve(pb, u0, w);
    const Trajectory b = solve(pb, u0, config(0.5, 200, Scheme::explicit_euler));
    REQUIRE(a.states.size() == b.states.size());
    for (std::size_t k = 0; k < a.states.size(); ++k) CHECK(a.states[k].values() == b.states[k].values());
}

TEST_CASE("two-node difference follows the scalar recurrence", "[stepper][oracle]") {
    const Grid g = unit_grid(2);
    std::vector<KernelSample> t{{{-1, 0}, 1.0}, {{1, 0}, 1.0}};
    const SpatialKernelTable J = make_spatial_kernel(g, SpatialFamily::custom_table, 0.0, &t);
    const double c = 2.0 * g.node_volume() * J.weight_at({1, 0});  // coupling rate of the difference
    REQUIRE(c == 1.0);
    Field w(g, std::vector<double>{0.2, 0.9});
    const double d0 = w[1] - w[0];
    for (int j = 1; j <= 10; ++j) {
        w = step_semi_implicit(g, J, RangeKernel::linear(), Reaction::zero(), 0.1 * (j - 1), 0.1, 0.0, w);
        CHECK_THAT(w[1] - w[0], WithinAbs(oracle::geometric(0.1 * c, d0, j), 1e-15));
    }
}

TEST_CASE("constant data are stationary", "[stepper]") {
    for (const RangeKernel& A : {RangeKernel::linear(), RangeKernel::p_laplacian(1.5), RangeKernel::bilateral_gaussian(0.2)}) {
        const Problem pb = make_problem(12, 0.2, A);
        const Trajectory tr = solve(pb, Field(pb.grid, 0.5), config(1.0, 100, Scheme::explicit_euler));
        for (const Field& s : tr.states)
            for (double v : s.values()) CHECK_THAT(v, WithinAbs(0.5, 1e-12));
    }
}

TEST_CASE("w-scheme drifts constant data by gamma per step", "[stepper]") {
    const Problem pb = make_problem(12, 0.2, RangeKernel::linear());
    const Trajectory tr = solve(pb, Field(pb.grid, 0.5), config(1.0, 100));
    const double gamma = tr.constants.gamma;
    CHECK(gamma > 1.0);
    for (std::size_t k = 0; k < tr.states.size(); ++k)
        for (double v : tr.states[k].values())
            CHECK_THAT(v, WithinRel(0.5 * std::pow(gamma, static_cast<double>(tr.recorded_steps[k])), 1e-12));
}

TEST_CASE("trajectory metadata", "[stepper]") {
    const Problem pb = make_problem(12, 0.2, RangeKernel::linear());
    const Field u0 = random_field(pb.grid, 4);
    SolverConfig c = config(0.7, 45);
    c.record_every = 10;
    const Trajectory tr = solve(pb, u0, c);
    CHECK(tr.recorded_steps == std::vector<std::size_t>{0, 10, 20, 30, 40, 45});
    CHECK(tr.times.front() == 0.0);
    CHECK(tr.times.back() == 0.7);
    for (std::size_t k = 1; k < tr.times.size(); ++k) CHECK(tr.times[k] > tr.times[k - 1]);
    CHECK(tr.states.front().values() == u0.values());
    CHECK(tr.per_step.size() == 46);
}

TEST_CASE("linear flow matches the matrix exponential", "[stepper][oracle]") {
    const Problem pb = make_problem(8, 0.2, RangeKernel::linear());
    const Field u0 = random_field(pb.grid, 21);
    const auto S = oracle::gaussian_generator({0.0}, {1.0}, {8}, 0.2);
    const auto exact = oracle::symmetric_expm_apply(S, 1.0, u0.values());
    for (Scheme s : {Scheme::explicit_euler, Scheme::semi_implicit_w}) {
        INFO(to_string(s));
        const double e1 = sup_gap(solve(pb, u0, config(1.0, 4096, s)).states.back(), exact);
        const double e2 = sup_gap(solve(pb, u0, config(1.0, 8192, s)).states.back(), exact);
        CHECK(e1 <= 5e-4);
        CHECK(e2 / e1 >= 0.4);
        CHECK(e2 / e1 <= 0.6);
    }
}

TEST_CASE("library matrix exponential agrees with the eigen oracle", "[stepper][oracle]") {
    const Problem pb = make_problem(8, 0.2, RangeKernel::linear());
    const Field u0 = random_field(pb.grid, 22);
    const auto exact = oracle::symmetric_expm_apply(oracle::gaussian_generator({0.0}, {1.0}, {8}, 0.2), 1.0, u0.values());
    CHECK(sup_gap(linear_flow_oracle(pb.grid, pb.J, u0, 1.0), exact) <= 1e-12);
}

TEST_CASE("spatially constant logistic growth", "[stepper][oracle]") {
    const Problem pb = make_problem(8, 0.2, RangeKernel::linear(), Reaction::logistic(1.0, 1.0));
    const Field u0(pb.grid, 0.1);
    const double exact = oracle::logistic(1.0, 1.0, 0.1, 1.0);
    SECTION("explicit Euler hits the closed form") {
        const Trajectory tr = solve(pb, u0, config(1.0, 4096, Scheme::explicit_euler));
        for (std::size_t k = 1; k < tr.states.size(); ++k) CHECK(tr.states[k][0] > tr.states[k - 1][0]);
        for (double v : tr.states.back().values()) CHECK_THAT(v, WithinAbs(exact, 5e-4));
    }
    SECTION("w-scheme converges at first order") {
        const double e1 = std::abs(solve(pb, u0, config(1.0, 4096)).states.back()[0] - exact);
        const double e2 = std::abs(solve(pb, u0, config(1.0, 8192)).states.back()[0] - exact);
        CHECK(e2 / e1 >= 0.4);
        CHECK(e2 / e1 <= 0.6);
    }
}

TEST_CASE("stability ratio needs distinct data", "[stepper]") {
    const Problem pb = make_problem(8, 0.2, RangeKernel::linear());
    const Field u0 = random_field(pb.grid, 1);
    const Trajectory a = solve(pb, u0, config(0.1, 10));
    CHECK_THROWS_AS(stability_constant_estimate(a, a, 2.0), UndefinedRatio);
}

TEST_CASE("monotone kernel without reaction contracts", "[stepper]") {
    const Problem pb = make_problem(24, 0.1, RangeKernel::p_laplacian(2.0));
    const Field u1 = random_field(pb.grid, 1), u2 = random_field(pb.grid, 2);
    const SolverConfig c = config(1.0, 400, Scheme::explicit_euler);
    for (double p : {1.0, 2.0, kInfinity}) {
        const StabilitySeries s = stability_constant_estimate(solve(pb, u1, c), solve(pb, u2, c), p);
        for (double r : s.ratios) CHECK(r <= 1.0 + 1e-8);
    }
}

TEST_CASE("Lipschitz reaction stays inside its envelope", "[stepper]") {
    const Problem pb = make_problem(24, 0.1, RangeKernel::p_laplacian(2.0), Reaction::affine(0.1, 0.5));
    REQUIRE(pb.f.lipschitz_constant() == 0.5);
    const Field u1 = random_field(pb.grid, 5), u2 = random_field(pb.grid, 6);
    const SolverConfig c = config(1.0, 400, Scheme::explicit_euler);
    const StabilitySeries s = stability_constant_estimate(solve(pb, u1, c), solve(pb, u2, c), 2.0);
    for (std::size_t k = 0; k < s.ratios.size(); ++k) CHECK(s.ratios[k] <= std::exp(0.5 * s.times[k]) * (1 + 1e-6));
}

TEST_CASE("resolved constants", "[stepper]") {
    const Problem pb = make_problem(16, 0.1, RangeKernel::linear(), Reaction::affine(0.5, 0.0));
    const Field u0 = random_field(pb.grid, 3);
    const ResolvedConstants c = resolve_constants(pb, u0, config(1.0, 100));
    CHECK_THAT(c.C_A, WithinRel(1.0, 1e-12));
    CHECK(c.C_f == 0.5);
    CHECK_THAT(c.mu, WithinRel(2.51, 1e-12));
    CHECK_THAT(c.K, WithinRel(1.01 * u0.max(), 1e-15));
    CHECK_THAT(c.mu_linf, WithinRel(0.5 * (1 + c.K) / c.K, 1e-15));
    CHECK(c.M0 == std::max(u0.max(), 0.5 / (c.mu - 2.5)));
    CHECK_THAT(c.tau_max, WithinRel(1.0 / c.kernel_mass, 1e-9));
    CHECK_THROWS_AS(resolve_constants(pb, u0, config(0.0, 100)), ConfigError);
    CHECK_THROWS_AS(resolve_constants(pb, u0, config(1.0, 0)), ConfigError);
}

TEST_CASE("auto_growth refuses kernels that are not Lipschitz at zero", "[stepper]") {
    const Problem pb = make_problem(8, 0.2, RangeKernel::p_laplacian(1.5));
    const Field u0 = random_field(pb.grid, 3);
    CHECK_THROWS_AS(resolve_constants(pb, u0, config(1.0, 10)), ConfigError);
    CHECK_NOTHROW(resolve_constants(pb, u0, config(1.0, 10, Scheme::explicit_euler)));
    const Problem mol = make_problem(8, 0.2, mollify_range_kernel(RangeKernel::p_laplacian(1.5), 8, 64));
    CHECK_NOTHROW(resolve_constants(mol, u0, config(1.0, 10)));
}

TEST_CASE("w-scheme iterates respect the uniform bound", "[stepper][property]") {
    const Problem pb = make_problem(20, 0.1, RangeKernel::p_laplacian(3.0), Reaction::logistic(1.0, 1.0));
    const Field u0 = random_field(pb.grid, 8);
    const Trajectory tr = solve(pb, u0, config(1.0, 1000));
    const ResolvedConstants& c = tr.constants;
    REQUIRE(std::isfinite(c.M0));
    for (std::size_t k = 0; k < tr.states.size(); ++k) {
        const double w_inf = lp_norm(pb.grid, tr.states[k], kInfinity) * std::exp(-c.mu * tr.times[k]);
        CHECK(w_inf <= c.M0 * (1 + 1e-12));
    }
}

TEST_CASE("L-infinity certificate holds", "[stepper][property]") {
    for (const Reaction& f : {Reaction::logistic(1.0, 1.0), Reaction::affine(0.3, 0.2), Reaction::zero()}) {
        const Problem pb = make_problem(32, 0.1, RangeKernel::linear(), f);
        const Field u0 = random_field(pb.grid, 9);
        for (Scheme s : {Scheme::explicit_euler, Scheme::semi_implicit_w}) {
            SolverConfig c = config(0.5, 500, s);
            c.mu_mode = MuMode::auto_linf;
            const Trajectory tr = solve(pb, u0, c);
            for (const Field& st : tr.states)
                CHECK(lp_norm(pb.grid, st, kInfinity) <= tr.constants.linf_certificate * (1 + 1e-8));
        }
    }
}

TEST_CASE("non-negativity for every built-in kernel", "[stepper][property]") {
    const Field base(unit_grid(32), 0.0);
    const std::vector<RangeKernel> kernels{
        RangeKernel::linear(), RangeKernel::p_laplacian(1.5), RangeKernel::p_laplacian(3.0),
        RangeKernel::bilateral_gaussian(0.2), RangeKernel::variable_exponent(ExponentTable({{0.0, 2.0}, {0.5, 1.5}})),
        mollify_range_kernel(RangeKernel::p_laplacian(1.5), 8, 64)};
    for (const RangeKernel& A : kernels) {
        const Problem pb = make_problem(32, 0.1, A, Reaction::logistic(1.0, 1.0));
        const Field u0 = Field::from_function(pb.grid, [](std::size_t i) { return i < 16 ? 0.0 : 1.0; });
        const Trajectory tr = solve(pb, u0, config(0.5, 1000, Scheme::explicit_euler));
        INFO(A.describe());
        for (const Field& s : tr.states) CHECK(s.min() >= -1e-10);
        for (const auto& d : tr.per_step) CHECK(d.positivity_ok);
    }
}

TEST_CASE("mass is conserved without reaction", "[stepper][property]") {
    for (const RangeKernel& A : {RangeKernel::linear(), RangeKernel::p_laplacian(1.5), RangeKernel::bilateral_gaussian(0.3)}) {
        const Problem pb = make_problem(40, 0.08, A);
        const Field u0 = random_field(pb.grid, 31);
        const Trajectory tr = solve(pb, u0, config(1.0, 1000, Scheme::explicit_euler));
        const double m0 = integrate(pb.grid, u0);
        for (const auto& d : tr.per_step) CHECK(std::abs(d.mass - m0) <= 1e-10 * std::abs(m0) + 1e-14);
    }
}

TEST_CASE("energy is non-increasing", "[stepper][property]") {
    for (const RangeKernel& A : {RangeKernel::p_laplacian(2.0), RangeKernel::p_laplacian(3.0),
                                 RangeKernel::bilateral_gaussian(0.1), RangeKernel::bilateral_gaussian(1.0)}) {
        const Problem pb = make_problem(40, 0.08, A);
        const Field u0 = random_field(pb.grid, 32);
        const Trajectory tr = solve(pb, u0, config(1.0, 1000, Scheme::explicit_euler));
        INFO(A.describe());
        REQUIRE(tr.constants.tau <= tr.constants.tau_max);
        for (std::size_t k = 1; k < tr.per_step.size(); ++k)
            CHECK(tr.per_step[k].energy <= tr.per_step[k - 1].energy + 1e-10 * tr.per_step[0].energy);
    }
}

TEST_CASE("failed assumptions are refused unless overridden", "[stepper]") {
    const Problem pb = make_problem(8, 0.2, RangeKernel::linear());
    Field u0(pb.grid, 0.5);
    u0[3] = -0.2;
    CHECK_THROWS_AS(solve(pb, u0, config(0.1, 10)), RefusalError);
    SolverConfig c = config(0.1, 10, Scheme::explicit_euler);
    c.allow_invalid_assumptions = true;
    const Trajectory tr = solve(pb, u0, c);
    CHECK_FALSE(tr.warnings.empty());
}

TEST_CASE("oversized steps are warned about", "[stepper]") {
    const Problem pb = make_problem(8, 0.2, RangeKernel::linear());
    const Trajectory tr = solve(pb, random_field(pb.grid, 1), config(10.0, 5, Scheme::explicit_euler));
    REQUIRE_FALSE(tr.warnings.empty());
    CHECK(tr.warnings.front().find("positivity") != std::string::npos);
}

TEST_CASE("blowup reports its step and the last finite state", "[stepper]") {
    const Problem pb = make_problem(8, 0.2, RangeKernel::p_laplacian(3.0));
    const Field u0 = Field::from_function(pb.grid, [](std::size_t i) { return i % 2 ? 10.0 : 0.0; });
    try {
        solve(pb, u0, config(100.0, 100, Scheme::explicit_euler));
        FAIL("expected blowup");
    } catch (const NumericalBlowup& e) {
        CHECK(e.step() >= 1);
        CHECK(e.step() <= 100);
        CHECK(e.last_finite_state().all_finite());
    }
}

TEST_CASE("threads do not change results", "[stepper]") {
    const Problem pb = make_problem(64, 0.05, RangeKernel::p_laplacian(1.5), Reaction::logistic(1.0, 1.0));
    const Field u0 = random_field(pb.grid, 40);
    SolverConfig c = config(0.2, 100, Scheme::explicit_euler);
    const Trajectory a = solve(pb, u0, c);
    c.threads = 4;
    const Trajectory b = solve(pb, u0, c);
    CHECK(a.states.back().values() == b.states.back().values());
}

TEST_CASE("diagnostics csv layout", "[stepper]") {
    const Problem pb = make_problem(8, 0.2, RangeKernel::linear());
    const Trajectory tr = solve(pb, random_field(pb.grid, 1), config(0.1, 3));
    std::ostringstream os;
    write_diagnostics_csv(os, tr);
    const std::string s = os.str();
    CHECK(s.rfind("step,t,min,max,mass,energy,linf_bound_cert,positivity_ok\n", 0) == 0);
    CHECK(std::count(s.begin(), s.end(), '\n') == 5);
}
