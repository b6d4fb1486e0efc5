#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <sstream>

#include "nldiff/config.hpp"
#include "nldiff/image.hpp"

using namespace nldiff;

namespace {

const char* kMinimal =
    "grid.dim = 1\n"
    "grid.extents = 0 1\n"
    "grid.counts = 16\n"
    "range.family = linear\n"
    "reaction.family = zero\n"
    "initial.kind = constant\n";

RunConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

template <typename Fn>
std::string config_error(Fn&& fn, std::size_t* line = nullptr) {
    try {
        fn();
    } catch (const ConfigError& e) {
        if (line) *line = e.line();
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("minimal config materializes defaults", "[config]") {
    const RunConfig c = parse(kMinimal);
    CHECK(c.solver.scheme == Scheme::semi_implicit_w);
    CHECK(c.solver.mu_mode == MuMode::auto_growth);
    CHECK(c.seed == 42);
    CHECK(c.solver.seed == 42);
    CHECK(c.solver.T == 1.0);
    CHECK(c.solver.steps == 1000);
    CHECK(c.kernel.family == SpatialFamily::gaussian);
    CHECK(c.grid.given);
    CHECK(c.grid.counts == std::vector<std::size_t>{16});
    const std::string text = serialize_config(c);
    for (const char* key : {"solver.scheme = semi_implicit_w", "solver.mu_mode = auto_growth", "seed = 42"})
        CHECK(text.find(key) != std::string::npos);
}

TEST_CASE("unknown key is named with its line", "[config]") {
    std::size_t line = 0;
    const std::string msg = config_error([] { parse(std::string(kMinimal) + "# comment\ntua = 0.1\n"); }, &line);
    CHECK(msg.find("tua") != std::string::npos);
    CHECK(line == 8);
    CHECK(msg.find("line 8") != std::string::npos);
}

TEST_CASE("malformed values are rejected", "[config]") {
    std::size_t line = 0;
    CHECK(config_error([] { parse(std::string(kMinimal) + "solver.steps = many\n"); }, &line).find("solver.steps") !=
          std::string::npos);
    CHECK(line == 7);
    CHECK_FALSE(config_error([] { parse(std::string(kMinimal) + "solver.T = 1.0x\n"); }).empty());
    CHECK_FALSE(config_error([] { parse(std::string(kMinimal) + "solver.scheme = rk4\n"); }).empty());
    CHECK_FALSE(config_error([] { parse(std::string(kMinimal) + "output.write_fields = yes\n"); }).empty());
    CHECK_FALSE(config_error([] { parse(std::string(kMinimal) + "just words\n"); }).empty());
    CHECK_FALSE(config_error([] { parse(std::string(kMinimal) + "seed = 3\nseed = 4\n"); }).empty());
}

TEST_CASE("missing required keys are reported", "[config]") {
    const std::string msg = config_error([] { parse("grid.dim = 1\ngrid.extents = 0 1\ngrid.counts = 4\nrange.family = linear\ninitial.kind = constant\n"); });
    CHECK(msg.find("reaction.family") != std::string::npos);
    CHECK_FALSE(config_error([] { parse("range.family = linear\nreaction.family = zero\ninitial.kind = constant\n"); }).empty());
    CHECK_FALSE(config_error([] { parse(std::string(kMinimal) + "kernel.family = custom_table\n"); }).empty());
}

TEST_CASE("bilateral denoise config round-trips", "[config]") {
    const std::string text =
        "seed = 7\n"
        "kernel.family = gaussian\nkernel.radius = 0.03\n"
        "range.family = bilateral_gaussian\nrange.h = 0.1\n"
        "reaction.family = zero\n"
        "initial.kind = image\ninitial.path = noisy.pgm\n"
        "solver.T = 0.05\nsolver.steps = 50\nsolver.scheme = explicit_euler\nsolver.record_every = 10\n"
        "output.dir = denoise_out\n";
    const RunConfig a = parse(text);
    CHECK_FALSE(a.grid.given);
    const RunConfig b = parse(serialize_config(a));
    CHECK(a == b);
    CHECK(serialize_config(b) == serialize_config(a));
}

TEST_CASE("every family survives a round trip", "[config][property]") {
    const std::vector<std::string> extras{
        "range.family = p_laplacian\nrange.p = 1.5\n",
        "range.family = variable_exponent\nrange.exponent = 0:2 0.5:1.5\n",
        "range.family = spatial_exponent\nrange.exponent = 0:2.5 1:1.2\n",
        "range.family = mollified\nrange.base = p_laplacian\nrange.p = 1.5\nrange.n = 16\n",
        "range.family = bilateral_gaussian\nrange.h = inf\n",
    };
    const std::string base =
        "grid.dim = 2\ngrid.extents = 0 1 0 0.5\ngrid.counts = 8 4\n"
        "reaction.family = logistic\nreaction.rate = 0.7\nreaction.capacity = 2\n"
        "initial.kind = random\nstudy.norm = inf\nstudy.levels = 2 4 8\n";
    for (const auto& e : extras) {
        const RunConfig a = parse(base + e);
        CHECK(parse(serialize_config(a)) == a);
        CHECK_NOTHROW(build_scenario(a));
    }
}

TEST_CASE("scenario builder wires the config together", "[config]") {
    const RunConfig c = parse(
        "seed = 5\ngrid.dim = 1\ngrid.extents = 0 1\ngrid.counts = 10\n"
        "kernel.family = box\nkernel.radius = 0.2\n"
        "range.family = p_laplacian\nrange.p = 3\n"
        "reaction.family = affine\nreaction.a = 0.1\nreaction.b = -0.2\n"
        "initial.kind = step\ninitial.low = 0.2\ninitial.high = 0.9\ninitial.position = 0.5\n");
    const Scenario sc = build_scenario(c);
    CHECK(sc.problem.grid.size() == 10);
    CHECK(sc.problem.J.family() == SpatialFamily::box);
    CHECK(sc.problem.A.family() == RangeFamily::p_laplacian);
    CHECK(sc.problem.A(2.0) == 4.0);
    CHECK(sc.problem.f(1.0) == 0.1 - 0.2);
    CHECK(sc.u0[0] == 0.2);
    CHECK(sc.u0[9] == 0.9);
}

TEST_CASE("random initial data follow the seed", "[config]") {
    const std::string text = std::string(kMinimal).replace(std::string(kMinimal).find("constant"), 8, "random");
    const Field a = build_scenario(parse(text + "seed = 3\n")).u0;
    const Field b = build_scenario(parse(text + "seed = 3\n")).u0;
    const Field c = build_scenario(parse(text + "seed = 4\n")).u0;
    CHECK(a.values() == b.values());
    CHECK(a.values() != c.values());
    CHECK(a.min() >= 0.0);
    CHECK(a.max() < 1.0);
}

TEST_CASE("file inputs resolve relative to the config", "[config]") {
    const auto dir = std::filesystem::temp_directory_path() / "nldiff_config_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream k(dir / "kernel.csv");
        k << "-1,1\n0,2\n1,1\n";
        std::ofstream cfg(dir / "run.cfg");
        cfg << kMinimal << "kernel.family = custom_table\nkernel.table = kernel.csv\n";
    }
    const RunConfig c = parse_config_file((dir / "run.cfg").string());
    const Scenario sc = build_scenario(c);
    CHECK(sc.problem.J.size() == 3);
    CHECK(sc.problem.J.weight_at({0, 0}) == 2.0 * sc.problem.J.weight_at({1, 0}));
    CHECK_THROWS_AS(parse_config_file((dir / "absent.cfg").string()), ConfigError);
    std::filesystem::remove_all(dir);
}

// ---------------------------------------------------------------------------
// PGM

TEST_CASE("ASCII PGM is scaled by maxval", "[config][image]") {
    std::istringstream in("P2\n# tiny\n2 2\n255\n0 255\n128 64\n");
    const ImageField img = read_pgm(in);
    REQUIRE(img.width == 2);
    REQUIRE(img.height == 2);
    CHECK(img.values == std::vector<double>{0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0});
}

TEST_CASE("8-bit P5 round-trips byte for byte", "[config][image][property]") {
    Rng rng(4);
    for (auto [w, h] : {std::pair<int, int>{1, 1}, {3, 2}, {17, 9}}) {
        std::string raster(static_cast<std::size_t>(w * h), '\0');
        for (auto& ch : raster) ch = static_cast<char>(rng.index(256));
        const std::string bytes = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n" + raster;
        std::istringstream in(bytes);
        std::ostringstream out;
        write_pgm(out, read_pgm(in));
        CHECK(out.str() == bytes);
    }
}

TEST_CASE("16-bit P5 is read big-endian", "[config][image]") {
    const std::string bytes = std::string("P5 2 1 65535\n") + '\xff' + '\xff' + '\x80' + '\x00';
    std::istringstream in(bytes);
    const ImageField img = read_pgm(in);
    CHECK(img.values[0] == 1.0);
    CHECK(img.values[1] == 32768.0 / 65535.0);
}

TEST_CASE("malformed PGM headers are format errors", "[config][image]") {
    for (const char* bad : {"P2\n2 2\n0\n0 0 0 0\n", "P3\n1 1\n255\n0\n", "P2\n2 x\n255\n", "P5\n2 2\n255\n\x01",
                            "P2\n1 1\n70000\n0\n", "P2\n1 1\n10\n11\n"}) {
        std::istringstream in(bad);
        CHECK_THROWS_AS(read_pgm(in), FormatError);
    }
}

TEST_CASE("quantization clamps and rounds half up", "[config][image]") {
    CHECK(quantize_gray(-0.3) == 0);
    CHECK(quantize_gray(1.7) == 255);
    CHECK(quantize_gray(0.5) == 128);  // 127.5 rounds up
    CHECK(quantize_gray(127.0 / 255.0) == 127);
}

TEST_CASE("images map to a physical grid", "[config][image]") {
    ImageField img{3, 2, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}};
    const Field f = image_to_field(img);
    const Grid& g = f.grid();
    CHECK(g.dim() == 2);
    CHECK(g.counts()[0] == 3);
    CHECK(g.counts()[1] == 2);
    CHECK(g.extents()[1].hi == 2.0 / 3.0);
    CHECK_THAT(g.spacing()[0], Catch::Matchers::WithinRel(g.spacing()[1], 1e-15));
    CHECK(f[g.flat_index(2, 0)] == 0.3);  // column 2, row 0
    CHECK(f[g.flat_index(0, 1)] == 0.4);
    CHECK(field_to_image(f) == img);
}
