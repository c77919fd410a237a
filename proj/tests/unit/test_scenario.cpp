#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "biascav/error.hpp"
#include "biascav/scenario.hpp"

using namespace biascav;

namespace {

const std::string kModes = R"(schema_version: 1
kind: modes
geometry:
  preset: reference
modes:
  list: [TE101, TE301]
  measured:
    TE301: 20.59e9
)";

std::string error_of(const std::string& text) {
    try {
        (void)parse_scenario(text);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("a minimal modes config parses") {
    const auto sc = parse_scenario(kModes);
    CHECK(sc.kind == ScenarioKind::Modes);
    REQUIRE(sc.modes.modes.size() == 2);
    CHECK(sc.modes.modes[1] == ModeIndex{3, 0, 1});
    CHECK_FALSE(sc.modes.measured[0].has_value());
    CHECK(*sc.modes.measured[1] == 20.59e9);
    CHECK(sc.config_hash.size() == 16);
}

TEST_CASE("schema errors carry the config position") {
    const auto msg = error_of(R"(schema_version: 1
kind: modes
geometry:
  preset: reference
modes:
  list: [TE101]
  colour: red
)");
    CHECK(msg.find("config line 7") != std::string::npos);
    CHECK(msg.find("colour") != std::string::npos);

    const auto bad_number = error_of(R"(schema_version: 1
kind: losses
geometry:
  preset: reference
losses:
  mode: TE301
  base_linewidth: fast
  amplitude: 0.1
  electrodes: {name: copper, conductivity: 5.8e7}
)");
    CHECK(bad_number.find("config line 7") != std::string::npos);
}

TEST_CASE("missing blocks are named") {
    const auto msg = error_of("schema_version: 1\nkind: modes\nmodes:\n  list: [TE101]\n");
    CHECK(msg.find("missing required block 'geometry' for scenario kind 'modes'") != std::string::npos);
    CHECK(error_of("schema_version: 2\nkind: modes\n").find("schema") != std::string::npos);
    CHECK(error_of("schema_version: 1\nkind: everything\n").find("everything") != std::string::npos);
    CHECK_FALSE(error_of("kind: [modes\n").empty());
}

TEST_CASE("config hash ignores formatting, key order and output location") {
    const auto a = parse_scenario(kModes).config_hash;
    const auto b = parse_scenario(R"(# comment
kind: modes
modes:
  measured: {TE301: 2.059e10}
  list: [TE101, TE301]
geometry: {preset: reference}
schema_version: 1
output:
  dir: somewhere/else
)").config_hash;
    CHECK(a == b);
    std::string changed = kModes;
    changed.replace(changed.find("20.59e9"), 7, "20.60e9");
    CHECK(parse_scenario(changed).config_hash != a);
    Overrides grid;
    grid.grid = std::array<int, 3>{32, 16, 24};
    CHECK(parse_scenario(kModes, grid).config_hash != a);
}

TEST_CASE("seed is required where randomness is used") {
    const std::string spectrum = R"(schema_version: 1
kind: spectrum
geometry: {preset: reference}
spectrum:
  currents: [1.0, 1.5, 2.0]
)";
    CHECK(error_of(spectrum).find("seed") != std::string::npos);
    Overrides o;
    o.seed = 9;
    const auto sc = parse_scenario(spectrum, o);
    CHECK(*sc.seed == 9);
    const auto with_seed = parse_scenario("seed: 9\n" + spectrum);
    CHECK(with_seed.config_hash == sc.config_hash);
}

TEST_CASE("grid strings") {
    CHECK(parse_grid("64x32x48") == std::array<int, 3>{64, 32, 48});
    CHECK_THROWS_AS((void)parse_grid("64x32"), ValidationError);
    CHECK_THROWS_AS((void)parse_grid("64x32xz"), ValidationError);
    CHECK_THROWS_AS((void)parse_grid("-4x32x48"), ValidationError);
}

TEST_CASE("shipped configs load") {
    for (const char* name : {"modes", "fields", "losses", "tuning", "spectrum", "stark", "transmission"}) {
        CAPTURE(name);
        CHECK_NOTHROW((void)load_scenario(std::filesystem::path(BIASCAV_CONFIG_DIR) / (std::string(name) + ".yaml")));
    }
    CHECK_THROWS_AS((void)load_scenario("/nonexistent/config.yaml"), IoError);
}

TEST_CASE("modes scenario writes a table and a summary") {
    const auto dir = std::filesystem::temp_directory_path() / "biascav_scenario_test";
    std::filesystem::remove_all(dir);
    const auto res = run_scenario(parse_scenario(kModes), dir);
    CHECK(std::filesystem::exists(dir / "modes.csv"));
    CHECK(std::filesystem::exists(dir / "summary.json"));
    CHECK(res.files.back().filename() == "summary.json");
    CHECK(res.summary.find("\"config_hash\"") != std::string::npos);
    CHECK(res.summary.find(version()) != std::string::npos);
    std::filesystem::remove_all(dir);
}
