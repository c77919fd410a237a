// biascav: config-driven runner for the cavity, field, loss, tuning, spectrum and
// transmission scenarios. Exit codes: 0 ok, 1 I/O or other failure, 2 invalid input,
// 3 numerical failure.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "biascav/error.hpp"
#include "biascav/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct Options {
    std::string config;
    std::string out_dir;
    std::uint64_t seed = 0;
    std::string grid;
};

int run(biascav::ScenarioKind kind, const Options& opt, bool seed_given) {
    using namespace biascav;
    try {
        Overrides ov;
        if (seed_given) ov.seed = opt.seed;
        if (!opt.grid.empty()) ov.grid = parse_grid(opt.grid);
        const Scenario sc = load_scenario(opt.config, ov);
        if (sc.kind != kind) {
            throw ValidationError("config '" + opt.config + "' describes a '" + to_string(sc.kind) +
                                  "' scenario, not '" + to_string(kind) + "'");
        }
        std::filesystem::path out = opt.out_dir;
        if (out.empty()) out = sc.output_dir;
        if (out.empty()) out = std::filesystem::path("out") / to_string(kind);
        const auto result = run_scenario(sc, out);
        for (const auto& f : result.files) std::cout << f.string() << '\n';
        return kExitOk;
    } catch (const ConvergenceError& e) {
        std::cerr << "biascav: numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const ValidationError& e) {
        std::cerr << "biascav: invalid input: " << e.what() << '\n';
        return kExitValidation;
    } catch (const UnsupportedError& e) {
        std::cerr << "biascav: unsupported: " << e.what() << '\n';
        return kExitValidation;
    } catch (const IoError& e) {
        std::cerr << "biascav: I/O error: " << e.what() << '\n';
        return kExitOther;
    } catch (const std::exception& e) {
        std::cerr << "biascav: error: " << e.what() << '\n';
        return kExitOther;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"biascav: biased-cavity scenario runner"};
    app.set_version_flag("--version", biascav::version());
    app.require_subcommand(1);

    Options opt;
    struct Entry {
        biascav::ScenarioKind kind;
        const char* help;
        CLI::App* cmd = nullptr;
        CLI::Option* seed = nullptr;
    };
    std::vector<Entry> entries{
        {biascav::ScenarioKind::Modes, "ideal-box mode frequencies and geometry factors"},
        {biascav::ScenarioKind::Fields, "dc electric and magnetic field maps"},
        {biascav::ScenarioKind::Losses, "loss budget and conductivity inversion"},
        {biascav::ScenarioKind::Tuning, "rod-insertion frequency shifts"},
        {biascav::ScenarioKind::Spectrum, "cloud-averaged Rydberg spectra and fits"},
        {biascav::ScenarioKind::Transmission, "transmission traces and photon numbers"},
    };
    for (auto& e : entries) {
        e.cmd = app.add_subcommand(biascav::to_string(e.kind), e.help);
        e.cmd->add_option("-c,--config", opt.config, "YAML scenario file")->required()->check(CLI::ExistingFile);
        e.cmd->add_option("-o,--out-dir", opt.out_dir, "output directory (default: output.dir or out/<kind>)");
        e.seed = e.cmd->add_option("--seed", opt.seed, "RNG seed, overrides the config");
        e.cmd->add_option("--grid", opt.grid, "grid override, e.g. 64x32x48");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }
    for (const auto& e : entries) {
        if (e.cmd->parsed()) return run(e.kind, opt, e.seed->count() > 0);
    }
    return kExitValidation;
}
