// fwmsim: run slow-light FWM amplifier scenarios from a JSON config.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fwm/errors.hpp"
#include "fwm/scenario.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_unexpected = 1;
constexpr int exit_config = 2;
constexpr int exit_numeric = 3;

int run(const std::string& config_path, std::optional<std::uint64_t> seed,
        std::optional<std::string> out_dir, unsigned threads)
{
    fwm::ScenarioConfig cfg = fwm::load_config(config_path);
    if (seed) {
        cfg.seed = *seed;
        cfg.detector.rng_seed = *seed;
    }
    if (out_dir) cfg.output = *out_dir;
    cfg.threads = threads;
    const auto out = fwm::run_scenario(cfg);
    fwm::write_outputs(cfg, out, cfg.output);
    std::cout << out.summary << "\nwrote " << out.files.size() + 1 << " files to " << cfg.output
              << '\n';
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"fwmsim: four-wave-mixing slow-light amplifier simulator"};
    app.set_version_flag("--version", std::string(fwm::artifact_version()));
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "run the scenario described by a JSON config");
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    unsigned threads = 0;
    run_cmd->add_option("config", config_path, "config file")->required();
    run_cmd->add_option("--seed", seed, "override the config seed");
    run_cmd->add_option("--out", out_dir, "override the output directory");
    run_cmd->add_option("--threads", threads, "worker threads for Monte Carlo (0 = all cores)");

    auto* list_cmd = app.add_subcommand("list", "describe the available scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (list_cmd->parsed()) {
            std::cout << fwm::list_scenarios();
            return exit_ok;
        }
        return run(config_path, seed, out_dir, threads);
    } catch (const fwm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const fwm::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_numeric;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return exit_unexpected;
    }
}
