#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dynprice/config.hpp"
#include "dynprice/experiments.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dynamic pricing for a single-server queue with balking customers"};
    app.set_version_flag("--version", dynprice::kVersion);
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<unsigned> threads;
    std::vector<std::string> sets;
    app.add_option("--config", config_path, "Experiment config file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Experiment seed");
    app.add_option("--out", out, "Output directory");
    app.add_option("--threads", threads, "Worker threads");
    app.add_option("--set", sets, "Override a config entry, section.key=value")->allow_extra_args(false);

    const std::vector<std::pair<const char*, const char*>> commands{
        {"psi-grid", "Revenue curve on a price grid and its maximiser"},
        {"sgd", "Projected stochastic gradient ascent runs"},
        {"coupling", "Coupled queues from two initial workloads"},
        {"grad-check", "Closed-form derivatives against finite differences"},
        {"bias-var", "Bias and second moment of the gradient estimator by window size"},
        {"regret", "Regret of SGD runs against the grid oracle"},
        {"service-study", "Revenue curves across service-time laws"}};
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        std::vector<std::string> overrides = sets;
        overrides.push_back("experiment.kind=" + app.get_subcommands().front()->get_name());
        if (seed) overrides.push_back("run.seed=" + std::to_string(*seed));
        if (out) overrides.push_back("run.output=" + *out);
        if (threads) overrides.push_back("run.threads=" + std::to_string(*threads));

        const dynprice::ExperimentConfig config = config_path.empty()
                                                      ? dynprice::parse_config(std::string{}, overrides)
                                                      : dynprice::load_config(config_path, overrides);
        const dynprice::RunSummary summary = dynprice::run_experiment(config);
        for (const auto& f : summary.files) std::cout << "wrote " << f.string() << '\n';
        for (const auto& [k, v] : summary.results) std::cout << k << " = " << v << '\n';
        return 0;
    } catch (const dynprice::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const dynprice::IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}
