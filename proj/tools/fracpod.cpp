#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "fracpod/error.hpp"
#include "fracpod/experiment.hpp"

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::size_t> pod_rank;
    std::optional<double> noise;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--seed", o.seed, "RNG seed for the measurement noise");
    cmd->add_option("--out-dir", o.out_dir, "output directory");
    cmd->add_option("--pod-rank", o.pod_rank, "number of POD basis vectors")->check(CLI::PositiveNumber);
    cmd->add_option("--noise", o.noise, "noise standard deviation sigma")->check(CLI::NonNegativeNumber);
}

fracpod::ExperimentConfig load(const std::string& path, const Overrides& o) {
    fracpod::ExperimentConfig cfg = fracpod::load_config(path);
    if (o.seed) cfg.recon.seed = *o.seed;
    if (o.out_dir) cfg.out_dir = *o.out_dir;
    if (o.pod_rank) cfg.recon.pod_rank = *o.pod_rank;
    if (o.noise) cfg.recon.sigma = *o.noise;
    cfg.recon.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fractional diffusion-wave POD solver and backward reconstruction"};
    app.require_subcommand(1);

    std::string config;
    Overrides run_o;
    Overrides bench_o;
    int repeats = 0;
    std::size_t rank_override = 0;

    CLI::App* run = app.add_subcommand("run", "run an experiment and write CSV artifacts");
    run->add_option("config", config, "experiment config file")->required();
    add_overrides(run, run_o);

    CLI::App* bench = app.add_subcommand("bench", "time full-order vs reduced-order solves");
    bench->add_option("config", config, "experiment config file")->required();
    bench->add_option("--repeats", repeats, "repetitions (median is reported)");
    bench->add_option("--rank", rank_override, "replace the POD basis by the first identity columns");
    add_overrides(bench, bench_o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (run->parsed()) {
            const auto cfg = load(config, run_o);
            const auto sum = fracpod::run_experiment(cfg);
            std::cout << "wrote " << sum.csv_files.size() << " CSV files to " << sum.out_dir.string()
                      << '\n';
            if (cfg.id == fracpod::ExperimentId::Ex1) {
                std::cout << "max|U_FEM - U_POD| = " << sum.max_abs_fem_pod
                          << "  (rank " << sum.effective_rank << ")\n";
            } else {
                std::cout << "relative L2 error of a1 = " << sum.relative_error
                          << "  lambda = " << sum.lambda << '\n';
            }
        } else {
            auto cfg = load(config, bench_o);
            const int n = repeats > 0 ? repeats : cfg.bench_repeats;
            const auto report = fracpod::bench(cfg, n, rank_override);
            const std::string text = fracpod::format_bench(report);
            std::cout << text;
            std::filesystem::create_directories(cfg.out_dir);
            std::ofstream(cfg.out_dir / "bench.txt") << text;
        }
    } catch (const fracpod::Error& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
