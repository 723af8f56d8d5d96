// Command-line harness for the RIS-assisted localization experiments.
//
//   ris-locate bench|crlb-map|locate|simulate --config <path> --seed <u64>
//              --trials <n> --out <dir>
//
// Exit code 0 on success; nonzero with a single machine-readable
// "error: <message>" line on stderr otherwise.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>

#include "risloc/errors.hpp"
#include "risloc/harness.hpp"

namespace fs = std::filesystem;
using namespace risloc;

namespace {

struct GlobalOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    int threads = 0;
};

SystemConfig load_config(const GlobalOptions& opts) {
    SystemConfig cfg;
    if (!opts.config_path.empty()) cfg = SystemConfig::load(opts.config_path);
    if (opts.seed) cfg.rng_seed = *opts.seed;
    cfg.validate();
    return cfg;
}

std::string out_file(const std::string& out, const std::string& name) {
    fs::path p(out);
    if (p.has_extension() && p.extension() == ".csv") return p.string();
    fs::create_directories(p);
    return (p / name).string();
}

void write_result(const MonteCarloResult& result, const std::string& out,
                  const std::string& base) {
    emit_csv(result.per_trial, out_file(out, base + ".csv"));
    emit_csv(result.summary, out_file(out, base + "_summary.csv"));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RIS-assisted near-field localization harness"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--config", global.config_path, "flat key=value config file");
    app.add_option("--seed", global.seed, "override rng_seed");
    app.add_option("--threads", global.threads, "worker threads (0 = all cores)");

    // bench: beamforming gain CDF and timing sweep
    auto* bench = app.add_subcommand("bench", "FPB/CPP gain and timing sweep");
    int bench_trials = 200;
    std::vector<int> m_list{32, 64, 128, 256};
    std::vector<int> b_list{1, 2};
    std::string bench_out = "out";
    bench->add_option("--trials", bench_trials, "UE draws per (M, b) point");
    bench->add_option("--m-list", m_list, "RIS sizes");
    bench->add_option("--b-list", b_list, "phase bit widths");
    bench->add_option("--out", bench_out, "output directory");

    // crlb-map
    auto* crlb_cmd = app.add_subcommand("crlb-map", "CRLB over the area of interest");
    std::string grid = "10x10";
    double crlb_snr = 6.0;
    std::string phases = "fpb";
    std::string crlb_out = "out";
    crlb_cmd->add_option("--grid", grid, "grid as NXxNY");
    crlb_cmd->add_option("--snr-db", crlb_snr, "SNR in dB");
    crlb_cmd->add_option("--phases", phases, "random|fpb")
        ->check(CLI::IsMember({"random", "fpb"}));
    crlb_cmd->add_option("--out", crlb_out, "output directory or .csv path");

    // locate
    auto* locate = app.add_subcommand("locate", "Monte Carlo localization trials");
    double locate_snr = 8.0;
    int locate_trials = 200;
    std::string locate_out = "out";
    locate->add_option("--snr-db", locate_snr, "SNR in dB");
    locate->add_option("--trials", locate_trials, "number of UE draws");
    locate->add_option("--out", locate_out, "output directory");

    // simulate: generic experiment runner
    auto* simulate = app.add_subcommand("simulate", "run a named experiment");
    std::string experiment = "loc-cdf";
    int sim_trials = 200;
    std::vector<double> sim_snrs;
    std::string sim_out = "out";
    simulate->add_option("--experiment", experiment, "experiment kind")
        ->check(CLI::IsMember({"beamform-cdf", "beamform-timing", "crlb-map", "rmse-vs-snr",
                               "loc-cdf"}));
    simulate->add_option("--trials", sim_trials, "trials");
    simulate->add_option("--snr-db", sim_snrs, "SNR list in dB");
    simulate->add_option("--out", sim_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        const SystemConfig cfg = load_config(global);
        if (bench->parsed()) {
            ExperimentSpec spec;
            spec.kind = ExperimentKind::BeamformCdf;
            spec.trials = bench_trials;
            spec.config = cfg;
            spec.m_list = m_list;
            spec.b_list = b_list;
            spec.threads = global.threads;
            write_result(monte_carlo(spec), bench_out, "bench");
        } else if (crlb_cmd->parsed()) {
            ExperimentSpec spec;
            spec.kind = ExperimentKind::CrlbMap;
            spec.config = cfg;
            spec.snr_list_db = {crlb_snr};
            spec.phases = phases == "fpb" ? SchedulePolicy::FpbDesigned
                                          : SchedulePolicy::RandomBalanced;
            spec.threads = global.threads;
            const auto x_pos = grid.find('x');
            if (x_pos == std::string::npos) throw InvalidInput("--grid must look like 10x10");
            spec.grid_nx = std::stoi(grid.substr(0, x_pos));
            spec.grid_ny = std::stoi(grid.substr(x_pos + 1));
            write_result(monte_carlo(spec), crlb_out, "crlb_map_" + phases);
        } else if (locate->parsed()) {
            ExperimentSpec spec;
            spec.kind = ExperimentKind::LocCdf;
            spec.trials = locate_trials;
            spec.snr_list_db = {locate_snr};
            spec.config = cfg;
            spec.threads = global.threads;
            write_result(monte_carlo(spec), locate_out, "locate");
        } else if (simulate->parsed()) {
            ExperimentSpec spec;
            spec.trials = sim_trials;
            spec.snr_list_db = sim_snrs;
            spec.config = cfg;
            spec.threads = global.threads;
            std::string base = experiment;
            if (experiment == "beamform-cdf") spec.kind = ExperimentKind::BeamformCdf;
            else if (experiment == "beamform-timing") spec.kind = ExperimentKind::BeamformTiming;
            else if (experiment == "crlb-map") spec.kind = ExperimentKind::CrlbMap;
            else if (experiment == "rmse-vs-snr") spec.kind = ExperimentKind::RmseVsSnr;
            else spec.kind = ExperimentKind::LocCdf;
            for (char& c : base)
                if (c == '-') c = '_';
            write_result(monte_carlo(spec), sim_out, base);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
