#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "risloc/beamforming.hpp"
#include "risloc/crlb.hpp"
#include "risloc/localization.hpp"
#include "risloc/signaling.hpp"

namespace risloc {

/// Stream-splitting for independent per-trial rngs.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);
std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t index);

/// Runs fn(0..count-1) across up to `threads` workers. Results must be
/// written to index-addressed slots so the outcome is thread-count agnostic.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn, int threads = 0);

struct Table {
    using Cell = std::variant<double, std::string>;
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row);
};

/// UTF-8 CSV with a header row; floats at 9 significant digits; overwrites.
void emit_csv(const Table& table, const std::string& path);
Table parse_csv(const std::string& path);

enum class ExperimentKind { BeamformCdf, BeamformTiming, CrlbMap, RmseVsSnr, LocCdf };

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::LocCdf;
    int trials = 200;
    std::vector<double> snr_list_db;
    SystemConfig config;
    SchedulePolicy phases = SchedulePolicy::FpbDesigned;  // crlb-map only
    std::vector<int> m_list{32, 64, 128, 256};            // beamform sweeps
    std::vector<int> b_list{1, 2};
    int grid_nx = 10;
    int grid_ny = 10;
    int threads = 0;  // 0 = hardware concurrency

    void validate() const;
};

/// The five RMSE probe points: four corners and the center of the area.
std::vector<Vec2> probe_points(const SystemConfig& config);

struct StageTimings {
    double signaling_s = 0;
    double coarse_s = 0;
    double beamforming_s = 0;
    double fine_s = 0;
};

struct ProtocolTrace {
    ReflectionSchedule window1;
    ReflectionSchedule window2;
    CoarseResult coarse;
    BeamformerSolution beamformer;
    FineResult fine;
    StageTimings timings;
    Vec2 true_position = Vec2::Zero();

    double coarse_error() const { return (coarse.best() - true_position).norm(); }
    double fine_error() const { return (fine.final_estimate - true_position).norm(); }
};

/// One full protocol pass: random balanced window, coarse stage, FPB design
/// from the coarse estimate, designed window, fine stage on all T slots.
ProtocolTrace run_protocol(const Vec2& ue_position, const SystemConfig& config,
                           std::mt19937_64& rng);

struct MonteCarloResult {
    Table per_trial;
    Table summary;
};

MonteCarloResult monte_carlo(const ExperimentSpec& spec);

}  // namespace risloc
