#include "risloc/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "risloc/errors.hpp"

namespace risloc {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t state = seed ^ (0xD1B54A32D192ED03ull * (index + 1));
    splitmix64(state);
    return splitmix64(state);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t index) {
    return std::mt19937_64(derive_seed(seed, index));
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn, int threads) {
    int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min<int>(workers, static_cast<int>(count)));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

void Table::add_row(std::vector<Cell> row) {
    if (row.size() != header.size()) throw DimensionMismatch("row width does not match header");
    rows.push_back(std::move(row));
}

namespace {

std::string format_cell(const Table::Cell& cell) {
    if (std::holds_alternative<double>(cell)) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.9g", std::get<double>(cell));
        return buf;
    }
    std::string s = std::get<std::string>(cell);
    for (char& ch : s)
        if (ch == ',' || ch == '\n' || ch == '\r') ch = ' ';
    return s;
}

}  // namespace

void emit_csv(const Table& table, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c) out << ',';
        out << table.header[c];
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            out << format_cell(row[c]);
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

Table parse_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open CSV: " + path);
    Table table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.push_back("");
        if (!have_header) {
            table.header = cells;
            have_header = true;
            continue;
        }
        std::vector<Table::Cell> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            char* end = nullptr;
            const double v = std::strtod(c.c_str(), &end);
            if (!c.empty() && end == c.c_str() + c.size())
                row.emplace_back(v);
            else
                row.emplace_back(c);
        }
        table.add_row(std::move(row));
    }
    if (!have_header) throw IoError("empty CSV: " + path);
    return table;
}

void ExperimentSpec::validate() const {
    if (trials < 1) throw InvalidInput("trials must be >= 1");
    for (double s : snr_list_db)
        if (!std::isfinite(s)) throw InvalidInput("snr values must be finite");
    config.validate();
}

std::vector<Vec2> probe_points(const SystemConfig& config) {
    const Rect& a = config.area_of_interest;
    return {Vec2(a.xmin, a.ymin), Vec2(a.xmin, a.ymax), Vec2(a.xmax, a.ymax),
            Vec2(a.xmax, a.ymin), Vec2(0.5 * (a.xmin + a.xmax), 0.5 * (a.ymin + a.ymax))};
}

ProtocolTrace run_protocol(const Vec2& ue_position, const SystemConfig& config,
                           std::mt19937_64& rng) {
    config.validate();
    const ArrayGeometry geometry = build_geometry(config);
    const Eigen::VectorXcd pilot = pilot_vector(config);
    const int half = config.num_slots / 2;
    StageTimings timings;

    // Balanced signaling window.
    auto t0 = std::chrono::steady_clock::now();
    NlosRealization nlos = nlos_channel(rng, config, ue_position);
    const ChannelRealization channel = ChannelRealization::make(
        geometry, ue_position, std::move(nlos), config, ChannelRealization::Mode::PartitionedFarField);
    ReflectionSchedule window1 = balanced_random_schedule(rng, config, half);
    const MeasurementTensor raw1 = simulate_reception(channel, window1, pilot, rng, config);
    const SeparationResult sep1 = separate_los(raw1, window1);
    timings.signaling_s = seconds_since(t0);

    // Coarse stage on the first window.
    t0 = std::chrono::steady_clock::now();
    const ObservationModel model(geometry, pilot, config);
    CoarseResult coarse;
    coarse.toa_hat = coarse_toa(sep1.separated, config, half);
    coarse.aoa_hat = coarse_aoa(sep1.separated, config, half);
    const auto raw_candidates = coarse_candidates(coarse.toa_hat, coarse.aoa_hat, geometry, config);
    const int num_seg = static_cast<int>(raw_candidates.size());
    coarse.candidates.resize(num_seg);
    coarse.geometrically_valid.resize(num_seg);
    coarse.objective_values.resize(num_seg);
    std::vector<Vec2> starts(num_seg);
    double best_obj = std::numeric_limits<double>::infinity();
    for (int l = 0; l < num_seg; ++l) {
        coarse.candidates[l] = raw_candidates[l].position;
        coarse.geometrically_valid[l] = raw_candidates[l].geometrically_valid;
        Vec2 start = raw_candidates[l].position;
        if (!raw_candidates[l].geometrically_valid) {
            Vec2 dir = start - geometry.segment_centers[l];
            const double norm = dir.norm();
            start = geometry.segment_centers[l] +
                    (norm < 1e-9 ? Vec2(0.0, -1e-3) : Vec2((1e-3 / norm) * dir));
        }
        starts[l] = start;
        coarse.objective_values[l] = model.objective(start, window1, sep1.separated);
        if (coarse.objective_values[l] < best_obj) {
            best_obj = coarse.objective_values[l];
            coarse.best_index = l;
        }
    }
    timings.coarse_s = seconds_since(t0);

    // Passive beamforming from the coarse estimate.
    t0 = std::chrono::steady_clock::now();
    const PathGeometry path_ce = path_geometry(geometry, starts[coarse.best_index], config);
    BeamformerSolution design = fpb(path_ce, config);
    ReflectionSchedule window2 = extend_balanced(design, config);
    timings.beamforming_s = seconds_since(t0);

    // Designed window and fine stage on all T slots.
    t0 = std::chrono::steady_clock::now();
    const MeasurementTensor raw2 = simulate_reception(channel, window2, pilot, rng, config);
    const ReflectionSchedule schedule = window1.concat(window2);
    const MeasurementTensor raw = concat_slots(raw1, raw2);
    const SeparationResult sep = separate_los(raw, schedule);

    FineResult fine;
    fine.refined.resize(num_seg);
    fine.objective_values.resize(num_seg);
    fine.iterations_used.resize(num_seg);
    fine.converged.resize(num_seg);
    double best_fine = std::numeric_limits<double>::infinity();
    for (int l = 0; l < num_seg; ++l) {
        const RefineOutcome r = fine_refine(starts[l], sep.separated, schedule, model);
        fine.refined[l] = r.position;
        fine.objective_values[l] = r.objective;
        fine.iterations_used[l] = r.iterations;
        fine.converged[l] = r.converged;
        if (r.objective < best_fine) {
            best_fine = r.objective;
            fine.best_index = l;
            fine.final_estimate = r.position;
        }
    }
    timings.fine_s = seconds_since(t0);

    return ProtocolTrace{std::move(window1), std::move(window2), std::move(coarse),
                         std::move(design),  std::move(fine),    timings,
                         ue_position};
}

namespace {

Vec2 sample_area(const Rect& area, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ux(area.xmin, area.xmax);
    std::uniform_real_distribution<double> uy(area.ymin, area.ymax);
    const double x = ux(rng);
    const double y = uy(rng);
    return Vec2(x, y);
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) return std::nan("");
    std::sort(values.begin(), values.end());
    const double pos = q * (values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - lo;
    return values[lo] * (1 - frac) + values[hi] * frac;
}

double rms(const std::vector<double>& values) {
    if (values.empty()) return std::nan("");
    double acc = 0;
    for (double v : values) acc += v * v;
    return std::sqrt(acc / values.size());
}

struct TrialRecord {
    double coarse_err = std::nan("");
    double fine_err = std::nan("");
    double objective = std::nan("");
    double converged = 0;
    Vec2 true_position = Vec2::Zero();
    std::string error;
};

MonteCarloResult run_loc_cdf(const ExperimentSpec& spec) {
    SystemConfig cfg = spec.config;
    if (!spec.snr_list_db.empty()) cfg.set_snr_db(spec.snr_list_db.front());
    std::vector<TrialRecord> records(spec.trials);
    parallel_for(
        spec.trials,
        [&](std::size_t trial) {
            TrialRecord& rec = records[trial];
            try {
                std::mt19937_64 rng = make_engine(cfg.rng_seed, trial);
                const Vec2 p = sample_area(cfg.area_of_interest, rng);
                rec.true_position = p;
                const ProtocolTrace trace = run_protocol(p, cfg, rng);
                rec.coarse_err = trace.coarse_error();
                rec.fine_err = trace.fine_error();
                rec.objective = trace.fine.objective_values[trace.fine.best_index];
                rec.converged = trace.fine.converged[trace.fine.best_index] ? 1.0 : 0.0;
            } catch (const std::exception& e) {
                rec.error = e.what();
            }
        },
        spec.threads);

    MonteCarloResult out;
    out.per_trial.header = {"trial",       "true_x",    "true_y",    "coarse_err_m",
                            "fine_err_m",  "objective", "converged", "error"};
    std::vector<double> coarse_errs, fine_errs;
    for (int trial = 0; trial < spec.trials; ++trial) {
        const TrialRecord& rec = records[trial];
        out.per_trial.add_row({static_cast<double>(trial), rec.true_position.x(),
                               rec.true_position.y(), rec.coarse_err, rec.fine_err, rec.objective,
                               rec.converged, rec.error});
        if (rec.error.empty()) {
            coarse_errs.push_back(rec.coarse_err);
            fine_errs.push_back(rec.fine_err);
        }
    }
    out.summary.header = {"metric", "value"};
    auto frac_below = [&](double threshold) {
        if (fine_errs.empty()) return std::nan("");
        double c = 0;
        for (double v : fine_errs) c += v < threshold ? 1.0 : 0.0;
        return c / fine_errs.size();
    };
    out.summary.add_row({std::string("trials_ok"), static_cast<double>(fine_errs.size())});
    out.summary.add_row({std::string("rmse_coarse_m"), rms(coarse_errs)});
    out.summary.add_row({std::string("rmse_fine_m"), rms(fine_errs)});
    out.summary.add_row({std::string("median_coarse_m"), quantile(coarse_errs, 0.5)});
    out.summary.add_row({std::string("median_fine_m"), quantile(fine_errs, 0.5)});
    out.summary.add_row({std::string("p85_fine_m"), quantile(fine_errs, 0.85)});
    out.summary.add_row({std::string("p90_fine_m"), quantile(fine_errs, 0.9)});
    out.summary.add_row({std::string("frac_fine_below_2cm"), frac_below(0.02)});
    out.summary.add_row({std::string("frac_fine_below_2mm"), frac_below(0.002)});
    return out;
}

MonteCarloResult run_rmse_vs_snr(const ExperimentSpec& spec) {
    std::vector<double> snrs = spec.snr_list_db;
    if (snrs.empty())
        for (double s = -10; s <= 30; s += 2) snrs.push_back(s);
    const std::vector<Vec2> points = probe_points(spec.config);

    MonteCarloResult out;
    out.per_trial.header = {"snr_db", "point_x", "point_y", "trial", "error_m", "error"};
    out.summary.header = {"snr_db", "point_x", "point_y", "trials_ok",
                          "rmse_m", "crlb_m",  "ratio"};

    for (double snr : snrs) {
        SystemConfig cfg = spec.config;
        cfg.set_snr_db(snr);
        const ArrayGeometry geometry = build_geometry(cfg);
        const ObservationModel model(geometry, pilot_vector(cfg), cfg);
        for (std::size_t pi = 0; pi < points.size(); ++pi) {
            const Vec2 p = points[pi];
            std::vector<TrialRecord> records(spec.trials);
            parallel_for(
                spec.trials,
                [&](std::size_t trial) {
                    TrialRecord& rec = records[trial];
                    try {
                        std::mt19937_64 rng =
                            make_engine(cfg.rng_seed, (pi * 1000003ull) + trial);
                        const ProtocolTrace trace = run_protocol(p, cfg, rng);
                        rec.fine_err = trace.fine_error();
                    } catch (const std::exception& e) {
                        rec.error = e.what();
                    }
                },
                spec.threads);

            std::vector<double> errs;
            for (int t = 0; t < spec.trials; ++t) {
                out.per_trial.add_row({snr, p.x(), p.y(), static_cast<double>(t),
                                       records[t].fine_err, records[t].error});
                if (records[t].error.empty()) errs.push_back(records[t].fine_err);
            }

            // Reference bound: a representative random window followed by the
            // rotation sequence designed at the true point.
            double bound = std::nan("");
            try {
                std::mt19937_64 rng = make_engine(cfg.rng_seed, 0xC0FFEEull + pi);
                ReflectionSchedule w1 = balanced_random_schedule(rng, cfg, cfg.num_slots / 2);
                const BeamformerSolution design = fpb(path_geometry(geometry, p, cfg), cfg);
                const ReflectionSchedule schedule = w1.concat(extend_balanced(design, cfg));
                bound = crlb(model, p, schedule);
            } catch (const std::exception&) {
            }
            const double rmse = rms(errs);
            out.summary.add_row({snr, p.x(), p.y(), static_cast<double>(errs.size()), rmse, bound,
                                 rmse / bound});
        }
    }
    return out;
}

MonteCarloResult run_beamform(const ExperimentSpec& spec) {
    MonteCarloResult out;
    out.per_trial.header = {"method", "M", "L", "b", "trial", "gain_db", "wallclock_us"};
    out.summary.header = {"M", "L", "b", "metric", "value"};

    for (int b : spec.b_list) {
        for (int m : spec.m_list) {
            SystemConfig cfg = spec.config;
            cfg.num_ris_elements = m;
            cfg.phase_bits = b;
            // Keep the configured partition count across the sweep when it
            // stays feasible (the reference experiments hold L fixed);
            // otherwise fall back to the smallest valid partitioning.
            const int lower = min_partitions(m, cfg.wavelength(), cfg.min_distance_hint);
            if (m % cfg.num_partitions != 0 || cfg.num_partitions < lower)
                cfg.num_partitions = lower;
            cfg.validate();
            const ArrayGeometry geometry = build_geometry(cfg);

            std::vector<double> fpb_gain(spec.trials), cpp_gain(spec.trials);
            std::vector<double> fpb_us(spec.trials), cpp_us(spec.trials);
            parallel_for(
                spec.trials,
                [&](std::size_t trial) {
                    std::mt19937_64 rng = make_engine(cfg.rng_seed, trial);
                    const Vec2 p = sample_area(cfg.area_of_interest, rng);
                    const PathGeometry path = path_geometry(geometry, p, cfg);
                    // Repeat tiny solves until the measurement is well above
                    // the clock resolution.
                    auto time_solve = [&](auto&& solve, double& gain_out) {
                        int reps = 1;
                        for (;;) {
                            const auto t0 = std::chrono::steady_clock::now();
                            double g = 0;
                            for (int r = 0; r < reps; ++r) g = solve();
                            const double elapsed = seconds_since(t0);
                            if (elapsed >= 50e-6 || reps >= 1024) {
                                gain_out = g;
                                return elapsed * 1e6 / reps;
                            }
                            reps *= 4;
                        }
                    };
                    fpb_us[trial] = time_solve(
                        [&] { return fpb(path, cfg).total_gain; }, fpb_gain[trial]);
                    cpp_us[trial] = time_solve(
                        [&] { return cpp_solution(path, cfg).total_gain; }, cpp_gain[trial]);
                },
                spec.threads);

            for (int t = 0; t < spec.trials; ++t) {
                out.per_trial.add_row({std::string("fpb"), static_cast<double>(m),
                                       static_cast<double>(cfg.num_partitions),
                                       static_cast<double>(b), static_cast<double>(t),
                                       linear_to_db(fpb_gain[t]), fpb_us[t]});
                out.per_trial.add_row({std::string("cpp"), static_cast<double>(m),
                                       static_cast<double>(cfg.num_partitions),
                                       static_cast<double>(b), static_cast<double>(t),
                                       linear_to_db(cpp_gain[t]), cpp_us[t]});
            }
            // Horizontal CDF gap at the 80% level: difference of the two
            // 80th-percentile gain quantiles.
            std::vector<double> fpb_db(spec.trials), cpp_db(spec.trials);
            for (int t = 0; t < spec.trials; ++t) {
                fpb_db[t] = linear_to_db(fpb_gain[t]);
                cpp_db[t] = linear_to_db(cpp_gain[t]);
            }
            out.summary.add_row({static_cast<double>(m), static_cast<double>(cfg.num_partitions),
                                 static_cast<double>(b), std::string("p80_gap_db"),
                                 quantile(fpb_db, 0.8) - quantile(cpp_db, 0.8)});
            out.summary.add_row({static_cast<double>(m), static_cast<double>(cfg.num_partitions),
                                 static_cast<double>(b), std::string("median_fpb_us"),
                                 quantile(fpb_us, 0.5)});
            out.summary.add_row({static_cast<double>(m), static_cast<double>(cfg.num_partitions),
                                 static_cast<double>(b), std::string("median_cpp_us"),
                                 quantile(cpp_us, 0.5)});
        }
    }
    return out;
}

MonteCarloResult run_crlb_map(const ExperimentSpec& spec) {
    const SystemConfig& cfg = spec.config;
    if (!spec.snr_list_db.empty()) {
        SystemConfig adjusted = cfg;
        adjusted.set_snr_db(spec.snr_list_db.front());
        ExperimentSpec inner = spec;
        inner.config = adjusted;
        inner.snr_list_db.clear();
        return run_crlb_map(inner);
    }
    const ArrayGeometry geometry = build_geometry(cfg);
    const ObservationModel model(geometry, pilot_vector(cfg), cfg);
    std::mt19937_64 rng = make_engine(cfg.rng_seed, 0x5EEDull);
    const auto reports = crlb_map(model, spec.grid_nx, spec.grid_ny, spec.phases, rng);

    MonteCarloResult out;
    out.per_trial.header = {"x_m", "y_m", "crlb_m", "fim_11", "fim_12", "fim_22"};
    std::vector<double> crlbs;
    for (const auto& r : reports) {
        out.per_trial.add_row({r.position.x(), r.position.y(), r.crlb_m, r.fim(0, 0), r.fim(0, 1),
                               r.fim(1, 1)});
        crlbs.push_back(r.crlb_m);
    }
    out.summary.header = {"metric", "value"};
    out.summary.add_row({std::string("median_crlb_m"), quantile(crlbs, 0.5)});
    out.summary.add_row({std::string("max_crlb_m"), quantile(crlbs, 1.0)});
    return out;
}

}  // namespace

MonteCarloResult monte_carlo(const ExperimentSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case ExperimentKind::LocCdf:
            return run_loc_cdf(spec);
        case ExperimentKind::RmseVsSnr:
            return run_rmse_vs_snr(spec);
        case ExperimentKind::BeamformCdf:
        case ExperimentKind::BeamformTiming:
            return run_beamform(spec);
        case ExperimentKind::CrlbMap:
            return run_crlb_map(spec);
    }
    throw InvalidInput("unknown experiment kind");
}

}  // namespace risloc
