#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "risloc/errors.hpp"
#include "risloc/localization.hpp"
#include "risloc/signaling.hpp"
#include "test_util.hpp"

using namespace risloc;

namespace {

struct Setup {
    SystemConfig cfg;
    ArrayGeometry geometry;
    Eigen::VectorXcd pilot;
    ObservationModel model;
    ReflectionSchedule schedule;
    MeasurementTensor separated;
    Vec2 p_true;
};

/// Noise-free full-T measurement pipeline at p for the given config.
Setup noise_free_setup(SystemConfig cfg, const Vec2& p, std::uint64_t seed) {
    cfg.noise_power_watts = 1e-30;
    std::mt19937_64 rng(seed);
    auto nlos = nlos_channel(rng, cfg, p);
    auto channel = ChannelRealization::make(build_geometry(cfg), p, std::move(nlos), cfg,
                                            ChannelRealization::Mode::PartitionedFarField);
    auto schedule = balanced_random_schedule(rng, cfg, cfg.num_slots);
    auto pilot = pilot_vector(cfg);
    auto raw = simulate_reception(channel, schedule, pilot, rng, cfg);
    auto sep = separate_los(raw, schedule);
    ArrayGeometry geometry = build_geometry(cfg);
    return Setup{cfg,
                 geometry,
                 pilot,
                 ObservationModel(geometry, pilot, cfg),
                 std::move(schedule),
                 std::move(sep.separated),
                 p};
}

}  // namespace

TEST_CASE("mle objective is machine-zero at the true position, noise free") {
    const Vec2 p(21, 17);
    const Setup s = noise_free_setup(testutil::small_config(), p, 3);
    const double at_true = mle_objective(s.model, p, s.separated, s.schedule);
    CHECK(at_true <= 1e-18);
    const double off = mle_objective(s.model, p + Vec2(1.0, 0.0), s.separated, s.schedule);
    CHECK(at_true < off);
    CHECK_THROWS_AS(
        mle_objective(s.model, s.geometry.segment_centers[0], s.separated, s.schedule),
        DegenerateGeometry);
}

TEST_CASE("noise raises the expected objective by N T N_R sigma^2 (1 - 1/T)") {
    SystemConfig cfg = testutil::small_config();
    cfg.num_subcarriers = 8;
    cfg.num_rx_antennas = 4;
    cfg.num_tx_antennas = 4;
    cfg.noise_power_watts = 0.2;
    const Vec2 p(20, 20);
    std::mt19937_64 rng(5);
    auto nlos = nlos_channel(rng, cfg, p);
    auto channel = ChannelRealization::make(build_geometry(cfg), p, std::move(nlos), cfg,
                                            ChannelRealization::Mode::PartitionedFarField);
    const auto schedule = balanced_random_schedule(rng, cfg, cfg.num_slots);
    const auto pilot = pilot_vector(cfg);
    const ObservationModel model(build_geometry(cfg), pilot, cfg);

    double acc = 0;
    const int draws = 400;
    for (int d = 0; d < draws; ++d) {
        const auto raw = simulate_reception(channel, schedule, pilot, rng, cfg);
        const auto sep = separate_los(raw, schedule);
        acc += model.objective(p, schedule, sep.separated);
    }
    const double expected = cfg.num_subcarriers * cfg.num_slots * cfg.num_rx_antennas *
                            cfg.noise_power_watts * (1.0 - 1.0 / cfg.num_slots);
    CHECK(acc / draws == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("coarse ToA recovers on-grid delays exactly") {
    SystemConfig cfg = testutil::small_config();
    const int bins = cfg.oversampling_factor * cfg.num_subcarriers;
    const int k_true = 37;
    const double tau = static_cast<double>(k_true) / (bins * cfg.subcarrier_spacing_hz);

    MeasurementTensor sep(cfg.num_subcarriers, 4, 2, MeasurementTensor::Kind::Separated);
    for (int n = 0; n < cfg.num_subcarriers; ++n)
        for (int t = 0; t < 4; ++t)
            for (int i = 0; i < 2; ++i)
                sep.at(n, t, i) = unit_phasor(-2.0 * kPi * n * cfg.subcarrier_spacing_hz * tau) *
                                  unit_phasor(0.3 * t - 0.2 * i);
    CHECK(coarse_toa(sep, cfg, 4) == doctest::Approx(tau).epsilon(1e-12));
    CHECK_THROWS_AS(coarse_toa(sep, cfg, 0), EmptyWindow);
    CHECK_THROWS_AS(coarse_toa(sep, cfg, 5), EmptyWindow);
}

TEST_CASE("coarse ToA stays within half a grid bin off-grid") {
    SystemConfig cfg = testutil::small_config();
    const int bins = cfg.oversampling_factor * cfg.num_subcarriers;
    const double bin = 1.0 / (bins * cfg.subcarrier_spacing_hz);
    const double tau = 37.37 * bin;
    MeasurementTensor sep(cfg.num_subcarriers, 2, 1, MeasurementTensor::Kind::Separated);
    for (int n = 0; n < cfg.num_subcarriers; ++n)
        for (int t = 0; t < 2; ++t)
            sep.at(n, t, 0) = unit_phasor(-2.0 * kPi * n * cfg.subcarrier_spacing_hz * tau);
    CHECK(std::abs(coarse_toa(sep, cfg, 2) - tau) <= 0.5 * bin + 1e-15);
}

TEST_CASE("two equal-power delays produce one of the two peaks") {
    SystemConfig cfg = testutil::small_config();
    const int bins = cfg.oversampling_factor * cfg.num_subcarriers;
    const double bin = 1.0 / (bins * cfg.subcarrier_spacing_hz);
    const double tau1 = 20.0 * bin, tau2 = 90.0 * bin;
    MeasurementTensor sep(cfg.num_subcarriers, 2, 1, MeasurementTensor::Kind::Separated);
    for (int n = 0; n < cfg.num_subcarriers; ++n)
        for (int t = 0; t < 2; ++t)
            sep.at(n, t, 0) =
                unit_phasor(-2.0 * kPi * n * cfg.subcarrier_spacing_hz * tau1) +
                unit_phasor(-2.0 * kPi * n * cfg.subcarrier_spacing_hz * tau2 + 0.7 * t);
    const double tau_hat = coarse_toa(sep, cfg, 2);
    const bool near1 = std::abs(tau_hat - tau1) <= bin;
    const bool near2 = std::abs(tau_hat - tau2) <= bin;
    CHECK((near1 || near2));
}

TEST_CASE("coarse AoA returns the UE-observer cosine") {
    SystemConfig cfg = testutil::small_config();
    const int nr = cfg.num_rx_antennas;

    SUBCASE("broadside") {
        MeasurementTensor sep(4, 2, nr, MeasurementTensor::Kind::Separated);
        for (int n = 0; n < 4; ++n)
            for (int t = 0; t < 2; ++t)
                for (int i = 0; i < nr; ++i) sep.at(n, t, i) = unit_phasor(0.2 * n);
        CHECK(coarse_aoa(sep, cfg, 2) == doctest::Approx(0.0));
    }

    SUBCASE("on-grid propagation cosine is negated") {
        const int bins = cfg.oversampling_factor * nr;
        const double prop = 2.0 * 5 / bins;  // aod_ris on the grid
        MeasurementTensor sep(4, 2, nr, MeasurementTensor::Kind::Separated);
        for (int n = 0; n < 4; ++n)
            for (int t = 0; t < 2; ++t)
                for (int i = 0; i < nr; ++i)
                    sep.at(n, t, i) = unit_phasor(-kPi * i * prop + 0.1 * n);
        CHECK(coarse_aoa(sep, cfg, 2) == doctest::Approx(-prop).epsilon(1e-12));
    }

    SUBCASE("domain") {
        std::mt19937_64 rng(2);
        MeasurementTensor sep(4, 2, nr, MeasurementTensor::Kind::Separated);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (auto& v : sep.data) v = cd(u(rng), u(rng));
        const double f = coarse_aoa(sep, cfg, 2);
        CHECK(f >= -1.0);
        CHECK(f < 1.0);
    }
}

TEST_CASE("coarse candidates: trivial geometry cases") {
    SystemConfig cfg = testutil::small_config();
    const ArrayGeometry g = build_geometry(cfg);
    const Vec2 bs = g.bs_element_positions.front();

    // f = 0 puts the candidate directly below the segment center
    const double d_bs = (g.segment_centers[0] - bs).norm();
    const double range = 7.0;
    const auto below =
        coarse_candidates((d_bs + range) / kSpeedOfLight, 0.0, g, cfg);
    CHECK(below[0].position.x() == doctest::Approx(g.segment_centers[0].x()));
    CHECK(below[0].position.y() == doctest::Approx(g.segment_centers[0].y() - range));
    CHECK(below[0].geometrically_valid);

    // c tau equal to the BS-segment distance collapses onto the center
    const auto at_center = coarse_candidates(d_bs / kSpeedOfLight, 0.3, g, cfg);
    CHECK((at_center[0].position - g.segment_centers[0]).norm() < 1e-9);
    CHECK_FALSE(at_center[0].geometrically_valid);
}

TEST_CASE("fine refinement is stationary at the true position") {
    const Vec2 p(19, 23);
    const Setup s = noise_free_setup(testutil::small_config(), p, 11);
    const auto r = fine_refine(p, s.separated, s.schedule, s.model);
    CHECK(r.objective <= 1e-18);
    CHECK(r.iterations <= 2);
    CHECK(r.converged);
    CHECK((r.position - p).norm() < 1e-9);
}

TEST_CASE("fine refinement never increases the objective") {
    const Vec2 p(24, 14);
    const Setup s = noise_free_setup(testutil::small_config(), p, 13);
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const Vec2 start = testutil::random_ue(rng, s.cfg);
        const double f0 = s.model.objective(start, s.schedule, s.separated);
        const auto r = fine_refine(start, s.separated, s.schedule, s.model);
        CHECK(r.objective <= f0 + 1e-12 * f0);
        CHECK(r.iterations <= 50);
    }
    CHECK_THROWS_AS(
        fine_refine(Vec2(std::nan(""), 0), s.separated, s.schedule, s.model),
        NonFiniteObjective);
}

TEST_CASE("localize picks the minimum-objective refinement") {
    const Vec2 p(22, 21);
    Setup s = noise_free_setup(testutil::small_config(), p, 19);
    const auto result = localize(s.separated, s.schedule, s.model);
    REQUIRE(static_cast<int>(result.fine.refined.size()) == s.cfg.num_partitions);
    const double best = result.fine.objective_values[result.fine.best_index];
    for (double v : result.fine.objective_values) CHECK(best <= v);
    CHECK((result.fine.final_estimate - result.fine.refined[result.fine.best_index]).norm() ==
          0.0);
    CHECK(result.coarse.toa_hat >= 0.0);
    CHECK(result.coarse.toa_hat < 1.0 / s.cfg.subcarrier_spacing_hz);
    CHECK(result.coarse.aoa_hat >= -1.0);
    CHECK(result.coarse.aoa_hat < 1.0);
}

TEST_CASE("noise-free single-segment pipeline is exact with a fine ToA grid") {
    // One segment: the coarse correlation peak sits on the true delay, so a
    // grid finer than half a carrier fringe puts the start inside the global
    // basin and the refinement polishes to numerical precision.
    SystemConfig cfg = testutil::small_config();
    cfg.num_ris_elements = 32;
    cfg.num_partitions = 1;
    cfg.oversampling_factor = 32768;  // ToA bin ~2.4 mm, half-bin within lambda/4
    const Vec2 p(20.4, 17.3);
    const Setup s = noise_free_setup(cfg, p, 23);

    const auto result = localize(s.separated, s.schedule, s.model);
    const double coarse_err = (result.coarse.best() - p).norm();
    const double bin_m = kSpeedOfLight / (static_cast<double>(cfg.oversampling_factor) *
                                          cfg.num_subcarriers * cfg.subcarrier_spacing_hz);
    const double arc =
        (p - s.geometry.segment_centers[0]).norm() * 2.0 /
        (static_cast<double>(cfg.oversampling_factor) * cfg.num_rx_antennas);
    CHECK(coarse_err <= bin_m + arc);

    const double fine_err = (result.fine.final_estimate - p).norm();
    CHECK(fine_err <= 1e-6);
}

TEST_CASE("candidate coverage bound holds at the default oversampling") {
    SystemConfig cfg = testutil::small_config();
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 5; ++trial) {
        const Vec2 p = testutil::random_ue(rng, cfg);
        const Setup s = noise_free_setup(cfg, p, 31 + trial);
        const auto result = localize(s.separated, s.schedule, s.model);
        double best_err = 1e300;
        for (const auto& c : result.coarse.candidates)
            best_err = std::min(best_err, (c - p).norm());
        const double bin_m = kSpeedOfLight / (static_cast<double>(cfg.oversampling_factor) *
                                              cfg.num_subcarriers * cfg.subcarrier_spacing_hz);
        const double arc = (p - cfg.ris_center).norm() * 2.0 /
                           (static_cast<double>(cfg.oversampling_factor) * cfg.num_rx_antennas);
        CHECK(best_err <= bin_m + arc);
    }
}
