#include "risloc/signaling.hpp"

#include "risloc/errors.hpp"

namespace risloc {

ReflectionSchedule balanced_random_schedule(std::mt19937_64& rng, const SystemConfig& config,
                                            int window_length) {
    return ReflectionSchedule::antipodal_random(rng, config, window_length);
}

MeasurementTensor simulate_reception(const ChannelRealization& channel,
                                     const ReflectionSchedule& schedule,
                                     const Eigen::VectorXcd& pilot, std::mt19937_64& rng,
                                     const SystemConfig& config) {
    if (schedule.num_elements() != config.num_ris_elements)
        throw DimensionMismatch("schedule rows must equal M");
    if (pilot.size() != config.num_tx_antennas)
        throw DimensionMismatch("pilot length must equal N_T");
    const int n_sub = config.num_subcarriers;
    const int t_slots = schedule.num_slots();
    const int nr = config.num_rx_antennas;
    MeasurementTensor y(n_sub, t_slots, nr, MeasurementTensor::Kind::Raw);

    std::vector<Eigen::VectorXcd> columns(t_slots);
    for (int t = 0; t < t_slots; ++t) columns[t] = schedule.column(t);

    const double noise_scale = std::sqrt(config.noise_power_watts / 2.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int n = 0; n < n_sub; ++n) {
        const Eigen::VectorXcd nlos_rx = channel.nlos(n) * pilot;
        for (int t = 0; t < t_slots; ++t) {
            const Eigen::VectorXcd rx = channel.apply(n, columns[t], pilot) + nlos_rx;
            for (int i = 0; i < nr; ++i) {
                const double wr = gauss(rng), wi = gauss(rng);
                y.at(n, t, i) = rx[i] + cd(noise_scale * wr, noise_scale * wi);
            }
        }
    }
    return y;
}

SeparationResult separate_los(const MeasurementTensor& raw, const ReflectionSchedule& schedule) {
    if (schedule.num_slots() != raw.num_slots)
        throw DimensionMismatch("schedule slots must match tensor slots");
    if (!schedule.is_balanced())
        throw UnbalancedSchedule("schedule is not balanced over the tensor window");

    const int n_sub = raw.num_subcarriers;
    const int t_slots = raw.num_slots;
    const int nr = raw.num_rx;
    SeparationResult out;
    out.separated = MeasurementTensor(n_sub, t_slots, nr, MeasurementTensor::Kind::Separated);
    out.nlos_estimate = Eigen::MatrixXcd::Zero(n_sub, nr);
    for (int n = 0; n < n_sub; ++n) {
        for (int i = 0; i < nr; ++i) {
            cd mean = 0;
            for (int t = 0; t < t_slots; ++t) mean += raw.at(n, t, i);
            mean /= static_cast<double>(t_slots);
            out.nlos_estimate(n, i) = mean;
            for (int t = 0; t < t_slots; ++t) out.separated.at(n, t, i) = raw.at(n, t, i) - mean;
        }
    }
    return out;
}

}  // namespace risloc
