#pragma once

#include <random>
#include <utility>

#include "risloc/channel.hpp"
#include "risloc/schedule.hpp"
#include "risloc/tensor.hpp"

namespace risloc {

/// Balanced random schedule for one pilot window (antipodal slot pairs).
ReflectionSchedule balanced_random_schedule(std::mt19937_64& rng, const SystemConfig& config,
                                            int window_length);

/// y_{n,t} = (cascade(Omega_t) + H_n^NLoS) x + w_{n,t} with circularly
/// symmetric complex Gaussian noise of per-entry power sigma^2.
MeasurementTensor simulate_reception(const ChannelRealization& channel,
                                     const ReflectionSchedule& schedule,
                                     const Eigen::VectorXcd& pilot, std::mt19937_64& rng,
                                     const SystemConfig& config);

struct SeparationResult {
    MeasurementTensor separated;       // Ybar, per-(n,i) time mean removed
    Eigen::MatrixXcd nlos_estimate;    // N x N_R slot averages
};

/// Removes the per-(n,i) slot mean. Requires the schedule to be balanced over
/// the tensor's slots; the slot mean is then exactly the non-RIS component.
SeparationResult separate_los(const MeasurementTensor& raw, const ReflectionSchedule& schedule);

}  // namespace risloc
