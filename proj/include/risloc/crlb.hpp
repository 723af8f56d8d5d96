#pragma once

#include <random>
#include <string>
#include <vector>

#include "risloc/model.hpp"

namespace risloc {

enum class JacobianMode { Analytic, FiniteDifference };

/// Central-difference step for position derivatives. Much smaller than the
/// naive 1e-6*||p||: the carrier-phase curvature (2 pi f_c / c)^2 h^2 / 6
/// must stay below 1e-5 while the subtraction noise floor stays negligible.
double fd_step(const Vec2& p);

ObservationModel::Jacobian observation_jacobian(const ObservationModel& model, const Vec2& p,
                                                const ReflectionSchedule& schedule,
                                                JacobianMode mode);

/// Fisher information of the position under the balanced-schedule form
/// [I]_{jk} = (2/sigma^2) sum Re{conj(dY/dp_j) dY/dp_k}. Rejects unbalanced
/// schedules, for which this simplification does not hold.
Eigen::Matrix2d fim(const ObservationModel& model, const Vec2& p,
                    const ReflectionSchedule& schedule);

/// sqrt(trace(I^-1)); throws SingularFim when cond(I) exceeds 1e12.
double crlb(const ObservationModel& model, const Vec2& p, const ReflectionSchedule& schedule);

struct CrlbReport {
    Eigen::Matrix2d fim = Eigen::Matrix2d::Zero();
    double crlb_m = 0;
    Vec2 position = Vec2::Zero();
    std::string schedule_tag;
};

enum class SchedulePolicy { RandomBalanced, FpbDesigned };

/// Per-cell CRLB over a grid of the area of interest. The random policy
/// shares one schedule across cells; the designed policy runs FPB at each
/// cell and uses the rotation sequence over all T slots.
std::vector<CrlbReport> crlb_map(const ObservationModel& model, int grid_nx, int grid_ny,
                                 SchedulePolicy policy, std::mt19937_64& rng);

}  // namespace risloc
