#include "risloc/crlb.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "risloc/beamforming.hpp"
#include "risloc/errors.hpp"
#include "risloc/signaling.hpp"

namespace risloc {

double fd_step(const Vec2& p) { return std::max(1e-8 * p.norm(), 1e-9); }

ObservationModel::Jacobian observation_jacobian(const ObservationModel& model, const Vec2& p,
                                                const ReflectionSchedule& schedule,
                                                JacobianMode mode) {
    if (mode == JacobianMode::Analytic) return model.jacobian(p, schedule);
    const double h = fd_step(p);
    ObservationModel::Jacobian jac;
    const MeasurementTensor xp = model.observation(p + Vec2(h, 0), schedule);
    const MeasurementTensor xm = model.observation(p - Vec2(h, 0), schedule);
    const MeasurementTensor yp = model.observation(p + Vec2(0, h), schedule);
    const MeasurementTensor ym = model.observation(p - Vec2(0, h), schedule);
    jac.dx = xp;
    jac.dy = yp;
    const double inv = 1.0 / (2.0 * h);
    for (std::size_t k = 0; k < jac.dx.data.size(); ++k) {
        jac.dx.data[k] = (xp.data[k] - xm.data[k]) * inv;
        jac.dy.data[k] = (yp.data[k] - ym.data[k]) * inv;
    }
    return jac;
}

Eigen::Matrix2d fim(const ObservationModel& model, const Vec2& p,
                    const ReflectionSchedule& schedule) {
    if (!schedule.is_balanced())
        throw UnbalancedSchedule("FIM requires a balanced schedule");
    const auto jac = model.jacobian(p, schedule);
    double ixx = 0, ixy = 0, iyy = 0;
    for (std::size_t k = 0; k < jac.dx.data.size(); ++k) {
        const cd& dx = jac.dx.data[k];
        const cd& dy = jac.dy.data[k];
        ixx += std::norm(dx);
        iyy += std::norm(dy);
        ixy += dx.real() * dy.real() + dx.imag() * dy.imag();
    }
    const double scale = 2.0 / model.config().noise_power_watts;
    Eigen::Matrix2d info;
    info << scale * ixx, scale * ixy, scale * ixy, scale * iyy;
    return info;
}

double crlb(const ObservationModel& model, const Vec2& p, const ReflectionSchedule& schedule) {
    const Eigen::Matrix2d info = fim(model, p, schedule);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(info);
    const double lo = eig.eigenvalues()(0), hi = eig.eigenvalues()(1);
    if (!(lo > 0) || hi / lo > 1e12)
        throw SingularFim("Fisher information is singular or ill-conditioned");
    return std::sqrt(1.0 / lo + 1.0 / hi);
}

std::vector<CrlbReport> crlb_map(const ObservationModel& model, int grid_nx, int grid_ny,
                                 SchedulePolicy policy, std::mt19937_64& rng) {
    if (grid_nx < 2 || grid_ny < 2) throw InvalidInput("crlb_map grid must be at least 2x2");
    const SystemConfig& cfg = model.config();
    const Rect& area = cfg.area_of_interest;
    std::vector<CrlbReport> out;
    out.reserve(static_cast<std::size_t>(grid_nx) * grid_ny);

    ReflectionSchedule shared =
        (policy == SchedulePolicy::RandomBalanced)
            ? balanced_random_schedule(rng, cfg, cfg.num_slots)
            : ReflectionSchedule(cfg.num_ris_elements, 1, cfg.phase_bits, cfg.num_partitions);

    for (int gy = 0; gy < grid_ny; ++gy) {
        for (int gx = 0; gx < grid_nx; ++gx) {
            const Vec2 p(area.xmin + (gx + 0.5) * area.width() / grid_nx,
                         area.ymin + (gy + 0.5) * area.height() / grid_ny);
            CrlbReport report;
            report.position = p;
            if (policy == SchedulePolicy::RandomBalanced) {
                report.schedule_tag = "random";
                report.fim = fim(model, p, shared);
                report.crlb_m = crlb(model, p, shared);
            } else {
                report.schedule_tag = "fpb";
                const PathGeometry path = path_geometry(model.geometry(), p, cfg);
                const BeamformerSolution design = fpb(path, cfg);
                const ReflectionSchedule designed = ReflectionSchedule::rotation_sequence(
                    design.stacked_indices(), cfg.phase_bits, cfg.num_partitions, cfg.num_slots);
                report.fim = fim(model, p, designed);
                report.crlb_m = crlb(model, p, designed);
            }
            out.push_back(std::move(report));
        }
    }
    return out;
}

}  // namespace risloc
