#pragma once

#include <Eigen/Dense>

#include "risloc/scenario.hpp"
#include "risloc/schedule.hpp"
#include "risloc/tensor.hpp"

namespace risloc {

/// Evaluates the noise-free partitioned-far-field observation model, its
/// least-squares objective against separated measurements, and the analytic
/// position derivatives. All paths share the factored per-segment form
/// Y_{n,t,:} = sum_l (psi_{t,l}^T g_l) z_{n,l}(p).
class ObservationModel {
  public:
    ObservationModel(ArrayGeometry geometry, Eigen::VectorXcd pilot, SystemConfig config);

    const SystemConfig& config() const { return config_; }
    const ArrayGeometry& geometry() const { return geometry_; }
    const Eigen::VectorXcd& pilot() const { return pilot_; }

    MeasurementTensor observation(const Vec2& p, const ReflectionSchedule& schedule) const;

    /// || model(p) - separated ||_F^2
    double objective(const Vec2& p, const ReflectionSchedule& schedule,
                     const MeasurementTensor& separated) const;

    /// Objective plus its real gradient 2 sum Re{(Y~ - Ybar)^H dY~/dp}.
    double objective_and_gradient(const Vec2& p, const ReflectionSchedule& schedule,
                                  const MeasurementTensor& separated, Vec2& grad) const;

    struct Jacobian {
        MeasurementTensor dx;
        MeasurementTensor dy;
    };

    /// Entry (n,t,i,d) = d model_{n,t,i} / d p_d with the full chain rule
    /// through the RIS-UE delay, pathloss, and both angle dependencies.
    Jacobian jacobian(const Vec2& p, const ReflectionSchedule& schedule) const;

  private:
    struct SegmentState {
        double dist;      // ||p - c_l||
        Vec2 unit;        // (p - c_l)/dist
        double xi;        // aod_ris
        Vec2 dxi;         // gradient of xi
        double amp;       // sqrt(rho_bs * dist^-mu)
        double damp_fac;  // d(amp)/amp per unit step = -(mu/2)/dist, along unit
        double toa_ue;    // dist / c
    };

    void segment_states(const Vec2& p, std::vector<SegmentState>& out) const;

    template <bool WithDerivatives>
    double accumulate(const Vec2& p, const ReflectionSchedule& schedule,
                      const MeasurementTensor* separated, MeasurementTensor* model_out,
                      MeasurementTensor* jac_x, MeasurementTensor* jac_y, Vec2* grad) const;

    ArrayGeometry geometry_;
    Eigen::VectorXcd pilot_;
    SystemConfig config_;
    std::vector<cd> bs_beam_;       // a^H_{N_T}(aod_bs_l) x, constant per segment
    std::vector<double> aod_bs_;    // BS->segment direction cosines
    std::vector<double> toa_bs_;    // BS->segment delays
    std::vector<double> rho_bs_;    // BS->segment pathloss
};

}  // namespace risloc
