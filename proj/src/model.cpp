#include "risloc/model.hpp"

#include <cmath>

#include "risloc/channel.hpp"
#include "risloc/errors.hpp"

namespace risloc {

ObservationModel::ObservationModel(ArrayGeometry geometry, Eigen::VectorXcd pilot,
                                   SystemConfig config)
    : geometry_(std::move(geometry)), pilot_(std::move(pilot)), config_(std::move(config)) {
    if (pilot_.size() != config_.num_tx_antennas)
        throw DimensionMismatch("pilot length must equal N_T");
    const int num_seg = static_cast<int>(geometry_.segment_centers.size());
    const Vec2 bs = geometry_.bs_element_positions.front();
    bs_beam_.resize(num_seg);
    aod_bs_.resize(num_seg);
    toa_bs_.resize(num_seg);
    rho_bs_.resize(num_seg);
    for (int l = 0; l < num_seg; ++l) {
        const Vec2 c = geometry_.segment_centers[l];
        const double d = (c - bs).norm();
        aod_bs_[l] = (c.x() - bs.x()) / d;
        toa_bs_[l] = d / kSpeedOfLight;
        rho_bs_[l] = std::pow(d, -config_.pathloss_exponent);
        bs_beam_[l] = steering_vector(config_.num_tx_antennas, aod_bs_[l]).adjoint() * pilot_;
    }
}

void ObservationModel::segment_states(const Vec2& p, std::vector<SegmentState>& out) const {
    const int num_seg = static_cast<int>(geometry_.segment_centers.size());
    out.resize(num_seg);
    const double mu = config_.pathloss_exponent;
    for (int l = 0; l < num_seg; ++l) {
        const Vec2 c = geometry_.segment_centers[l];
        const Vec2 diff = p - c;
        const double d = diff.norm();
        if (d < 1e-6) throw DegenerateGeometry("position coincides with a RIS segment center");
        SegmentState& s = out[l];
        s.dist = d;
        s.unit = diff / d;
        s.xi = s.unit.x();
        s.dxi = (Vec2(1.0, 0.0) - s.xi * s.unit) / d;
        s.amp = std::sqrt(rho_bs_[l] * std::pow(d, -mu));
        s.damp_fac = -0.5 * mu / d;
        s.toa_ue = d / kSpeedOfLight;
    }
}

template <bool WithDerivatives>
double ObservationModel::accumulate(const Vec2& p, const ReflectionSchedule& schedule,
                                    const MeasurementTensor* separated,
                                    MeasurementTensor* model_out, MeasurementTensor* jac_x,
                                    MeasurementTensor* jac_y, Vec2* grad) const {
    const int n_sub = config_.num_subcarriers;
    const int t_slots = schedule.num_slots();
    const int nr = config_.num_rx_antennas;
    const int num_seg = schedule.num_partitions();
    const int seg_size = schedule.segment_size();
    if (schedule.num_elements() != config_.num_ris_elements)
        throw DimensionMismatch("schedule rows must equal M");
    if (num_seg != static_cast<int>(geometry_.segment_centers.size()))
        throw DimensionMismatch("schedule partitioning must match the geometry");
    if (separated &&
        (separated->num_subcarriers != n_sub || separated->num_slots != t_slots ||
         separated->num_rx != nr))
        throw DimensionMismatch("separated tensor does not match model dimensions");

    std::vector<SegmentState> seg;
    segment_states(p, seg);

    // Per-segment UE-side steering rows and per (t,l) schedule responses
    // S = psi^T g and W = psi^T (k g).
    Eigen::MatrixXcd steer(num_seg, nr);
    Eigen::MatrixXcd s_resp(t_slots, num_seg), w_resp(t_slots, num_seg);
    const double half_off = 0.5 * (seg_size - 1);
    for (int l = 0; l < num_seg; ++l) {
        const Eigen::VectorXcd e = steering_vector(nr, seg[l].xi);
        for (int i = 0; i < nr; ++i) steer(l, i) = e[i];
        Eigen::VectorXcd g(seg_size);
        for (int k = 0; k < seg_size; ++k) g[k] = unit_phasor(kPi * k * (seg[l].xi - aod_bs_[l]));
        for (int t = 0; t < t_slots; ++t) {
            cd s = 0, w = 0;
            for (int k = 0; k < seg_size; ++k) {
                const cd term = schedule.value(l * seg_size + k, t) * g[k];
                s += term;
                // centroid-referenced element offsets also absorb the
                // derivative of the half-aperture phase below
                w += (static_cast<double>(k) - half_off) * term;
            }
            s_resp(t, l) = s;
            w_resp(t, l) = w;
        }
    }

    double obj = 0;
    Vec2 grad_acc = Vec2::Zero();
    // zrow transposed as [i][l] so the segment sum runs over contiguous cells.
    std::vector<cd> zrow(static_cast<std::size_t>(nr) * num_seg);
    std::vector<cd> base_x(num_seg), base_y(num_seg), islope_x(num_seg), islope_y(num_seg);

    // Delay phasors advance geometrically across subcarriers; the anchor at
    // n = 1 uses the same two-factor form as the channel synthesis and the
    // per-step arguments are small, so the drift stays near machine epsilon.
    std::vector<cd> delay(num_seg), delay_step(num_seg);
    for (int l = 0; l < num_seg; ++l) {
        const double f1 = config_.subcarrier_frequency(1);
        delay[l] = delay_phasor(toa_bs_[l], f1) * delay_phasor(seg[l].toa_ue, f1) *
                   unit_phasor(kPi * half_off * (aod_bs_[l] - seg[l].xi));
        delay_step[l] = delay_phasor(toa_bs_[l], config_.subcarrier_spacing_hz) *
                        delay_phasor(seg[l].toa_ue, config_.subcarrier_spacing_hz);
    }

    for (int n = 0; n < n_sub; ++n) {
        const double fn = config_.subcarrier_frequency(n + 1);
        for (int l = 0; l < num_seg; ++l) {
            const cd zscale = seg[l].amp * bs_beam_[l] * delay[l];
            for (int i = 0; i < nr; ++i) zrow[i * num_seg + l] = zscale * steer(l, i);
            delay[l] *= delay_step[l];
        }
        for (int t = 0; t < t_slots; ++t) {
            if constexpr (WithDerivatives) {
                const double delay_fac = 2.0 * kPi * fn / kSpeedOfLight;
                for (int l = 0; l < num_seg; ++l) {
                    const cd s = s_resp(t, l);
                    const cd w = w_resp(t, l);
                    const Vec2& u = seg[l].unit;
                    const Vec2& dxi = seg[l].dxi;
                    const cd amp_delay_x(seg[l].damp_fac * u.x(), -delay_fac * u.x());
                    const cd amp_delay_y(seg[l].damp_fac * u.y(), -delay_fac * u.y());
                    base_x[l] = s * amp_delay_x + cd(0, kPi * dxi.x()) * w;
                    base_y[l] = s * amp_delay_y + cd(0, kPi * dxi.y()) * w;
                    islope_x[l] = cd(0, -kPi * dxi.x()) * s;
                    islope_y[l] = cd(0, -kPi * dxi.y()) * s;
                }
            }
            const cd* s_col = s_resp.data() + static_cast<std::size_t>(t);  // row t, stride T
            for (int i = 0; i < nr; ++i) {
                const cd* zr = zrow.data() + static_cast<std::size_t>(i) * num_seg;
                cd m = 0, jx = 0, jy = 0;
                for (int l = 0; l < num_seg; ++l) {
                    const cd z = zr[l];
                    m += s_col[static_cast<std::size_t>(l) * t_slots] * z;
                    if constexpr (WithDerivatives) {
                        const double di = static_cast<double>(i);
                        jx += z * (base_x[l] + di * islope_x[l]);
                        jy += z * (base_y[l] + di * islope_y[l]);
                    }
                }
                if (model_out) model_out->at(n, t, i) = m;
                if constexpr (WithDerivatives) {
                    if (jac_x) jac_x->at(n, t, i) = jx;
                    if (jac_y) jac_y->at(n, t, i) = jy;
                }
                if (separated) {
                    const cd r = m - separated->at(n, t, i);
                    obj += std::norm(r);
                    if constexpr (WithDerivatives) {
                        if (grad) {
                            grad_acc.x() += 2.0 * (r.real() * jx.real() + r.imag() * jx.imag());
                            grad_acc.y() += 2.0 * (r.real() * jy.real() + r.imag() * jy.imag());
                        }
                    }
                }
            }
        }
    }
    if (grad) *grad = grad_acc;
    return obj;
}

MeasurementTensor ObservationModel::observation(const Vec2& p,
                                                const ReflectionSchedule& schedule) const {
    MeasurementTensor out(config_.num_subcarriers, schedule.num_slots(), config_.num_rx_antennas,
                          MeasurementTensor::Kind::Model);
    accumulate<false>(p, schedule, nullptr, &out, nullptr, nullptr, nullptr);
    return out;
}

double ObservationModel::objective(const Vec2& p, const ReflectionSchedule& schedule,
                                   const MeasurementTensor& separated) const {
    return accumulate<false>(p, schedule, &separated, nullptr, nullptr, nullptr, nullptr);
}

double ObservationModel::objective_and_gradient(const Vec2& p, const ReflectionSchedule& schedule,
                                                const MeasurementTensor& separated,
                                                Vec2& grad) const {
    return accumulate<true>(p, schedule, &separated, nullptr, nullptr, nullptr, &grad);
}

ObservationModel::Jacobian ObservationModel::jacobian(const Vec2& p,
                                                      const ReflectionSchedule& schedule) const {
    Jacobian jac{MeasurementTensor(config_.num_subcarriers, schedule.num_slots(),
                                   config_.num_rx_antennas, MeasurementTensor::Kind::Model),
                 MeasurementTensor(config_.num_subcarriers, schedule.num_slots(),
                                   config_.num_rx_antennas, MeasurementTensor::Kind::Model)};
    accumulate<true>(p, schedule, nullptr, nullptr, &jac.dx, &jac.dy, nullptr);
    return jac;
}

}  // namespace risloc
