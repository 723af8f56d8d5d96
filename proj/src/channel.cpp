#include "risloc/channel.hpp"

#include <cmath>

#include "risloc/errors.hpp"

namespace risloc {

Eigen::VectorXcd steering_vector(int length, double f) {
    if (length < 1) throw InvalidInput("steering_vector: length must be >= 1");
    Eigen::VectorXcd a(length);
    for (int k = 0; k < length; ++k) a[k] = unit_phasor(-kPi * k * f);
    return a;
}

Eigen::VectorXcd pilot_vector(const SystemConfig& config) {
    const int nt = config.num_tx_antennas;
    Eigen::VectorXcd v(nt);
    if (config.matched_precoder) {
        const Vec2 d = config.ris_center - config.bs_position;
        const double cos_bs = d.x() / d.norm();
        v = steering_vector(nt, cos_bs) / std::sqrt(static_cast<double>(nt));
    } else {
        v.setConstant(cd(1.0 / std::sqrt(static_cast<double>(nt)), 0.0));
    }
    return std::sqrt(config.tx_power_watts) * v;
}

NlosRealization nlos_channel(std::mt19937_64& rng, const SystemConfig& config,
                             const Vec2& ue_position) {
    const int k_paths = config.num_scatterers;
    const int nr = config.num_rx_antennas;
    const int nt = config.num_tx_antennas;
    const int n_sub = config.num_subcarriers;
    const double mu = config.pathloss_exponent;
    const double h = config.wavelength() / 2.0;

    NlosRealization out;
    out.spec.num_paths = k_paths;
    out.spec.num_rx = nr;
    out.spec.num_tx = nt;
    out.spec.toa.resize(static_cast<std::size_t>(k_paths) * nr * nt);
    out.spec.pathloss.resize(out.spec.toa.size());
    out.per_subcarrier.assign(n_sub, Eigen::MatrixXcd::Zero(nr, nt));
    if (k_paths == 0) return out;

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    constexpr double kDelaySpread = 200e-9;
    for (int k = 0; k < k_paths; ++k) {
        // 1 - u keeps the delay offset strictly positive.
        double common_delay = (1.0 - unif(rng)) * kDelaySpread;
        double common_excess_db = 10.0 + 10.0 * unif(rng);
        for (int i = 0; i < nr; ++i) {
            for (int j = 0; j < nt; ++j) {
                double delay = common_delay;
                double excess_db = common_excess_db;
                if (!config.nlos_common_paths) {
                    delay = (1.0 - unif(rng)) * kDelaySpread;
                    excess_db = 10.0 + 10.0 * unif(rng);
                }
                const Vec2 rx = ue_position + Vec2(i * h, 0.0);
                const Vec2 tx = config.bs_position + Vec2(j * h, 0.0);
                const double d_direct = (rx - tx).norm();
                const std::size_t idx = out.spec.offset(k, i, j);
                out.spec.toa[idx] = d_direct / kSpeedOfLight + delay;
                out.spec.pathloss[idx] = std::pow(d_direct, -mu) * db_to_linear(-excess_db);
            }
        }
    }

    for (int k = 0; k < k_paths; ++k) {
        for (int i = 0; i < nr; ++i) {
            for (int j = 0; j < nt; ++j) {
                const std::size_t idx = out.spec.offset(k, i, j);
                const double amp = std::sqrt(out.spec.pathloss[idx]);
                const double tau = out.spec.toa[idx];
                // Incremental across subcarriers; the NLoS term is slot
                // invariant and cancelled by separation, so drift is harmless.
                cd ph = delay_phasor(tau, config.subcarrier_frequency(1));
                const cd step = delay_phasor(tau, config.subcarrier_spacing_hz);
                for (int n = 0; n < n_sub; ++n) {
                    out.per_subcarrier[n](i, j) += amp * ph;
                    ph *= step;
                }
            }
        }
    }
    return out;
}

Eigen::MatrixXcd near_field_cascade(const ArrayGeometry& geometry, const Vec2& ue_position,
                                    const Eigen::VectorXcd& psi, int subcarrier,
                                    const SystemConfig& config) {
    const int m_total = static_cast<int>(geometry.ris_element_positions.size());
    if (psi.size() != m_total) throw DimensionMismatch("psi length must equal M");
    const int nr = config.num_rx_antennas;
    const int nt = config.num_tx_antennas;
    const double fn = config.subcarrier_frequency(subcarrier);
    const double mu = config.pathloss_exponent;
    const auto ue_elems = geometry.ue_element_positions_for(ue_position);

    // Per (m, j) and (m, i) path factors sqrt(rho) exp(-j 2 pi f_n tau).
    Eigen::MatrixXcd bs_leg(m_total, nt), ue_leg(m_total, nr);
    for (int m = 0; m < m_total; ++m) {
        const Vec2& pm = geometry.ris_element_positions[m];
        for (int j = 0; j < nt; ++j) {
            const double d = (pm - geometry.bs_element_positions[j]).norm();
            if (d < 1e-6) throw DegenerateGeometry("RIS element coincides with a BS antenna");
            bs_leg(m, j) = std::pow(d, -mu / 2.0) * delay_phasor(d / kSpeedOfLight, fn);
        }
        for (int i = 0; i < nr; ++i) {
            const double d = (pm - ue_elems[i]).norm();
            if (d < 1e-6) throw DegenerateGeometry("RIS element coincides with a UE antenna");
            ue_leg(m, i) = std::pow(d, -mu / 2.0) * delay_phasor(d / kSpeedOfLight, fn);
        }
    }

    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(nr, nt);
    for (int i = 0; i < nr; ++i)
        for (int j = 0; j < nt; ++j) {
            cd acc = 0;
            for (int m = 0; m < m_total; ++m) acc += psi[m] * bs_leg(m, j) * ue_leg(m, i);
            h(i, j) = acc;
        }
    return h;
}

std::vector<SegmentChannelPair> farfield_segment_channels(const PathGeometry& path,
                                                          int subcarrier,
                                                          const SystemConfig& config) {
    const int num_seg = path.num_segments();
    const int seg_size = config.num_ris_elements / config.num_partitions;
    const double fn = config.subcarrier_frequency(subcarrier);
    std::vector<SegmentChannelPair> out;
    out.reserve(num_seg);
    // The segment delay and pathloss reference the centroid while the
    // steering phases start at the first element; the half-aperture phase
    // reconciles the two references.
    const double half_off = 0.5 * (seg_size - 1);
    for (int l = 0; l < num_seg; ++l) {
        const cd rho_mt = std::sqrt(path.pathloss_bs_ris[l]) *
                          delay_phasor(path.toa_bs_ris[l], fn) *
                          unit_phasor(kPi * half_off * path.aod_bs[l]);
        const cd rho_rm = std::sqrt(path.pathloss_ris_ue[l]) *
                          delay_phasor(path.toa_ris_ue[l], fn) *
                          unit_phasor(-kPi * half_off * path.aod_ris[l]);
        const Eigen::VectorXcd a_seg_bs = steering_vector(seg_size, path.aod_bs[l]);
        const Eigen::VectorXcd a_tx = steering_vector(config.num_tx_antennas, path.aod_bs[l]);
        const Eigen::VectorXcd a_rx = steering_vector(config.num_rx_antennas, path.aod_ris[l]);
        const Eigen::VectorXcd a_seg_ue = steering_vector(seg_size, path.aod_ris[l]);
        SegmentChannelPair pair;
        pair.bs_side = rho_mt * (a_seg_bs * a_tx.adjoint());
        pair.ue_side = rho_rm * (a_rx * a_seg_ue.adjoint());
        out.push_back(std::move(pair));
    }
    return out;
}

Eigen::MatrixXcd cascaded_partitioned(const PathGeometry& path, const Eigen::VectorXcd& psi,
                                      int subcarrier, const SystemConfig& config) {
    const int num_seg = path.num_segments();
    const int seg_size = config.num_ris_elements / config.num_partitions;
    if (psi.size() != config.num_ris_elements)
        throw DimensionMismatch("psi length must equal M");
    const auto segs = farfield_segment_channels(path, subcarrier, config);
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(config.num_rx_antennas, config.num_tx_antennas);
    for (int l = 0; l < num_seg; ++l) {
        const Eigen::VectorXcd psi_l = psi.segment(l * seg_size, seg_size);
        h += segs[l].ue_side * psi_l.asDiagonal() * segs[l].bs_side;
    }
    return h;
}

Eigen::VectorXcd end_to_end_response(const PathGeometry& path, int segment,
                                     const SystemConfig& config) {
    const int seg_size = config.num_ris_elements / config.num_partitions;
    return steering_vector(seg_size, path.aod_ris[segment])
        .conjugate()
        .cwiseProduct(steering_vector(seg_size, path.aod_bs[segment]));
}

Eigen::VectorXcd z_vector(const PathGeometry& path, const Eigen::VectorXcd& pilot, int segment,
                          int subcarrier, const SystemConfig& config) {
    if (pilot.size() != config.num_tx_antennas)
        throw DimensionMismatch("pilot length must equal N_T");
    const double fn = config.subcarrier_frequency(subcarrier);
    const double half_off = 0.5 * (config.num_ris_elements / config.num_partitions - 1);
    // The delay factor is the product of the two per-link phasors so that the
    // factored route matches the explicit channel matrices bit-for-bit; the
    // half-aperture term carries the segment-centroid reference.
    const cd scale = std::sqrt(path.pathloss_bs_ris[segment] * path.pathloss_ris_ue[segment]) *
                     (delay_phasor(path.toa_bs_ris[segment], fn) *
                      delay_phasor(path.toa_ris_ue[segment], fn)) *
                     unit_phasor(kPi * half_off * (path.aod_bs[segment] - path.aod_ris[segment]));
    const cd beam = steering_vector(config.num_tx_antennas, path.aod_bs[segment]).adjoint() * pilot;
    return (scale * beam) * steering_vector(config.num_rx_antennas, path.aod_ris[segment]);
}

MeasurementTensor noise_free_observation(const PathGeometry& path,
                                         const ReflectionSchedule& schedule,
                                         const Eigen::VectorXcd& pilot,
                                         const SystemConfig& config) {
    if (schedule.num_elements() != config.num_ris_elements)
        throw DimensionMismatch("schedule rows must equal M");
    if (pilot.size() != config.num_tx_antennas)
        throw DimensionMismatch("pilot length must equal N_T");
    const int n_sub = config.num_subcarriers;
    const int t_slots = schedule.num_slots();
    const int num_seg = path.num_segments();
    const int seg_size = schedule.segment_size();
    MeasurementTensor y(n_sub, t_slots, config.num_rx_antennas, MeasurementTensor::Kind::Model);
    for (int n = 0; n < n_sub; ++n) {
        const auto segs = farfield_segment_channels(path, n + 1, config);
        std::vector<Eigen::VectorXcd> bs_pilot(num_seg);
        for (int l = 0; l < num_seg; ++l) bs_pilot[l] = segs[l].bs_side * pilot;
        for (int t = 0; t < t_slots; ++t) {
            Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(config.num_rx_antennas);
            for (int l = 0; l < num_seg; ++l) {
                Eigen::VectorXcd reflected(seg_size);
                for (int k = 0; k < seg_size; ++k)
                    reflected[k] = schedule.value(l * seg_size + k, t) * bs_pilot[l][k];
                acc += segs[l].ue_side * reflected;
            }
            for (int i = 0; i < config.num_rx_antennas; ++i) y.at(n, t, i) = acc[i];
        }
    }
    return y;
}

MeasurementTensor factored_observation(const PathGeometry& path,
                                       const ReflectionSchedule& schedule,
                                       const Eigen::VectorXcd& pilot,
                                       const SystemConfig& config) {
    const int n_sub = config.num_subcarriers;
    const int t_slots = schedule.num_slots();
    const int num_seg = path.num_segments();
    MeasurementTensor y(n_sub, t_slots, config.num_rx_antennas, MeasurementTensor::Kind::Model);

    std::vector<Eigen::VectorXcd> g(num_seg);
    for (int l = 0; l < num_seg; ++l) g[l] = end_to_end_response(path, l, config);
    // s_{t,l} = psi_{t,l}^T g_l
    Eigen::MatrixXcd s(t_slots, num_seg);
    for (int t = 0; t < t_slots; ++t)
        for (int l = 0; l < num_seg; ++l) s(t, l) = schedule.segment_column(t, l).transpose() * g[l];

    for (int n = 0; n < n_sub; ++n) {
        for (int l = 0; l < num_seg; ++l) {
            const Eigen::VectorXcd z = z_vector(path, pilot, l, n + 1, config);
            for (int t = 0; t < t_slots; ++t) {
                const cd w = s(t, l);
                for (int i = 0; i < config.num_rx_antennas; ++i) y.at(n, t, i) += w * z[i];
            }
        }
    }
    return y;
}

ChannelRealization ChannelRealization::make(const ArrayGeometry& geometry,
                                            const Vec2& ue_position, NlosRealization nlos,
                                            const SystemConfig& config, Mode mode) {
    ChannelRealization ch;
    ch.mode_ = mode;
    ch.config_ = config;
    ch.geometry_ = geometry;
    ch.ue_position_ = ue_position;
    ch.path_ = path_geometry(geometry, ue_position, config);
    ch.nlos_ = std::move(nlos);
    if (mode == Mode::PartitionedFarField) {
        const int num_seg = config.num_partitions;
        const int seg_size = config.num_ris_elements / num_seg;
        ch.a_seg_bs_.resize(num_seg);
        ch.a_tx_.resize(num_seg);
        ch.a_rx_.resize(num_seg);
        ch.a_seg_ue_.resize(num_seg);
        for (int l = 0; l < num_seg; ++l) {
            ch.a_seg_bs_[l] = steering_vector(seg_size, ch.path_.aod_bs[l]);
            ch.a_tx_[l] = steering_vector(config.num_tx_antennas, ch.path_.aod_bs[l]);
            ch.a_rx_[l] = steering_vector(config.num_rx_antennas, ch.path_.aod_ris[l]);
            ch.a_seg_ue_[l] = steering_vector(seg_size, ch.path_.aod_ris[l]);
        }
        ch.rho_bs_.resize(static_cast<std::size_t>(config.num_subcarriers) * num_seg);
        ch.rho_ue_.resize(ch.rho_bs_.size());
        const double half_off = 0.5 * (seg_size - 1);
        for (int n = 0; n < config.num_subcarriers; ++n) {
            const double fn = config.subcarrier_frequency(n + 1);
            for (int l = 0; l < num_seg; ++l) {
                ch.rho_bs_[static_cast<std::size_t>(n) * num_seg + l] =
                    std::sqrt(ch.path_.pathloss_bs_ris[l]) *
                    delay_phasor(ch.path_.toa_bs_ris[l], fn) *
                    unit_phasor(kPi * half_off * ch.path_.aod_bs[l]);
                ch.rho_ue_[static_cast<std::size_t>(n) * num_seg + l] =
                    std::sqrt(ch.path_.pathloss_ris_ue[l]) *
                    delay_phasor(ch.path_.toa_ris_ue[l], fn) *
                    unit_phasor(-kPi * half_off * ch.path_.aod_ris[l]);
            }
        }
    }
    return ch;
}

Eigen::MatrixXcd ChannelRealization::cascade(int subcarrier, const Eigen::VectorXcd& psi) const {
    if (mode_ == Mode::ExactNearField)
        return near_field_cascade(geometry_, ue_position_, psi, subcarrier + 1, config_);
    const int num_seg = config_.num_partitions;
    const int seg_size = config_.num_ris_elements / num_seg;
    Eigen::MatrixXcd h =
        Eigen::MatrixXcd::Zero(config_.num_rx_antennas, config_.num_tx_antennas);
    for (int l = 0; l < num_seg; ++l) {
        const std::size_t idx = static_cast<std::size_t>(subcarrier) * num_seg + l;
        cd middle = 0;  // a_seg_ue^H diag(psi_l) a_seg_bs
        for (int k = 0; k < seg_size; ++k)
            middle += std::conj(a_seg_ue_[l][k]) * psi[l * seg_size + k] * a_seg_bs_[l][k];
        h += (rho_bs_[idx] * rho_ue_[idx] * middle) * (a_rx_[l] * a_tx_[l].adjoint());
    }
    return h;
}

Eigen::VectorXcd ChannelRealization::apply(int subcarrier, const Eigen::VectorXcd& psi,
                                           const Eigen::VectorXcd& pilot) const {
    if (mode_ == Mode::ExactNearField) return cascade(subcarrier, psi) * pilot;
    const int num_seg = config_.num_partitions;
    const int seg_size = config_.num_ris_elements / num_seg;
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(config_.num_rx_antennas);
    for (int l = 0; l < num_seg; ++l) {
        const std::size_t idx = static_cast<std::size_t>(subcarrier) * num_seg + l;
        cd middle = 0;
        for (int k = 0; k < seg_size; ++k)
            middle += std::conj(a_seg_ue_[l][k]) * psi[l * seg_size + k] * a_seg_bs_[l][k];
        const cd beam = a_tx_[l].adjoint() * pilot;
        acc += (rho_bs_[idx] * rho_ue_[idx] * middle * beam) * a_rx_[l];
    }
    return acc;
}

}  // namespace risloc
