#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "risloc/scenario.hpp"
#include "risloc/schedule.hpp"
#include "risloc/tensor.hpp"

namespace risloc {

/// Array response a_N(f): entry k (0-based) = exp(-j pi k f).
Eigen::VectorXcd steering_vector(int length, double f);

/// Transmitted pilot x = sqrt(P_T) v with ||v|| = 1. The default precoder is
/// a matched beam toward the RIS center; the alternative is uniform.
Eigen::VectorXcd pilot_vector(const SystemConfig& config);

/// Randomly generated single-bounce scatter paths between BS and UE antennas.
struct NlosSpec {
    int num_paths = 0;  // K
    int num_rx = 0;
    int num_tx = 0;
    std::vector<double> toa;       // [k][i][j], seconds; strictly later than direct
    std::vector<double> pathloss;  // [k][i][j]

    std::size_t offset(int k, int i, int j) const {
        return (static_cast<std::size_t>(k) * num_rx + i) * num_tx + j;
    }
};

struct NlosRealization {
    NlosSpec spec;
    std::vector<Eigen::MatrixXcd> per_subcarrier;  // N matrices of N_R x N_T
};

/// Draws K scatter paths and synthesizes H_n^NLoS for every subcarrier.
/// Deterministic for a given rng state; K = 0 yields zero matrices.
NlosRealization nlos_channel(std::mt19937_64& rng, const SystemConfig& config,
                             const Vec2& ue_position);

/// Exact near-field cascaded channel entry-by-entry over all M elements
/// (spherical wavefronts, per-element delays and pathloss).
Eigen::MatrixXcd near_field_cascade(const ArrayGeometry& geometry, const Vec2& ue_position,
                                    const Eigen::VectorXcd& psi, int subcarrier,
                                    const SystemConfig& config);

/// The rank-1 far-field factor pair of one segment: bs_side is the
/// (M/L) x N_T BS->segment channel, ue_side the N_R x (M/L) segment->UE one.
struct SegmentChannelPair {
    Eigen::MatrixXcd bs_side;
    Eigen::MatrixXcd ue_side;
};

std::vector<SegmentChannelPair> farfield_segment_channels(const PathGeometry& path,
                                                          int subcarrier,
                                                          const SystemConfig& config);

/// Sum over segments of ue_side * diag(psi_l) * bs_side.
Eigen::MatrixXcd cascaded_partitioned(const PathGeometry& path, const Eigen::VectorXcd& psi,
                                      int subcarrier, const SystemConfig& config);

/// End-to-end segment response g_l; unit-modulus entries
/// exp(j pi k (aod_ris - aod_bs)).
Eigen::VectorXcd end_to_end_response(const PathGeometry& path, int segment,
                                     const SystemConfig& config);

/// z_{n,l}: the UE-side response of segment l to the pilot on subcarrier n.
Eigen::VectorXcd z_vector(const PathGeometry& path, const Eigen::VectorXcd& pilot, int segment,
                          int subcarrier, const SystemConfig& config);

/// Noise-free model tensor built from the explicit segment channel matrices.
MeasurementTensor noise_free_observation(const PathGeometry& path,
                                         const ReflectionSchedule& schedule,
                                         const Eigen::VectorXcd& pilot,
                                         const SystemConfig& config);

/// Same tensor through the factored route: Y_{n,t,:} = sum_l (psi_l^T g_l) z_{n,l}.
MeasurementTensor factored_observation(const PathGeometry& path,
                                       const ReflectionSchedule& schedule,
                                       const Eigen::VectorXcd& pilot,
                                       const SystemConfig& config);

/// One channel draw: the RIS cascade (partitioned or exact near-field mode)
/// plus the slot-invariant NLoS component.
class ChannelRealization {
  public:
    enum class Mode { PartitionedFarField, ExactNearField };

    static ChannelRealization make(const ArrayGeometry& geometry, const Vec2& ue_position,
                                   NlosRealization nlos, const SystemConfig& config, Mode mode);

    Mode mode() const { return mode_; }
    const Eigen::MatrixXcd& nlos(int subcarrier) const { return nlos_.per_subcarrier[subcarrier]; }
    const NlosSpec& nlos_spec() const { return nlos_.spec; }

    /// Full N_R x N_T cascade matrix for one subcarrier and phase column.
    Eigen::MatrixXcd cascade(int subcarrier, const Eigen::VectorXcd& psi) const;

    /// cascade(n, psi) * pilot, avoiding the matrix materialization.
    Eigen::VectorXcd apply(int subcarrier, const Eigen::VectorXcd& psi,
                           const Eigen::VectorXcd& pilot) const;

  private:
    Mode mode_ = Mode::PartitionedFarField;
    SystemConfig config_;
    ArrayGeometry geometry_;
    Vec2 ue_position_ = Vec2::Zero();
    PathGeometry path_;
    NlosRealization nlos_;
    // Partitioned-mode rank-1 factors; steerings are subcarrier independent,
    // only the delay/pathloss scalars vary with n.
    std::vector<Eigen::VectorXcd> a_seg_bs_, a_tx_, a_rx_, a_seg_ue_;  // per segment
    std::vector<cd> rho_bs_, rho_ue_;                                  // [n * L + l]
};

}  // namespace risloc
