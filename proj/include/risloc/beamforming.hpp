#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "risloc/scenario.hpp"
#include "risloc/schedule.hpp"

namespace risloc {

/// Internal angle of two nonzero complex numbers: pi - ||arg x - arg y| - pi|.
double internal_angle(cd x, cd y);

/// Phase indices of the omega-beamformer: s_k = round(-(2^b/2pi) arg(g_k)
/// + (2^b/2pi) omega) reduced mod 2^b. round() is half-away-from-zero,
/// matching the breakpoint enumeration below.
std::vector<int> omega_beamformer_indices(const Eigen::VectorXcd& g, double omega,
                                          int phase_bits);
Eigen::VectorXcd omega_beamformer(const Eigen::VectorXcd& g, double omega, int phase_bits);

/// The breakpoints of omega -> psi(omega)^T g, reduced to [0, 2pi), sorted,
/// exact duplicates removed. At most 2^b * len(g) values.
std::vector<double> candidate_set(const Eigen::VectorXcd& g, int phase_bits);

struct SegmentSolution {
    std::vector<int> indices;     // phase states of psi*
    Eigen::VectorXcd psi;
    double omega = 0;             // winning rotation
    double gain = 0;              // |psi*^T g|^2
};

/// Optimal single-segment solve: linear search of the candidate breakpoints.
SegmentSolution fpb_segment(const Eigen::VectorXcd& g, int phase_bits);

/// Closest point projection baseline: the omega = 0 beamformer.
Eigen::VectorXcd cpp(const Eigen::VectorXcd& g, int phase_bits);
std::vector<int> cpp_indices(const Eigen::VectorXcd& g, int phase_bits);

/// Global maximum by full enumeration; requires 2^(b*len) <= 2^24.
/// Ties break toward the lexicographically smallest index vector.
SegmentSolution exhaustive_oracle(const Eigen::VectorXcd& g, int phase_bits);

enum class BeamformerMethod { Fpb, Cpp, Oracle };

struct BeamformerSolution {
    std::vector<SegmentSolution> segments;
    double total_gain = 0;
    BeamformerMethod method = BeamformerMethod::Fpb;

    /// Phase indices of the full M-element vector (segments concatenated).
    std::vector<int> stacked_indices() const;
};

/// Per-segment FPB solve from the propagation parameters of a position
/// estimate; segments decouple because the gain is a sum over segments.
BeamformerSolution fpb(const PathGeometry& path, const SystemConfig& config);
BeamformerSolution cpp_solution(const PathGeometry& path, const SystemConfig& config);

/// Second-window schedule: slot T/2+t carries exp(j (t-1) pi / 2^(b-1)) psi*,
/// i.e. every phase index advances by one state per slot. Balanced because
/// T/2 is a multiple of 2^b.
ReflectionSchedule extend_balanced(const BeamformerSolution& solution,
                                   const SystemConfig& config);

/// F(psi) = sum_l |psi_l^T g_l|^2 for a stacked phase vector.
double gain(const Eigen::VectorXcd& psi, const std::vector<Eigen::VectorXcd>& g_segments);

}  // namespace risloc
