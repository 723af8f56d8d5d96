#pragma once

#include <vector>

#include "risloc/model.hpp"

namespace risloc {

struct CoarseResult {
    double toa_hat = 0;             // seconds, in [0, 1/delta_f)
    double aoa_hat = 0;             // UE-side direction cosine in [-1, 1)
    std::vector<Vec2> candidates;   // one back-projection per segment
    std::vector<bool> geometrically_valid;
    std::vector<double> objective_values;
    int best_index = 0;

    const Vec2& best() const { return candidates[best_index]; }
};

struct RefineOutcome {
    Vec2 position = Vec2::Zero();
    double objective = 0;
    int iterations = 0;
    bool converged = false;
};

struct FineResult {
    std::vector<Vec2> refined;
    std::vector<double> objective_values;
    std::vector<int> iterations_used;
    std::vector<bool> converged;
    Vec2 final_estimate = Vec2::Zero();
    int best_index = 0;
};

struct LocalizationResult {
    CoarseResult coarse;
    FineResult fine;
};

/// || model(p) - separated ||_F^2 (Eq. 15 form; zero per-(n,i) slot mean on
/// both sides under a balanced schedule).
double mle_objective(const ObservationModel& model, const Vec2& p,
                     const MeasurementTensor& separated, const ReflectionSchedule& schedule);

/// Dominant round-trip delay from the first `window_slots` slots: argmax of
/// the zero-padded length-(c0 N) inverse transform energy, summed over slots
/// and receive antennas. Grid resolution 1/(c0 N delta_f).
double coarse_toa(const MeasurementTensor& separated, const SystemConfig& config,
                  int window_slots);

/// Dominant UE-side direction cosine from the first `window_slots` slots via
/// a zero-padded length-(c0 N_R) transform across the receive dimension.
/// Returned in the UE-observer convention used by the back-projection (the
/// steering-grid argmax is the propagation cosine; this negates it).
double coarse_aoa(const MeasurementTensor& separated, const SystemConfig& config,
                  int window_slots);

struct Candidate {
    Vec2 position = Vec2::Zero();
    bool geometrically_valid = true;
};

/// Back-projection of (toa_hat, aoa_hat) through every segment:
/// p = c_l + (c tau - ||c_l - p_T||) [-f, -sqrt(1-f^2)]^T. Candidates with
/// non-positive remaining range are flagged, not dropped.
std::vector<Candidate> coarse_candidates(double toa_hat, double aoa_hat,
                                         const ArrayGeometry& geometry,
                                         const SystemConfig& config);

/// BFGS refinement with Armijo backtracking (initial step 1, shrink 0.5,
/// sufficient decrease 1e-4), at most 50 iterations, gradient tolerance 1e-9
/// relative to the initial gradient norm.
RefineOutcome fine_refine(const Vec2& candidate, const MeasurementTensor& separated,
                          const ReflectionSchedule& schedule, const ObservationModel& model);

/// Two-stage pipeline on a full-T separated tensor: coarse on the first T/2
/// slots, all candidates refined on the full tensor, minimum objective wins.
LocalizationResult localize(const MeasurementTensor& separated,
                            const ReflectionSchedule& schedule, const ObservationModel& model);

}  // namespace risloc
