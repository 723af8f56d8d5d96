#include "risloc/localization.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "risloc/errors.hpp"

namespace risloc {

namespace {

std::mutex fftw_plan_mutex;  // FFTW plan creation is not thread safe

/// Backward (exp(+j...)) transform of each zero-padded input column,
/// accumulating |bin|^2 into `energy`.
class BackwardFft {
  public:
    explicit BackwardFft(int length) : length_(length) {
        in_ = fftw_alloc_complex(length);
        out_ = fftw_alloc_complex(length);
        std::lock_guard<std::mutex> lock(fftw_plan_mutex);
        plan_ = fftw_plan_dft_1d(length, in_, out_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~BackwardFft() {
        {
            std::lock_guard<std::mutex> lock(fftw_plan_mutex);
            fftw_destroy_plan(plan_);
        }
        fftw_free(in_);
        fftw_free(out_);
    }
    BackwardFft(const BackwardFft&) = delete;
    BackwardFft& operator=(const BackwardFft&) = delete;

    template <typename Loader>
    void add_energy(int filled, Loader load, std::vector<double>& energy) {
        for (int k = 0; k < filled; ++k) {
            const cd v = load(k);
            in_[k][0] = v.real();
            in_[k][1] = v.imag();
        }
        for (int k = filled; k < length_; ++k) in_[k][0] = in_[k][1] = 0.0;
        fftw_execute(plan_);
        for (int k = 0; k < length_; ++k)
            energy[k] += out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
    }

  private:
    int length_;
    fftw_complex* in_;
    fftw_complex* out_;
    fftw_plan plan_;
};

void check_window(const MeasurementTensor& separated, int window_slots) {
    if (window_slots < 1 || window_slots > separated.num_slots)
        throw EmptyWindow("coarse window is empty or exceeds the tensor");
}

}  // namespace

double mle_objective(const ObservationModel& model, const Vec2& p,
                     const MeasurementTensor& separated, const ReflectionSchedule& schedule) {
    return model.objective(p, schedule, separated);
}

double coarse_toa(const MeasurementTensor& separated, const SystemConfig& config,
                  int window_slots) {
    check_window(separated, window_slots);
    const int n_sub = separated.num_subcarriers;
    const int bins = config.oversampling_factor * n_sub;
    BackwardFft fft(bins);
    std::vector<double> energy(bins, 0.0);
    for (int t = 0; t < window_slots; ++t)
        for (int i = 0; i < separated.num_rx; ++i)
            fft.add_energy(n_sub, [&](int n) { return separated.at(n, t, i); }, energy);
    const int best =
        static_cast<int>(std::max_element(energy.begin(), energy.end()) - energy.begin());
    return static_cast<double>(best) / (static_cast<double>(bins) * config.subcarrier_spacing_hz);
}

double coarse_aoa(const MeasurementTensor& separated, const SystemConfig& config,
                  int window_slots) {
    check_window(separated, window_slots);
    const int nr = separated.num_rx;
    const int bins = config.oversampling_factor * nr;
    BackwardFft fft(bins);
    std::vector<double> energy(bins, 0.0);
    for (int t = 0; t < window_slots; ++t)
        for (int n = 0; n < separated.num_subcarriers; ++n)
            fft.add_energy(nr, [&](int i) { return separated.at(n, t, i); }, energy);
    const int best =
        static_cast<int>(std::max_element(energy.begin(), energy.end()) - energy.begin());
    // Bin k corresponds to a propagation cosine of 2k/bins (mod 2); negate to
    // the UE-observer convention so the back-projection round-trips.
    double prop = 2.0 * best / bins;
    if (prop >= 1.0) prop -= 2.0;
    double f = -prop;
    if (f == 1.0) f = -1.0;  // a(1) and a(-1) are the same steering vector
    return f;
}

std::vector<Candidate> coarse_candidates(double toa_hat, double aoa_hat,
                                         const ArrayGeometry& geometry,
                                         const SystemConfig& config) {
    std::vector<Candidate> out;
    const Vec2 bs = geometry.bs_element_positions.front();
    const double f2 = std::min(1.0, aoa_hat * aoa_hat);
    const Vec2 dir(-aoa_hat, -std::sqrt(1.0 - f2));
    (void)config;
    out.reserve(geometry.segment_centers.size());
    for (const Vec2& c : geometry.segment_centers) {
        const double remaining = kSpeedOfLight * toa_hat - (c - bs).norm();
        Candidate cand;
        cand.position = c + remaining * dir;
        cand.geometrically_valid = remaining > 0;
        out.push_back(cand);
    }
    return out;
}

namespace {

// Refinement from an invalid back-projection starts just off the segment
// center instead of behind it.
Vec2 clamped_start(const Candidate& cand, const Vec2& segment_center) {
    if (cand.geometrically_valid) return cand.position;
    Vec2 dir = cand.position - segment_center;
    const double n = dir.norm();
    if (n < 1e-9) return segment_center + Vec2(0.0, -1e-3);
    return segment_center + (1e-3 / n) * dir;
}

}  // namespace

RefineOutcome fine_refine(const Vec2& candidate, const MeasurementTensor& separated,
                          const ReflectionSchedule& schedule, const ObservationModel& model) {
    if (!candidate.allFinite()) throw NonFiniteObjective("refinement start is not finite");
    constexpr int kMaxIterations = 50;
    constexpr double kGradTolerance = 1e-9;
    constexpr double kArmijo = 1e-4;
    constexpr int kMaxBacktracks = 40;

    RefineOutcome out;
    Vec2 p = candidate;
    Vec2 grad;
    double f = model.objective_and_gradient(p, schedule, separated, grad);
    if (!std::isfinite(f)) throw NonFiniteObjective("objective is not finite at the start");
    const double g0_norm = grad.norm();
    out.position = p;
    out.objective = f;
    if (g0_norm == 0.0) {
        out.converged = true;
        return out;
    }

    // The objective oscillates with the carrier fringe period; trial steps
    // beyond a quarter wavelength jump between fringes and make the Armijo
    // decrease test meaningless, so the line search is clipped there.
    const double max_step = 0.25 * model.config().wavelength();

    Eigen::Matrix2d inv_hessian = Eigen::Matrix2d::Identity() / g0_norm;
    for (int k = 1; k <= kMaxIterations; ++k) {
        Vec2 dir = -(inv_hessian * grad);
        if (dir.dot(grad) >= 0) {  // lost curvature; reset to scaled steepest descent
            inv_hessian = Eigen::Matrix2d::Identity() / grad.norm();
            dir = -(inv_hessian * grad);
        }
        const double slope = dir.dot(grad);
        double step = std::min(1.0, max_step / dir.norm());
        double f_new = f;
        Vec2 p_new = p;
        bool accepted = false;
        for (int bt = 0; bt < kMaxBacktracks; ++bt) {
            p_new = p + step * dir;
            if (!p_new.allFinite()) throw NonFiniteObjective("iterate left the numeric domain");
            double trial;
            try {
                trial = model.objective(p_new, schedule, separated);
            } catch (const DegenerateGeometry&) {
                step *= 0.5;
                continue;
            }
            if (!std::isfinite(trial)) throw NonFiniteObjective("objective is not finite");
            if (trial <= f + kArmijo * step * slope) {
                f_new = trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        out.iterations = k;
        if (!accepted) {
            // No achievable decrease: stationary to working precision.
            out.converged = true;
            break;
        }
        if (f - f_new <= 1e-14 * (1.0 + std::abs(f))) {
            // Progress below double-precision resolution of the objective.
            out.position = p_new;
            out.objective = f_new;
            out.converged = true;
            break;
        }

        Vec2 grad_new;
        model.objective_and_gradient(p_new, schedule, separated, grad_new);
        const Vec2 s = p_new - p;
        const Vec2 y = grad_new - grad;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const Eigen::Matrix2d eye = Eigen::Matrix2d::Identity();
            const double rho = 1.0 / sy;
            inv_hessian = (eye - rho * s * y.transpose()) * inv_hessian *
                              (eye - rho * y * s.transpose()) +
                          rho * s * s.transpose();
        }
        p = p_new;
        f = f_new;
        grad = grad_new;
        out.position = p;
        out.objective = f;
        if (grad.norm() <= kGradTolerance * g0_norm) {
            out.converged = true;
            break;
        }
    }
    return out;
}

LocalizationResult localize(const MeasurementTensor& separated,
                            const ReflectionSchedule& schedule, const ObservationModel& model) {
    const SystemConfig& cfg = model.config();
    if (schedule.num_slots() != separated.num_slots)
        throw DimensionMismatch("schedule slots must match tensor slots");
    const int window = separated.num_slots / 2;

    LocalizationResult result;
    CoarseResult& coarse = result.coarse;
    coarse.toa_hat = coarse_toa(separated, cfg, window);
    coarse.aoa_hat = coarse_aoa(separated, cfg, window);
    const auto candidates = coarse_candidates(coarse.toa_hat, coarse.aoa_hat, model.geometry(), cfg);

    const int num_seg = static_cast<int>(candidates.size());
    coarse.candidates.resize(num_seg);
    coarse.geometrically_valid.resize(num_seg);
    coarse.objective_values.resize(num_seg);
    double best_obj = std::numeric_limits<double>::infinity();
    std::vector<Vec2> starts(num_seg);
    for (int l = 0; l < num_seg; ++l) {
        coarse.candidates[l] = candidates[l].position;
        coarse.geometrically_valid[l] = candidates[l].geometrically_valid;
        starts[l] = clamped_start(candidates[l], model.geometry().segment_centers[l]);
        coarse.objective_values[l] = model.objective(starts[l], schedule, separated);
        if (coarse.objective_values[l] < best_obj) {
            best_obj = coarse.objective_values[l];
            coarse.best_index = l;
        }
    }

    FineResult& fine = result.fine;
    fine.refined.resize(num_seg);
    fine.objective_values.resize(num_seg);
    fine.iterations_used.resize(num_seg);
    fine.converged.resize(num_seg);
    double best_fine = std::numeric_limits<double>::infinity();
    for (int l = 0; l < num_seg; ++l) {
        const RefineOutcome r = fine_refine(starts[l], separated, schedule, model);
        fine.refined[l] = r.position;
        fine.objective_values[l] = r.objective;
        fine.iterations_used[l] = r.iterations;
        fine.converged[l] = r.converged;
        if (r.objective < best_fine) {
            best_fine = r.objective;
            fine.best_index = l;
            fine.final_estimate = r.position;
        }
    }
    return result;
}

}  // namespace risloc
