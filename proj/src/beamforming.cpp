#include "risloc/beamforming.hpp"

#include <algorithm>
#include <cmath>

#include "risloc/channel.hpp"
#include "risloc/errors.hpp"

namespace risloc {

double internal_angle(cd x, cd y) {
    if (x == cd(0, 0) || y == cd(0, 0)) throw ZeroOperand("internal_angle: zero operand");
    return kPi - std::abs(std::abs(std::arg(x) - std::arg(y)) - kPi);
}

namespace {

void require_nonzero(const Eigen::VectorXcd& g) {
    for (Eigen::Index k = 0; k < g.size(); ++k)
        if (g[k] == cd(0, 0)) throw ZeroChannelEntry("channel response has a zero entry");
}

// round half away from zero, as std::round provides.
inline int beam_state(double arg_g, double omega, int states) {
    const double x = (states / (2.0 * kPi)) * (omega - arg_g);
    int s = static_cast<int>(std::llround(x)) % states;
    if (s < 0) s += states;
    return s;
}

double gain_at_omega(const Eigen::VectorXcd& g, const std::vector<double>& args, double omega,
                     int states, const std::vector<cd>& table) {
    cd acc = 0;
    for (Eigen::Index k = 0; k < g.size(); ++k)
        acc += table[beam_state(args[k], omega, states)] * g[k];
    return std::norm(acc);
}

}  // namespace

std::vector<int> omega_beamformer_indices(const Eigen::VectorXcd& g, double omega,
                                          int phase_bits) {
    require_nonzero(g);
    const int states = 1 << phase_bits;
    std::vector<int> idx(g.size());
    for (Eigen::Index k = 0; k < g.size(); ++k) idx[k] = beam_state(std::arg(g[k]), omega, states);
    return idx;
}

Eigen::VectorXcd omega_beamformer(const Eigen::VectorXcd& g, double omega, int phase_bits) {
    const auto idx = omega_beamformer_indices(g, omega, phase_bits);
    const auto table = make_phase_table(phase_bits);
    Eigen::VectorXcd psi(g.size());
    for (std::size_t k = 0; k < idx.size(); ++k) psi[static_cast<Eigen::Index>(k)] = table[idx[k]];
    return psi;
}

std::vector<double> candidate_set(const Eigen::VectorXcd& g, int phase_bits) {
    require_nonzero(g);
    const int states = 1 << phase_bits;
    const double step = 2.0 * kPi / states;
    std::vector<double> omegas;
    omegas.reserve(static_cast<std::size_t>(states) * g.size());
    for (Eigen::Index k = 0; k < g.size(); ++k) {
        const double arg_g = std::arg(g[k]);
        const double base = std::ceil(-states * arg_g / (2.0 * kPi) - 0.5);
        for (int s = 0; s < states; ++s) {
            double w = arg_g + step * (base + s + 0.5);
            w = std::fmod(w, 2.0 * kPi);
            if (w < 0) w += 2.0 * kPi;
            omegas.push_back(w);
        }
    }
    std::sort(omegas.begin(), omegas.end());
    omegas.erase(std::unique(omegas.begin(), omegas.end()), omegas.end());
    return omegas;
}

SegmentSolution fpb_segment(const Eigen::VectorXcd& g, int phase_bits) {
    const auto omegas = candidate_set(g, phase_bits);
    const int states = 1 << phase_bits;
    const auto table = make_phase_table(phase_bits);
    std::vector<double> args(g.size());
    for (Eigen::Index k = 0; k < g.size(); ++k) args[k] = std::arg(g[k]);

    // The objective is piecewise constant with jumps at the breakpoints. A
    // breakpoint computed in floating point can land a few ulp on either side
    // of the true discontinuity, so evaluating the breakpoints alone may skip
    // a piece; the midpoints of consecutive breakpoints sample every piece
    // interior and are insensitive to that rounding.
    std::vector<double> evals;
    evals.reserve(2 * omegas.size());
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        evals.push_back(omegas[i]);
        const double next =
            i + 1 < omegas.size() ? omegas[i + 1] : omegas.front() + 2.0 * kPi;
        double mid = 0.5 * (omegas[i] + next);
        if (mid >= 2.0 * kPi) mid -= 2.0 * kPi;
        evals.push_back(mid);
    }
    std::sort(evals.begin(), evals.end());

    double best_gain = -1.0;
    double best_omega = 0.0;
    for (const double w : evals) {
        const double f = gain_at_omega(g, args, w, states, table);
        if (f > best_gain) {
            best_gain = f;
            best_omega = w;
        }
    }
    SegmentSolution sol;
    sol.omega = best_omega;
    sol.indices = omega_beamformer_indices(g, best_omega, phase_bits);
    sol.psi.resize(g.size());
    for (Eigen::Index k = 0; k < g.size(); ++k) sol.psi[k] = table[sol.indices[k]];
    sol.gain = best_gain;
    return sol;
}

Eigen::VectorXcd cpp(const Eigen::VectorXcd& g, int phase_bits) {
    return omega_beamformer(g, 0.0, phase_bits);
}

std::vector<int> cpp_indices(const Eigen::VectorXcd& g, int phase_bits) {
    return omega_beamformer_indices(g, 0.0, phase_bits);
}

namespace {

// Depth-first over index vectors in lexicographic order with running partial
// sums; strict improvement keeps the lexicographically smallest maximizer.
struct OracleSearch {
    const Eigen::VectorXcd& g;
    const std::vector<cd>& table;
    int states;
    int len;
    std::vector<int> current;
    std::vector<int> best;
    double best_gain = -1.0;

    void run(int depth, cd partial) {
        if (depth == len) {
            const double f = std::norm(partial);
            if (f > best_gain) {
                best_gain = f;
                best = current;
            }
            return;
        }
        for (int s = 0; s < states; ++s) {
            current[depth] = s;
            run(depth + 1, partial + table[s] * g[depth]);
        }
    }
};

}  // namespace

SegmentSolution exhaustive_oracle(const Eigen::VectorXcd& g, int phase_bits) {
    require_nonzero(g);
    const int len = static_cast<int>(g.size());
    if (phase_bits * len > 24) throw TooLarge("exhaustive search beyond 2^24 combinations");
    const int states = 1 << phase_bits;
    const auto table = make_phase_table(phase_bits);

    OracleSearch search{g, table, states, len, std::vector<int>(len, 0), {}, -1.0};
    search.run(0, cd(0, 0));

    SegmentSolution sol;
    sol.indices = search.best;
    sol.psi.resize(len);
    cd acc = 0;
    for (int k = 0; k < len; ++k) {
        sol.psi[k] = table[search.best[k]];
        acc += sol.psi[k] * g[k];
    }
    sol.gain = std::norm(acc);
    sol.omega = std::arg(acc);
    if (sol.omega < 0) sol.omega += 2.0 * kPi;
    return sol;
}

std::vector<int> BeamformerSolution::stacked_indices() const {
    std::vector<int> idx;
    for (const auto& s : segments) idx.insert(idx.end(), s.indices.begin(), s.indices.end());
    return idx;
}

namespace {

BeamformerSolution solve_per_segment(const PathGeometry& path, const SystemConfig& config,
                                     BeamformerMethod method) {
    BeamformerSolution out;
    out.method = method;
    out.segments.reserve(path.num_segments());
    for (int l = 0; l < path.num_segments(); ++l) {
        const Eigen::VectorXcd g = end_to_end_response(path, l, config);
        SegmentSolution sol;
        if (method == BeamformerMethod::Fpb) {
            sol = fpb_segment(g, config.phase_bits);
        } else {
            sol.indices = cpp_indices(g, config.phase_bits);
            sol.omega = 0.0;
            const auto table = make_phase_table(config.phase_bits);
            sol.psi.resize(g.size());
            cd acc = 0;
            for (Eigen::Index k = 0; k < g.size(); ++k) {
                sol.psi[k] = table[sol.indices[k]];
                acc += sol.psi[k] * g[k];
            }
            sol.gain = std::norm(acc);
        }
        out.total_gain += sol.gain;
        out.segments.push_back(std::move(sol));
    }
    return out;
}

}  // namespace

BeamformerSolution fpb(const PathGeometry& path, const SystemConfig& config) {
    return solve_per_segment(path, config, BeamformerMethod::Fpb);
}

BeamformerSolution cpp_solution(const PathGeometry& path, const SystemConfig& config) {
    return solve_per_segment(path, config, BeamformerMethod::Cpp);
}

ReflectionSchedule extend_balanced(const BeamformerSolution& solution,
                                   const SystemConfig& config) {
    const int window = config.num_slots / 2;
    const int states = 1 << config.phase_bits;
    if (window % states != 0)
        throw InvalidWindow("T/2 must be a multiple of 2^b for the rotation extension");
    return ReflectionSchedule::rotation_sequence(solution.stacked_indices(), config.phase_bits,
                                                 config.num_partitions, window);
}

double gain(const Eigen::VectorXcd& psi, const std::vector<Eigen::VectorXcd>& g_segments) {
    Eigen::Index total = 0;
    for (const auto& g : g_segments) total += g.size();
    if (psi.size() != total) throw DimensionMismatch("psi length must match stacked segments");
    double f = 0;
    Eigen::Index off = 0;
    for (const auto& g : g_segments) {
        const cd acc = psi.segment(off, g.size()).transpose() * g;
        f += std::norm(acc);
        off += g.size();
    }
    return f;
}

}  // namespace risloc
