#pragma once

#include <complex>
#include <string>
#include <vector>

#include "risloc/phasors.hpp"

namespace risloc {

/// Complex N x T x N_R observation tensor, stored row-major in index order
/// (n, t, i): subcarrier-major, then slot, then receive antenna.
struct MeasurementTensor {
    enum class Kind { Raw, Separated, Model };

    int num_subcarriers = 0;   // N
    int num_slots = 0;         // T
    int num_rx = 0;            // N_R
    Kind kind = Kind::Raw;
    std::vector<cd> data;

    MeasurementTensor() = default;
    MeasurementTensor(int n, int t, int nr, Kind k)
        : num_subcarriers(n), num_slots(t), num_rx(nr), kind(k),
          data(static_cast<std::size_t>(n) * t * nr) {}

    std::size_t offset(int n, int t, int i) const {
        return (static_cast<std::size_t>(n) * num_slots + t) * num_rx + i;
    }
    cd& at(int n, int t, int i) { return data[offset(n, t, i)]; }
    const cd& at(int n, int t, int i) const { return data[offset(n, t, i)]; }

    double frobenius_norm() const;

    /// First `slots` time slots as a tensor of the same kind.
    MeasurementTensor window(int slots) const;

    /// Flat dump, one entry per line: n,t,i,re,im (indices 0-based).
    void dump_csv(const std::string& path) const;
    /// Raw little-endian doubles (re, im alternating) in (n, t, i) order.
    void dump_binary(const std::string& path) const;
};

/// Joins two tensors along the slot dimension.
MeasurementTensor concat_slots(const MeasurementTensor& head, const MeasurementTensor& tail);

}  // namespace risloc
