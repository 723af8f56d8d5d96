#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "risloc/phasors.hpp"

namespace risloc {

struct SystemConfig;

/// M x T matrix of discrete RIS phase indices, entries in [0, 2^b).
///
/// The complex lookup table is built so that table[s + 2^(b-1)] is exactly
/// -table[s]; antipodal slot pairs therefore sum to exactly zero in floating
/// point, not just within rounding.
class ReflectionSchedule {
  public:
    ReflectionSchedule(int num_elements, int num_slots, int phase_bits, int num_partitions);

    int num_elements() const { return num_elements_; }
    int num_slots() const { return num_slots_; }
    int phase_bits() const { return phase_bits_; }
    int num_partitions() const { return num_partitions_; }
    int num_states() const { return 1 << phase_bits_; }
    int segment_size() const { return num_elements_ / num_partitions_; }

    int index(int element, int slot) const { return indices_[element * num_slots_ + slot]; }
    void set_index(int element, int slot, int state);
    cd value(int element, int slot) const { return table_[index(element, slot)]; }
    const std::vector<cd>& phase_table() const { return table_; }

    /// psi_t as a length-M complex column.
    Eigen::VectorXcd column(int slot) const;
    /// psi_{t,l}: the segment-l block of psi_t.
    Eigen::VectorXcd segment_column(int slot, int segment) const;

    /// Exact balance check over slots [first, last): for a power-of-two
    /// alphabet every vanishing sum of roots of unity decomposes into
    /// antipodal pairs, so equality of the paired state counts is a complete
    /// integer-arithmetic test.
    bool is_balanced(int first, int last) const;
    bool is_balanced() const { return is_balanced(0, num_slots_); }

    /// Appends the slots of `tail` after this schedule's slots.
    ReflectionSchedule concat(const ReflectionSchedule& tail) const;

    /// Per-element antipodal random pairs; balanced over every even prefix.
    static ReflectionSchedule antipodal_random(std::mt19937_64& rng, const SystemConfig& config,
                                               int window_length);

    /// Columns t = 1..num_cols with column t = exp(j 2 pi (t-1)/2^b) * base,
    /// realized as index shifts; balanced when num_cols is a multiple of 2^b.
    static ReflectionSchedule rotation_sequence(const std::vector<int>& base_indices,
                                                int phase_bits, int num_partitions, int num_cols);

    /// Integer CSV, M rows x T columns.
    void to_csv(const std::string& path) const;
    static ReflectionSchedule from_csv(const std::string& path, int phase_bits,
                                       int num_partitions);

  private:
    int num_elements_;
    int num_slots_;
    int phase_bits_;
    int num_partitions_;
    std::vector<std::int16_t> indices_;
    std::vector<cd> table_;
};

/// Builds the exactly antipodal-symmetric table of the 2^b phase states.
std::vector<cd> make_phase_table(int phase_bits);

}  // namespace risloc
