#include "risloc/schedule.hpp"

#include <fstream>
#include <sstream>

#include "risloc/errors.hpp"
#include "risloc/scenario.hpp"

namespace risloc {

std::vector<cd> make_phase_table(int phase_bits) {
    if (phase_bits < 1) throw InvalidInput("phase_bits must be >= 1");
    const int n = 1 << phase_bits;
    std::vector<cd> table(n);
    for (int s = 0; s < n / 2; ++s) {
        table[s] = unit_phasor(2.0 * kPi * s / n);
        table[s + n / 2] = -table[s];
    }
    return table;
}

ReflectionSchedule::ReflectionSchedule(int num_elements, int num_slots, int phase_bits,
                                       int num_partitions)
    : num_elements_(num_elements),
      num_slots_(num_slots),
      phase_bits_(phase_bits),
      num_partitions_(num_partitions),
      indices_(static_cast<std::size_t>(num_elements) * num_slots, 0),
      table_(make_phase_table(phase_bits)) {
    if (num_elements < 1 || num_slots < 1) throw InvalidInput("schedule dimensions must be >= 1");
    if (num_partitions < 1 || num_elements % num_partitions != 0)
        throw InvalidInput("num_partitions must divide num_elements");
}

void ReflectionSchedule::set_index(int element, int slot, int state) {
    if (state < 0 || state >= num_states()) throw InvalidInput("phase index out of range");
    indices_[element * num_slots_ + slot] = static_cast<std::int16_t>(state);
}

Eigen::VectorXcd ReflectionSchedule::column(int slot) const {
    Eigen::VectorXcd psi(num_elements_);
    for (int m = 0; m < num_elements_; ++m) psi[m] = value(m, slot);
    return psi;
}

Eigen::VectorXcd ReflectionSchedule::segment_column(int slot, int segment) const {
    const int k = segment_size();
    Eigen::VectorXcd psi(k);
    for (int i = 0; i < k; ++i) psi[i] = value(segment * k + i, slot);
    return psi;
}

bool ReflectionSchedule::is_balanced(int first, int last) const {
    if (first < 0 || last > num_slots_ || first >= last) return false;
    const int half = num_states() / 2;
    std::vector<int> counts(num_states());
    for (int m = 0; m < num_elements_; ++m) {
        std::fill(counts.begin(), counts.end(), 0);
        for (int t = first; t < last; ++t) ++counts[index(m, t)];
        for (int s = 0; s < half; ++s)
            if (counts[s] != counts[s + half]) return false;
    }
    return true;
}

ReflectionSchedule ReflectionSchedule::concat(const ReflectionSchedule& tail) const {
    if (tail.num_elements_ != num_elements_ || tail.phase_bits_ != phase_bits_ ||
        tail.num_partitions_ != num_partitions_)
        throw DimensionMismatch("schedule concat: incompatible shapes");
    ReflectionSchedule out(num_elements_, num_slots_ + tail.num_slots_, phase_bits_,
                           num_partitions_);
    for (int m = 0; m < num_elements_; ++m) {
        for (int t = 0; t < num_slots_; ++t) out.set_index(m, t, index(m, t));
        for (int t = 0; t < tail.num_slots_; ++t)
            out.set_index(m, num_slots_ + t, tail.index(m, t));
    }
    return out;
}

ReflectionSchedule ReflectionSchedule::antipodal_random(std::mt19937_64& rng,
                                                        const SystemConfig& config,
                                                        int window_length) {
    if (window_length < 2 || window_length % 2 != 0)
        throw InvalidWindow("balanced window length must be even");
    ReflectionSchedule s(config.num_ris_elements, window_length, config.phase_bits,
                         config.num_partitions);
    const int states = s.num_states();
    const int half = states / 2;
    std::uniform_int_distribution<int> dist(0, states - 1);
    for (int m = 0; m < s.num_elements_; ++m) {
        for (int t = 0; t < window_length; t += 2) {
            const int a = dist(rng);
            s.set_index(m, t, a);
            s.set_index(m, t + 1, (a + half) % states);
        }
    }
    return s;
}

ReflectionSchedule ReflectionSchedule::rotation_sequence(const std::vector<int>& base_indices,
                                                         int phase_bits, int num_partitions,
                                                         int num_cols) {
    const int m_total = static_cast<int>(base_indices.size());
    const int states = 1 << phase_bits;
    if (num_cols % states != 0)
        throw InvalidWindow("rotation sequence length must be a multiple of 2^b");
    ReflectionSchedule s(m_total, num_cols, phase_bits, num_partitions);
    for (int m = 0; m < m_total; ++m) {
        const int base = base_indices[m];
        if (base < 0 || base >= states) throw InvalidInput("base phase index out of range");
        for (int t = 0; t < num_cols; ++t) s.set_index(m, t, (base + t) % states);
    }
    return s;
}

void ReflectionSchedule::to_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (int m = 0; m < num_elements_; ++m) {
        for (int t = 0; t < num_slots_; ++t) {
            if (t) out << ',';
            out << index(m, t);
        }
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

ReflectionSchedule ReflectionSchedule::from_csv(const std::string& path, int phase_bits,
                                                int num_partitions) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open schedule CSV: " + path);
    std::vector<std::vector<int>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<int> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stoi(cell));
        if (!rows.empty() && row.size() != rows.front().size())
            throw IoError("ragged schedule CSV: " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError("empty schedule CSV: " + path);
    ReflectionSchedule s(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()),
                         phase_bits, num_partitions);
    for (int m = 0; m < s.num_elements(); ++m)
        for (int t = 0; t < s.num_slots(); ++t) s.set_index(m, t, rows[m][t]);
    return s;
}

}  // namespace risloc
