#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "risloc/phasors.hpp"

namespace risloc {

using Vec2 = Eigen::Vector2d;

struct Rect {
    double xmin = 0, xmax = 0, ymin = 0, ymax = 0;

    bool contains(const Vec2& p) const {
        return p.x() >= xmin && p.x() <= xmax && p.y() >= ymin && p.y() <= ymax;
    }
    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
};

/// All scenario constants. Field names match the flat keys of the config file
/// one-to-one (SI units throughout).
struct SystemConfig {
    double carrier_frequency_hz = 60e9;      // f_c
    double subcarrier_spacing_hz = 120e3;    // delta f
    int num_subcarriers = 128;               // N
    int num_slots = 16;                      // T
    int num_tx_antennas = 32;                // N_T
    int num_rx_antennas = 16;                // N_R
    int num_ris_elements = 256;              // M
    int num_partitions = 4;                  // L
    int phase_bits = 2;                      // b
    double tx_power_watts = 1.0;             // P_T (30 dBm)
    double noise_power_watts = 0.1;          // sigma^2
    double pathloss_exponent = 2.08;         // mu
    Vec2 bs_position{0.0, 0.0};
    Vec2 ris_center{15.0, 40.0};
    Rect area_of_interest{10.0, 30.0, 10.0, 30.0};
    double min_distance_hint = 10.3;         // D; 10.3 m is the smallest round value
                                             // for which L=4 satisfies the partition
                                             // bound at M=256, f_c=60 GHz
    int oversampling_factor = 4;             // c_0
    int num_scatterers = 4;                  // K
    std::uint64_t rng_seed = 12345;
    bool matched_precoder = true;            // pilot beam aimed at the RIS center
    bool nlos_common_paths = false;          // shared ToA/loss per scatter path

    double wavelength() const { return kSpeedOfLight / carrier_frequency_hz; }
    double snr_db() const { return linear_to_db(tx_power_watts / noise_power_watts); }
    void set_snr_db(double snr) { noise_power_watts = tx_power_watts / db_to_linear(snr); }

    /// Frequency of subcarrier n (1-based): f_c + (n - (N+1)/2) * delta_f.
    double subcarrier_frequency(int n) const {
        return carrier_frequency_hz +
               (static_cast<double>(n) - 0.5 * (num_subcarriers + 1)) * subcarrier_spacing_hz;
    }

    /// Throws InvalidInput when any invariant is violated.
    void validate() const;

    /// Loads a flat key-value text file ("key = value", '#' comments).
    static SystemConfig load(const std::string& path);
};

/// Element positions of all three arrays. ULAs along x with lambda/2 spacing.
struct ArrayGeometry {
    std::vector<Vec2> bs_element_positions;   // first element at bs_position
    std::vector<Vec2> ris_element_positions;  // centered on ris_center
    std::vector<Vec2> segment_centers;        // centroid of each segment
    double wavelength = 0;
    int num_partitions = 1;
    int num_ue_antennas = 1;

    int segment_size() const {
        return static_cast<int>(ris_element_positions.size()) / num_partitions;
    }
    /// UE elements for reference position p (first element at p).
    std::vector<Vec2> ue_element_positions_for(const Vec2& p) const;
};

/// Per-segment propagation parameters for one UE position.
///
/// Direction-cosine convention: each value is the x-component of the unit
/// vector from the observing array's reference point toward the other
/// endpoint, so aoa_ris = -aod_bs and aoa_ue = -aod_ris.
struct PathGeometry {
    std::vector<double> toa_bs_ris;      // tau^{M,T}, seconds
    std::vector<double> toa_ris_ue;      // tau^{R,M}, seconds
    std::vector<double> aod_bs;          // cos theta^{M,T}: BS -> segment
    std::vector<double> aoa_ris;         // cos phi^{M,T}:  segment -> BS
    std::vector<double> aod_ris;         // cos theta^{R,M}: segment -> UE
    std::vector<double> aoa_ue;          // cos phi^{R,M}:  UE -> segment
    std::vector<double> pathloss_bs_ris; // rho^{M,T}
    std::vector<double> pathloss_ris_ue; // rho^{R,M}

    int num_segments() const { return static_cast<int>(toa_bs_ris.size()); }
};

/// Smallest L that divides M and satisfies L >= sqrt(lambda/(2 D)) * M.
int min_partitions(int num_elements, double wavelength, double min_distance);

ArrayGeometry build_geometry(const SystemConfig& config);

PathGeometry path_geometry(const ArrayGeometry& geometry, const Vec2& ue_position,
                           const SystemConfig& config);

}  // namespace risloc
