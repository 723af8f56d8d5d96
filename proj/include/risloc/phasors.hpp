#pragma once

#include <cmath>
#include <complex>

namespace risloc {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

using cd = std::complex<double>;

inline cd unit_phasor(double theta) { return {std::cos(theta), std::sin(theta)}; }

// exp(-j 2 pi tau f). Every model and synthesis path goes through this one
// helper so that identical (tau, f) pairs produce bit-identical phasors.
inline cd delay_phasor(double tau, double freq) { return unit_phasor(-2.0 * kPi * (tau * freq)); }

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

// Wrap an angle difference into (-pi, pi].
inline double wrap_phase(double theta) {
    double w = std::remainder(theta, 2.0 * kPi);
    if (w <= -kPi) w += 2.0 * kPi;
    return w;
}

}  // namespace risloc
