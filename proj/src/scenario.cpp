#include "risloc/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "risloc/errors.hpp"

namespace risloc {

void SystemConfig::validate() const {
    if (num_tx_antennas < 1 || num_rx_antennas < 1 || num_ris_elements < 1 ||
        num_subcarriers < 1 || num_slots < 1)
        throw InvalidInput("array/observation sizes must be >= 1");
    if (phase_bits < 1) throw InvalidInput("phase_bits must be >= 1");
    if (num_partitions < 1 || num_ris_elements % num_partitions != 0)
        throw InvalidInput("num_partitions must divide num_ris_elements");
    if (num_slots % (1 << (phase_bits + 1)) != 0)
        throw InvalidInput("num_slots must be a multiple of 2^(phase_bits+1)");
    if (carrier_frequency_hz <= 0 || subcarrier_spacing_hz <= 0)
        throw InvalidInput("frequencies must be positive");
    if (tx_power_watts <= 0 || noise_power_watts <= 0)
        throw InvalidInput("powers must be positive");
    if (pathloss_exponent <= 2.0) throw InvalidInput("pathloss_exponent must exceed 2");
    if (min_distance_hint <= 0) throw InvalidInput("min_distance_hint must be positive");
    if (oversampling_factor < 1) throw InvalidInput("oversampling_factor must be >= 1");
    if (num_scatterers < 0) throw InvalidInput("num_scatterers must be >= 0");
    if (area_of_interest.xmin >= area_of_interest.xmax ||
        area_of_interest.ymin >= area_of_interest.ymax)
        throw InvalidInput("area_of_interest is empty");
    const double bound = std::sqrt(wavelength() / (2.0 * min_distance_hint)) *
                         static_cast<double>(num_ris_elements);
    if (static_cast<double>(num_partitions) < std::ceil(bound) - 1e-12)
        throw InvalidInput("num_partitions violates the far-field partition bound");
}

namespace {

double parse_double(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        throw InvalidInput("config: bad numeric value for " + key);
    }
    if (pos != value.size()) throw InvalidInput("config: trailing junk after value of " + key);
    return v;
}

std::vector<double> parse_doubles(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) out.push_back(parse_double(key, tok));
    return out;
}

}  // namespace

SystemConfig SystemConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    SystemConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw InvalidInput("config line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw InvalidInput("config line " + std::to_string(lineno) + ": empty key");

        if (key == "carrier_frequency_hz") cfg.carrier_frequency_hz = parse_double(key, value);
        else if (key == "subcarrier_spacing_hz") cfg.subcarrier_spacing_hz = parse_double(key, value);
        else if (key == "num_subcarriers") cfg.num_subcarriers = static_cast<int>(parse_double(key, value));
        else if (key == "num_slots") cfg.num_slots = static_cast<int>(parse_double(key, value));
        else if (key == "num_tx_antennas") cfg.num_tx_antennas = static_cast<int>(parse_double(key, value));
        else if (key == "num_rx_antennas") cfg.num_rx_antennas = static_cast<int>(parse_double(key, value));
        else if (key == "num_ris_elements") cfg.num_ris_elements = static_cast<int>(parse_double(key, value));
        else if (key == "num_partitions") cfg.num_partitions = static_cast<int>(parse_double(key, value));
        else if (key == "phase_bits") cfg.phase_bits = static_cast<int>(parse_double(key, value));
        else if (key == "tx_power_watts") cfg.tx_power_watts = parse_double(key, value);
        else if (key == "noise_power_watts") cfg.noise_power_watts = parse_double(key, value);
        else if (key == "pathloss_exponent") cfg.pathloss_exponent = parse_double(key, value);
        else if (key == "min_distance_hint") cfg.min_distance_hint = parse_double(key, value);
        else if (key == "oversampling_factor") cfg.oversampling_factor = static_cast<int>(parse_double(key, value));
        else if (key == "num_scatterers") cfg.num_scatterers = static_cast<int>(parse_double(key, value));
        else if (key == "rng_seed") cfg.rng_seed = static_cast<std::uint64_t>(parse_double(key, value));
        else if (key == "matched_precoder") cfg.matched_precoder = parse_double(key, value) != 0.0;
        else if (key == "nlos_common_paths") cfg.nlos_common_paths = parse_double(key, value) != 0.0;
        else if (key == "bs_position") {
            const auto v = parse_doubles(key, value);
            if (v.size() != 2) throw InvalidInput("bs_position needs two values");
            cfg.bs_position = Vec2(v[0], v[1]);
        } else if (key == "ris_center") {
            const auto v = parse_doubles(key, value);
            if (v.size() != 2) throw InvalidInput("ris_center needs two values");
            cfg.ris_center = Vec2(v[0], v[1]);
        } else if (key == "area_of_interest") {
            const auto v = parse_doubles(key, value);
            if (v.size() != 4) throw InvalidInput("area_of_interest needs xmin xmax ymin ymax");
            cfg.area_of_interest = Rect{v[0], v[1], v[2], v[3]};
        } else {
            throw InvalidInput("config: unknown key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

int min_partitions(int num_elements, double wavelength, double min_distance) {
    if (num_elements < 1 || wavelength <= 0 || min_distance <= 0)
        throw InvalidInput("min_partitions: arguments must be positive");
    const double bound = std::sqrt(wavelength / (2.0 * min_distance)) * num_elements;
    for (int l = 1; l <= num_elements; ++l) {
        if (num_elements % l != 0) continue;
        if (static_cast<double>(l) >= bound) return l;
    }
    // L = M always divides M; reaching here means even M < bound.
    throw NoValidPartition("no divisor of M satisfies the far-field bound");
}

std::vector<Vec2> ArrayGeometry::ue_element_positions_for(const Vec2& p) const {
    std::vector<Vec2> out;
    out.reserve(num_ue_antennas);
    const double h = wavelength / 2.0;
    for (int i = 0; i < num_ue_antennas; ++i) out.push_back(p + Vec2(i * h, 0.0));
    return out;
}

ArrayGeometry build_geometry(const SystemConfig& config) {
    config.validate();
    ArrayGeometry g;
    g.wavelength = config.wavelength();
    g.num_partitions = config.num_partitions;
    g.num_ue_antennas = config.num_rx_antennas;
    const double h = g.wavelength / 2.0;

    g.bs_element_positions.reserve(config.num_tx_antennas);
    for (int j = 0; j < config.num_tx_antennas; ++j)
        g.bs_element_positions.push_back(config.bs_position + Vec2(j * h, 0.0));

    const int m_total = config.num_ris_elements;
    g.ris_element_positions.reserve(m_total);
    for (int m = 0; m < m_total; ++m) {
        const double off = (m - 0.5 * (m_total - 1)) * h;
        g.ris_element_positions.push_back(config.ris_center + Vec2(off, 0.0));
    }

    const int seg = m_total / config.num_partitions;
    g.segment_centers.reserve(config.num_partitions);
    for (int l = 0; l < config.num_partitions; ++l) {
        Vec2 c = Vec2::Zero();
        for (int k = 0; k < seg; ++k) c += g.ris_element_positions[l * seg + k];
        g.segment_centers.push_back(c / seg);
    }
    return g;
}

PathGeometry path_geometry(const ArrayGeometry& geometry, const Vec2& ue_position,
                           const SystemConfig& config) {
    PathGeometry pg;
    const int num_seg = static_cast<int>(geometry.segment_centers.size());
    pg.toa_bs_ris.resize(num_seg);
    pg.toa_ris_ue.resize(num_seg);
    pg.aod_bs.resize(num_seg);
    pg.aoa_ris.resize(num_seg);
    pg.aod_ris.resize(num_seg);
    pg.aoa_ue.resize(num_seg);
    pg.pathloss_bs_ris.resize(num_seg);
    pg.pathloss_ris_ue.resize(num_seg);

    const Vec2 bs = geometry.bs_element_positions.front();
    const double mu = config.pathloss_exponent;
    for (int l = 0; l < num_seg; ++l) {
        const Vec2 c = geometry.segment_centers[l];
        const double d_bs = (c - bs).norm();
        const double d_ue = (c - ue_position).norm();
        if (d_ue < 1e-6 || d_bs < 1e-6)
            throw DegenerateGeometry("UE or BS coincides with a RIS segment center");
        pg.toa_bs_ris[l] = d_bs / kSpeedOfLight;
        pg.toa_ris_ue[l] = d_ue / kSpeedOfLight;
        pg.pathloss_bs_ris[l] = std::pow(d_bs, -mu);
        pg.pathloss_ris_ue[l] = std::pow(d_ue, -mu);
        pg.aod_bs[l] = (c.x() - bs.x()) / d_bs;
        pg.aoa_ris[l] = -pg.aod_bs[l];
        pg.aod_ris[l] = (ue_position.x() - c.x()) / d_ue;
        pg.aoa_ue[l] = -pg.aod_ris[l];
    }
    return pg;
}

}  // namespace risloc
