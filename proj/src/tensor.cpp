#include "risloc/tensor.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "risloc/errors.hpp"

namespace risloc {

double MeasurementTensor::frobenius_norm() const {
    double acc = 0;
    for (const cd& v : data) acc += std::norm(v);
    return std::sqrt(acc);
}

MeasurementTensor MeasurementTensor::window(int slots) const {
    if (slots < 1 || slots > num_slots) throw InvalidWindow("window exceeds tensor slots");
    MeasurementTensor w(num_subcarriers, slots, num_rx, kind);
    for (int n = 0; n < num_subcarriers; ++n)
        for (int t = 0; t < slots; ++t)
            for (int i = 0; i < num_rx; ++i) w.at(n, t, i) = at(n, t, i);
    return w;
}

void MeasurementTensor::dump_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "n,t,i,re,im\n";
    char buf[128];
    for (int n = 0; n < num_subcarriers; ++n)
        for (int t = 0; t < num_slots; ++t)
            for (int i = 0; i < num_rx; ++i) {
                const cd& v = at(n, t, i);
                std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.17g,%.17g\n", n, t, i, v.real(),
                              v.imag());
                out << buf;
            }
    if (!out) throw IoError("write failed: " + path);
}

MeasurementTensor concat_slots(const MeasurementTensor& head, const MeasurementTensor& tail) {
    if (head.num_subcarriers != tail.num_subcarriers || head.num_rx != tail.num_rx)
        throw DimensionMismatch("concat_slots: incompatible tensors");
    MeasurementTensor out(head.num_subcarriers, head.num_slots + tail.num_slots, head.num_rx,
                          head.kind);
    for (int n = 0; n < out.num_subcarriers; ++n)
        for (int i = 0; i < out.num_rx; ++i) {
            for (int t = 0; t < head.num_slots; ++t) out.at(n, t, i) = head.at(n, t, i);
            for (int t = 0; t < tail.num_slots; ++t)
                out.at(n, head.num_slots + t, i) = tail.at(n, t, i);
        }
    return out;
}

void MeasurementTensor::dump_binary(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const cd& v : data) {
        const double re = v.real(), im = v.imag();
        out.write(reinterpret_cast<const char*>(&re), sizeof(re));
        out.write(reinterpret_cast<const char*>(&im), sizeof(im));
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace risloc
