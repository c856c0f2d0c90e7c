#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"

namespace fedsim {

// Flat model state. Every aggregation strategy treats the model as one flat
// vector of doubles, so a plain vector is the whole representation.
using ParameterVector = std::vector<double>;

inline bool all_finite(const ParameterVector& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

inline void require_finite(const ParameterVector& v, const char* what) {
    if (!all_finite(v)) throw NumericError(std::string(what) + ": non-finite value");
}

// Elementwise sum_j weights[j] * models[j]. Summation order is client-index
// ascending, fixed, so repeated runs are bit-identical.
inline ParameterVector weighted_sum(std::span<const ParameterVector> models,
                                    std::span<const double> weights) {
    if (models.empty()) throw DimensionError("weighted_sum: empty model list");
    if (models.size() != weights.size())
        throw DimensionError("weighted_sum: " + std::to_string(models.size()) + " models vs " +
                             std::to_string(weights.size()) + " weights");
    const std::size_t len = models[0].size();
    for (const auto& m : models) {
        if (m.size() != len) throw DimensionError("weighted_sum: model length mismatch");
        require_finite(m, "weighted_sum input");
    }
    for (double w : weights) {
        if (!std::isfinite(w)) throw NumericError("weighted_sum: non-finite weight");
    }
    ParameterVector out(len, 0.0);
    for (std::size_t j = 0; j < models.size(); ++j) {
        const double w = weights[j];
        for (std::size_t k = 0; k < len; ++k) out[k] += w * models[j][k];
    }
    require_finite(out, "weighted_sum output");
    return out;
}

inline double l2_distance(const ParameterVector& a, const ParameterVector& b) {
    if (a.size() != b.size()) throw DimensionError("l2_distance: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

// Checkpoint format: "fedsim-params v1 <length>\n" then <length> little-endian
// IEEE-754 doubles.
inline void save_checkpoint(const std::string& path, const ParameterVector& v) {
    static_assert(std::endian::native == std::endian::little,
                  "checkpoint writer assumes a little-endian host");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open checkpoint for writing: " + path);
    out << "fedsim-params v1 " << v.size() << "\n";
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!out) throw ConfigError("checkpoint write failed: " + path);
}

inline ParameterVector load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint: " + path);
    std::string magic, version;
    std::size_t len = 0;
    in >> magic >> version >> len;
    if (magic != "fedsim-params" || version != "v1")
        throw ConfigError("bad checkpoint header in " + path);
    in.ignore(1);  // newline after header
    ParameterVector v(len);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(len * sizeof(double)));
    if (!in) throw ConfigError("truncated checkpoint: " + path);
    return v;
}

}  // namespace fedsim
