#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "safenn/rng.hpp"

namespace safenn {

enum class Kernel : uint32_t { Pointwise1x1 = 0, Dense3x3 = 1, Depthwise3x3 = 2 };
enum class Mode : uint32_t { Baseline4x4 = 0, Performance = 1, Redundancy = 2 };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline const char* to_string(Kernel k) {
    switch (k) {
        case Kernel::Pointwise1x1: return "pointwise";
        case Kernel::Dense3x3: return "dense";
        case Kernel::Depthwise3x3: return "depthwise";
    }
    return "?";
}

inline const char* to_string(Mode m) {
    switch (m) {
        case Mode::Baseline4x4: return "baseline";
        case Mode::Performance: return "performance";
        case Mode::Redundancy: return "redundancy";
    }
    return "?";
}

inline int kernel_size(Kernel k) { return k == Kernel::Pointwise1x1 ? 1 : 3; }

// Per-output-channel requantization parameters.
// out = sat[-128,127]((acc * scale + bias) >> shift), arithmetic shift.
struct QuantParams {
    std::vector<int32_t> scale;  // one per output channel
    std::vector<int32_t> bias;
    int shift = 0;  // in [0, 31]

    void validate(int k_o) const {
        if (shift < 0 || shift > 31) throw ConfigError("quant shift out of [0,31]");
        if (static_cast<int>(scale.size()) != k_o || static_cast<int>(bias.size()) != k_o)
            throw ConfigError("quant params size mismatch with k_o");
    }
};

// Convolution workload description. Unit stride; for 3x3 kernels the input
// is the full receptive field (h_i = h_o + 2), so no in-image padding is
// ever read. Tile-grid padding beyond the image reads as zero.
struct LayerJob {
    Kernel kernel = Kernel::Pointwise1x1;
    int k_i = 1;
    int k_o = 1;
    int h_o = 1;
    int w_o = 1;
    int qw = 8;  // weight bits, 2..8
    int qa = 8;  // activation bits, fixed
    Mode mode = Mode::Redundancy;
    QuantParams quant;

    int h_i() const { return h_o + kernel_size(kernel) - 1; }
    int w_i() const { return w_o + kernel_size(kernel) - 1; }

    void validate() const {
        if (k_i < 1 || k_o < 1 || h_o < 1 || w_o < 1) throw ConfigError("job dims must be >= 1");
        if (qw < 2 || qw > 8) throw ConfigError("qw must be in [2,8]");
        if (qa != 8) throw ConfigError("qa must be 8");
        if (kernel == Kernel::Depthwise3x3 && k_i != k_o)
            throw ConfigError("depthwise requires k_i == k_o");
        quant.validate(k_o);
    }
};

// HWC channel-minor tensor of bytes. Activations and outputs are int8;
// weights are stored one signed byte per qw-bit value (see pack_weights for
// the dense bit-packed fixture form).
struct TensorBuf {
    int h = 0, w = 0, c = 0;
    std::vector<int8_t> data;

    TensorBuf() = default;
    TensorBuf(int h_, int w_, int c_) : h(h_), w(w_), c(c_), data(static_cast<size_t>(h_) * w_ * c_, 0) {}

    int8_t& at(int y, int x, int ch) { return data[(static_cast<size_t>(y) * w + x) * c + ch]; }
    int8_t at(int y, int x, int ch) const { return data[(static_cast<size_t>(y) * w + x) * c + ch]; }
    size_t size() const { return data.size(); }
};

// 32-bit accumulator tensor, same HWC convention.
struct AccumBuf {
    int h = 0, w = 0, c = 0;
    std::vector<int32_t> data;

    AccumBuf() = default;
    AccumBuf(int h_, int w_, int c_) : h(h_), w(w_), c(c_), data(static_cast<size_t>(h_) * w_ * c_, 0) {}

    int32_t& at(int y, int x, int ch) { return data[(static_cast<size_t>(y) * w + x) * c + ch]; }
    int32_t at(int y, int x, int ch) const { return data[(static_cast<size_t>(y) * w + x) * c + ch]; }
};

inline int8_t clamp_to_bits(int v, int bits) {
    int lo = -(1 << (bits - 1));
    int hi = (1 << (bits - 1)) - 1;
    if (v < lo) v = lo;
    if (v > hi) v = hi;
    return static_cast<int8_t>(v);
}

// Dense bit-packing of qw-bit two's-complement weights (LSB-first within a
// little-endian byte stream). Round-trips losslessly for in-range values.
inline std::vector<uint8_t> pack_weights(const std::vector<int8_t>& w, int qw) {
    std::vector<uint8_t> out((w.size() * qw + 7) / 8, 0);
    size_t bitpos = 0;
    for (int8_t v : w) {
        uint32_t u = static_cast<uint8_t>(v) & ((1u << qw) - 1);
        for (int b = 0; b < qw; ++b, ++bitpos)
            if (u & (1u << b)) out[bitpos >> 3] |= static_cast<uint8_t>(1u << (bitpos & 7));
    }
    return out;
}

inline std::vector<int8_t> unpack_weights(const std::vector<uint8_t>& packed, size_t count, int qw) {
    std::vector<int8_t> out(count, 0);
    size_t bitpos = 0;
    for (size_t i = 0; i < count; ++i) {
        uint32_t u = 0;
        for (int b = 0; b < qw; ++b, ++bitpos)
            if (packed[bitpos >> 3] & (1u << (bitpos & 7))) u |= 1u << b;
        // sign extend from qw bits
        if (u & (1u << (qw - 1))) u |= ~((1u << qw) - 1);
        out[i] = static_cast<int8_t>(static_cast<int32_t>(u));
    }
    return out;
}

// Deterministic random inputs for generated jobs.
inline TensorBuf random_acts(const LayerJob& job, Rng& rng) {
    TensorBuf t(job.h_i(), job.w_i(), job.k_i);
    for (auto& v : t.data) v = static_cast<int8_t>(rng.range(-128, 127));
    return t;
}

inline TensorBuf random_weights(const LayerJob& job, Rng& rng) {
    int ks = kernel_size(job.kernel);
    int ci = job.kernel == Kernel::Depthwise3x3 ? 1 : job.k_i;
    TensorBuf t(job.k_o, ks * ks, ci);  // [k_o][tap][ci] in the HWC container
    int lo = -(1 << (job.qw - 1)), hi = (1 << (job.qw - 1)) - 1;
    for (auto& v : t.data) v = static_cast<int8_t>(rng.range(lo, hi));
    return t;
}

inline QuantParams random_quant(int k_o, Rng& rng) {
    QuantParams q;
    q.shift = static_cast<int>(rng.range(0, 15));
    q.scale.resize(k_o);
    q.bias.resize(k_o);
    for (int c = 0; c < k_o; ++c) {
        q.scale[c] = static_cast<int32_t>(rng.range(1, 8));
        q.bias[c] = static_cast<int32_t>(rng.range(-1000, 1000));
    }
    return q;
}

}  // namespace safenn
