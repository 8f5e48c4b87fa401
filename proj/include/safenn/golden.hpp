#pragma once

// Bit-exact reference model for the supported convolutions and the
// requantization stage. Every datapath equivalence and fault classification
// check in the simulator is measured against these functions.

#include "safenn/types.hpp"

namespace safenn::golden {

// Saturating requantization of one accumulator.
inline int8_t requantize(int32_t acc, int ch, const QuantParams& q) {
    int64_t v = static_cast<int64_t>(acc) * q.scale[ch] + q.bias[ch];
    v >>= q.shift;  // arithmetic shift, rounds toward negative infinity
    if (v < -128) v = -128;
    if (v > 127) v = 127;
    return static_cast<int8_t>(v);
}

// Plain nested-loop integer convolution, unit stride. The input covers the
// full receptive field (h_i = h_o + ks - 1), so every tap reads in-bounds.
// Accumulation uses 32-bit wrap-around semantics to stay bit-identical with
// the engine even under injected faults.
inline AccumBuf conv_golden(const LayerJob& job, const TensorBuf& acts, const TensorBuf& weights) {
    int ks = kernel_size(job.kernel);
    bool dw = job.kernel == Kernel::Depthwise3x3;
    int ci = dw ? 1 : job.k_i;
    if (acts.h != job.h_i() || acts.w != job.w_i() || acts.c != job.k_i)
        throw ConfigError("activation dims inconsistent with job");
    if (weights.h != job.k_o || weights.w != ks * ks || weights.c != ci)
        throw ConfigError("weight dims inconsistent with job");

    AccumBuf out(job.h_o, job.w_o, job.k_o);
    for (int y = 0; y < job.h_o; ++y)
        for (int x = 0; x < job.w_o; ++x)
            for (int oc = 0; oc < job.k_o; ++oc) {
                uint32_t acc = 0;
                for (int tap = 0; tap < ks * ks; ++tap) {
                    int dy = tap / ks, dx = tap % ks;
                    if (dw) {
                        acc += static_cast<uint32_t>(static_cast<int32_t>(acts.at(y + dy, x + dx, oc)) *
                                                     weights.at(oc, tap, 0));
                    } else {
                        for (int ic = 0; ic < job.k_i; ++ic)
                            acc += static_cast<uint32_t>(static_cast<int32_t>(acts.at(y + dy, x + dx, ic)) *
                                                         weights.at(oc, tap, ic));
                    }
                }
                out.at(y, x, oc) = static_cast<int32_t>(acc);
            }
    return out;
}

inline TensorBuf requantize_all(const LayerJob& job, const AccumBuf& acc) {
    TensorBuf out(acc.h, acc.w, acc.c);
    for (int y = 0; y < acc.h; ++y)
        for (int x = 0; x < acc.w; ++x)
            for (int oc = 0; oc < acc.c; ++oc)
                out.at(y, x, oc) = requantize(acc.at(y, x, oc), oc, job.quant);
    return out;
}

inline TensorBuf layer_golden(const LayerJob& job, const TensorBuf& acts, const TensorBuf& weights) {
    return requantize_all(job, conv_golden(job, acts, weights));
}

}  // namespace safenn::golden
