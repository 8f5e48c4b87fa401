#pragma once

// Datapath state and arithmetic: the 16-PE accumulator array split into two
// halves, the input patch buffers, the requantized output registers and the
// delayed-output buffer used by the lockstep comparator. Buffers are sized
// for the largest configuration (full-array 3x3 patch) so a corrupted mode
// register can never index out of bounds.

#include <array>
#include <cstdint>
#include <cstring>
#include <vector>

#include "safenn/golden.hpp"
#include "safenn/types.hpp"

namespace safenn::eng {

constexpr int kMaxPatchBytes = 6 * 6 * 32;  // (4+2) x (4+2) pixels x 32 channels
constexpr int kOutBytes = 4 * 4 * 32;
constexpr int kNumPe = 16;
constexpr int kOcPerBlock = 32;

struct Engine {
    std::array<int8_t, kMaxPatchBytes> buf_main{};
    std::array<int8_t, kMaxPatchBytes> buf_b{};
    std::array<int8_t, kOutBytes> out_main{};
    std::array<int8_t, kOutBytes> out_b{};
    std::array<int8_t, kOutBytes> offset_buf{};
    // Wrap-around 32-bit accumulation, acc[pe][oc].
    std::array<std::array<uint32_t, kOcPerBlock>, kNumPe> acc{};

    void clear_accs() {
        for (auto& p : acc) p.fill(0);
    }
};

// One IC-block accumulation pass over a 4 x tile_w tile.
// buf: patch bytes [4+ks-1][patch_w][32]; weights: dense/pointwise
// [oc32][tap][ic32] bytes, depthwise [oc32][tap] bytes.
inline void accumulate_block(Engine& e, int pe_base, int tile_w, const int8_t* buf, int patch_w,
                             const int8_t* w, Kernel k) {
    int ks = kernel_size(k);
    bool dw = k == Kernel::Depthwise3x3;
    for (int pr = 0; pr < 4; ++pr) {
        for (int pc = 0; pc < tile_w; ++pc) {
            int pe = pe_base + pr * tile_w + pc;
            auto& lane = e.acc[pe];
            for (int oc = 0; oc < kOcPerBlock; ++oc) {
                uint32_t a = 0;
                for (int tap = 0; tap < ks * ks; ++tap) {
                    int dy = tap / ks, dx = tap % ks;
                    const int8_t* px = buf + ((pr + dy) * patch_w + (pc + dx)) * 32;
                    if (dw) {
                        a += static_cast<uint32_t>(static_cast<int32_t>(px[oc]) * w[oc * 9 + tap]);
                    } else {
                        const int8_t* ww = w + (oc * ks * ks + tap) * 32;
                        for (int ic = 0; ic < 32; ++ic)
                            a += static_cast<uint32_t>(static_cast<int32_t>(px[ic]) * ww[ic]);
                    }
                }
                lane[oc] += a;
            }
        }
    }
}

// Requantize one half's accumulators into its output registers.
// Channels beyond the configured arrays (tile-grid padding) pass through
// with unit scale.
inline void requantize_half(const Engine& e, int pe_base, int tile_w, uint32_t ko_block,
                            const std::vector<int32_t>& scale_pad, const std::vector<int32_t>& bias_pad,
                            int shift, int8_t* out) {
    for (int pr = 0; pr < 4; ++pr) {
        for (int pc = 0; pc < tile_w; ++pc) {
            int pe = pe_base + pr * tile_w + pc;
            for (int oc = 0; oc < kOcPerBlock; ++oc) {
                uint64_t ch = static_cast<uint64_t>(ko_block) * 32 + static_cast<uint64_t>(oc);
                int32_t scale = 1, bias = 0;
                if (ch < scale_pad.size()) {
                    scale = scale_pad[ch];
                    bias = bias_pad[ch];
                }
                int32_t acc = static_cast<int32_t>(e.acc[pe][oc]);
                int64_t v = static_cast<int64_t>(acc) * scale + bias;
                v >>= shift;
                if (v < -128) v = -128;
                if (v > 127) v = 127;
                out[(pr * tile_w + pc) * 32 + oc] = static_cast<int8_t>(v);
            }
        }
    }
}

}  // namespace safenn::eng
