#pragma once

// TMR-triplicated control plane: job FSM, register file and the two uloop
// tiling units. Each replica's state is a fixed array of masked 32-bit words
// so that majority voting and fault addressing work bit-wise. Replicas
// advance independently from their own state; only the voted view ever
// drives the datapath.

#include <array>
#include <cstdint>

#include "safenn/cycle_model.hpp"
#include "safenn/tiling.hpp"
#include "safenn/types.hpp"

namespace safenn::ctrl {

enum Fsm : uint32_t {
    kIdle = 0,
    kInputLoad = 1,
    kMm = 2,
    kOutputCheck = 3,
    kStreamout = 4,
    kErrorRecovery = 5,
    kDone = 6,
    // encoding 7 is unreachable fault-free; a corrupted FSM parked there
    // self-loops until the watchdog fires
};

// Word layout of one controller replica.
enum CtrlWord : int {
    W_FSM = 0,
    W_PHASE,
    W_FLAGS,  // bit0: recovering (tile replay), bit1: squash streamout
    W_UL0_KO,
    W_UL0_TR,
    W_UL0_TC,
    W_UL0_IC,
    W_UL1_KO,
    W_UL1_TR,
    W_UL1_TC,
    W_UL1_IC,
    W_RF_KERNEL,
    W_RF_KI,
    W_RF_KO,
    W_RF_HO,
    W_RF_WO,
    W_RF_QW,
    W_RF_HMR,
    kCtrlWords
};

constexpr std::array<int, kCtrlWords> kCtrlWordBits = {3,  16, 2,  16, 16, 16, 16, 16, 16,
                                                       16, 16, 2,  16, 16, 16, 16, 4,  2};

constexpr uint32_t ctrl_word_mask(int w) {
    return kCtrlWordBits[w] == 32 ? ~0u : ((1u << kCtrlWordBits[w]) - 1);
}

constexpr int kFlagRecovering = 1;
constexpr int kFlagSquash = 2;

using CtrlState = std::array<uint32_t, kCtrlWords>;

constexpr int kReplicas = 3;

inline CtrlState make_idle_state(const LayerJob& job) {
    CtrlState s{};
    s[W_FSM] = kIdle;
    s[W_RF_KERNEL] = static_cast<uint32_t>(job.kernel);
    s[W_RF_KI] = static_cast<uint32_t>(job.k_i) & ctrl_word_mask(W_RF_KI);
    s[W_RF_KO] = static_cast<uint32_t>(job.k_o) & ctrl_word_mask(W_RF_KO);
    s[W_RF_HO] = static_cast<uint32_t>(job.h_o) & ctrl_word_mask(W_RF_HO);
    s[W_RF_WO] = static_cast<uint32_t>(job.w_o) & ctrl_word_mask(W_RF_WO);
    s[W_RF_QW] = static_cast<uint32_t>(job.qw) & ctrl_word_mask(W_RF_QW);
    s[W_RF_HMR] = static_cast<uint32_t>(job.mode);
    return s;
}

// Bit-wise 2-of-3 majority.
inline CtrlState vote(const CtrlState& a, const CtrlState& b, const CtrlState& c) {
    CtrlState v;
    for (int w = 0; w < kCtrlWords; ++w) v[w] = (a[w] & b[w]) | (a[w] & c[w]) | (b[w] & c[w]);
    return v;
}

// Decoded view of a controller word array; tolerates corrupted encodings.
struct CtrlView {
    const CtrlState& s;

    Fsm fsm() const { return static_cast<Fsm>(s[W_FSM] & 7u); }
    uint32_t phase() const { return s[W_PHASE]; }
    bool recovering() const { return (s[W_FLAGS] & kFlagRecovering) != 0; }
    bool squash() const { return (s[W_FLAGS] & kFlagSquash) != 0; }

    // Corrupted kernel encoding 3 decodes as dense (deterministic fallback).
    Kernel kernel() const {
        uint32_t k = s[W_RF_KERNEL] & 3u;
        return k <= 2 ? static_cast<Kernel>(k) : Kernel::Dense3x3;
    }
    Mode mode() const {
        uint32_t m = s[W_RF_HMR] & 3u;
        return m <= 2 ? static_cast<Mode>(m) : Mode::Redundancy;
    }

    uint32_t ul(int loop, int field) const { return s[W_UL0_KO + loop * 4 + field]; }
    uint32_t ko(int loop = 0) const { return ul(loop, 0); }
    uint32_t tr(int loop = 0) const { return ul(loop, 1); }
    uint32_t tc(int loop = 0) const { return ul(loop, 2); }
    uint32_t ic(int loop = 0) const { return ul(loop, 3); }

    int tile_w() const { return mode() == Mode::Baseline4x4 ? 4 : 2; }
    uint32_t ic_blocks() const {
        if (kernel() == Kernel::Depthwise3x3) return 1;
        uint32_t ki = s[W_RF_KI];
        return ki == 0 ? 1 : (ki + 31) / 32;
    }
    uint32_t ko_blocks() const {
        uint32_t ko_ = s[W_RF_KO];
        return ko_ == 0 ? 1 : (ko_ + 31) / 32;
    }
    uint32_t tile_rows() const {
        uint32_t h = s[W_RF_HO];
        return h == 0 ? 1 : (h + 3) / 4;
    }
    uint32_t tile_cols() const {
        uint32_t w = s[W_RF_WO];
        if (w == 0) w = 1;
        int tw = tile_w();
        uint32_t pad = mode() == Mode::Redundancy ? 2 : 4;
        uint32_t wp = (w + pad - 1) / pad * pad;
        return wp / static_cast<uint32_t>(tw);
    }
};

// Duration (in cycles) of the current FSM phase, from this replica's view.
inline int64_t phase_duration(const CtrlView& v, const perf::CycleModel& m) {
    Kernel k = v.kernel();
    switch (v.fsm()) {
        case kIdle: return m.prologue;
        case kInputLoad:
            switch (v.mode()) {
                case Mode::Redundancy:
                    return m.load_half(k) + ((v.ic(0) == 0 && !v.recovering()) ? m.reconfig : 0);
                case Mode::Performance:
                    return 2ll * m.load_half(k) + (v.ic(0) == 0 ? 2 * m.reconfig : 0);
                case Mode::Baseline4x4: return m.load_full(k);
            }
            return 1;
        case kMm: return m.mm(k, static_cast<int>(v.s[W_RF_QW] == 0 ? 1 : v.s[W_RF_QW]));
        case kOutputCheck: return m.check_cycles();
        case kStreamout:
            switch (v.mode()) {
                case Mode::Redundancy: return m.streamout;
                case Mode::Performance: return 2ll * m.streamout;
                case Mode::Baseline4x4: return m.streamout_base;
            }
            return 1;
        case kErrorRecovery: return m.rollback_residual;
        case kDone: return 1;  // never consulted; Done self-loops
    }
    return 1;  // invalid encoding: one-cycle self-loop, watchdog catches it
}

struct StepInputs {
    bool mismatch = false;  // checker result, sampled on OutputCheck exit
};

namespace detail {

inline void set_word(CtrlState& s, int w, uint32_t val) { s[w] = val & ctrl_word_mask(w); }

inline void advance_uloop(CtrlState& s, int loop, uint32_t cols, uint32_t rows, int stride,
                          uint32_t col_init) {
    int base = W_UL0_KO + loop * 4;
    set_word(s, base + 3, 0);  // ic
    uint32_t tc = (s[base + 2] + static_cast<uint32_t>(stride)) & ctrl_word_mask(base + 2);
    if (tc >= cols) {
        set_word(s, base + 2, col_init);
        uint32_t tr = (s[base + 1] + 1) & ctrl_word_mask(base + 1);
        if (tr >= rows) {
            set_word(s, base + 1, 0);
            set_word(s, base + 0, s[base + 0] + 1);
        } else {
            set_word(s, base + 1, tr);
        }
    } else {
        set_word(s, base + 2, tc);
    }
}

}  // namespace detail

// Advance one replica by one cycle. Pure function of the replica's own
// state and the shared external inputs.
inline void step_replica(CtrlState& s, const perf::CycleModel& m, const StepInputs& in) {
    CtrlView v{s};
    if (v.fsm() == kDone) return;
    uint32_t fsm_raw = s[W_FSM] & 7u;
    if (fsm_raw == 7u) return;  // invalid encoding self-loops

    int64_t dur = phase_duration(v, m);
    uint32_t next_phase = (s[W_PHASE] + 1) & ctrl_word_mask(W_PHASE);
    if (static_cast<int64_t>(next_phase) < dur) {
        s[W_PHASE] = next_phase;
        return;
    }
    s[W_PHASE] = 0;

    Mode mode = v.mode();
    uint32_t n = v.ic_blocks();
    switch (v.fsm()) {
        case kIdle:
            // uloop init: in performance mode uloop 1 starts one column tile
            // ahead and both walk with stride two.
            for (int w = W_UL0_KO; w <= W_UL1_IC; ++w) s[w] = 0;
            if (mode == Mode::Performance) detail::set_word(s, W_UL1_TC, 1);
            s[W_FSM] = kInputLoad;
            break;
        case kInputLoad:
            s[W_FSM] = kMm;
            break;
        case kMm:
            if (v.ic(0) + 1 < n) {
                detail::set_word(s, W_UL0_IC, v.ic(0) + 1);
                if (mode == Mode::Performance) detail::set_word(s, W_UL1_IC, v.ic(1) + 1);
                s[W_FSM] = kInputLoad;
            } else {
                s[W_FSM] = mode == Mode::Redundancy ? kOutputCheck : kStreamout;
            }
            break;
        case kOutputCheck:
            if (in.mismatch) {
                s[W_FLAGS] |= kFlagSquash;
            } else {
                s[W_FLAGS] &= ~static_cast<uint32_t>(kFlagRecovering);
            }
            s[W_FSM] = kStreamout;
            break;
        case kStreamout: {
            if (v.squash()) {
                s[W_FLAGS] &= ~static_cast<uint32_t>(kFlagSquash);
                s[W_FSM] = kErrorRecovery;
                break;
            }
            uint32_t cols = v.tile_cols(), rows = v.tile_rows();
            if (mode == Mode::Performance) {
                detail::advance_uloop(s, 0, cols, rows, 2, 0);
                detail::advance_uloop(s, 1, cols, rows, 2, 1);
            } else {
                detail::advance_uloop(s, 0, cols, rows, 1, 0);
                // uloop 1 realigns with uloop 0 after a verified streamout
                for (int f = 0; f < 4; ++f) s[W_UL1_KO + f] = s[W_UL0_KO + f];
            }
            if (v.ko(0) >= v.ko_blocks()) {
                s[W_FSM] = kDone;
            } else {
                s[W_FSM] = kInputLoad;
            }
            break;
        }
        case kErrorRecovery:
            // Rollback: resume from the checkpoint held by uloop 1.
            for (int f = 0; f < 4; ++f) s[W_UL0_KO + f] = s[W_UL1_KO + f];
            s[W_FLAGS] |= kFlagRecovering;
            s[W_FSM] = kInputLoad;
            break;
        case kDone: break;
    }
}

}  // namespace safenn::ctrl
