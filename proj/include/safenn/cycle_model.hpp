#pragma once

// Parameterized cycle model. All calibration constants live in this one
// struct; the controller walk consumes them directly, so the analytic
// breakdown below and the executed cycle count agree exactly.

#include <cstdint>
#include <stdexcept>

#include "safenn/tiling.hpp"
#include "safenn/types.hpp"

namespace safenn::perf {

struct NotModeled : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CycleModel {
    // Per-half input-load cycles per IC block.
    int load_pw = 28;
    int load_dense = 44;
    int load_dw = 44;
    // MM cycles per IC block scale linearly with the bit-serial weight width.
    int mm_per_qw_pw = 4;
    int mm_per_qw_dense = 32;
    int mm_per_qw_dw = 16;
    // Streamout cycles per half tile; check cycles per streamout (2 + timeshift).
    int streamout = 24;
    int timeshift = 1;
    // Streamer reconfiguration per half datapath, charged once per tile.
    int reconfig = 8;
    // Extra rollback bookkeeping cycles on top of the tile replay.
    int rollback_residual = 3;
    // Job programming prologue; excluded from the FSM breakdown but part of
    // wall-clock time.
    int prologue = 160;
    // Full-array (baseline) constants, calibrated against the measured
    // input-load/streamout overheads of the split datapath.
    int load_base_pw = 41;
    int load_base_dense = 64;
    int load_base_dw = 64;
    int streamout_base = 43;

    double f_clk_hz = 5.0e8;
    double watchdog_factor = 10.0;

    int check_cycles() const { return 2 + timeshift; }

    int load_half(Kernel k) const {
        switch (k) {
            case Kernel::Pointwise1x1: return load_pw;
            case Kernel::Dense3x3: return load_dense;
            case Kernel::Depthwise3x3: return load_dw;
        }
        return 0;
    }
    int load_full(Kernel k) const {
        switch (k) {
            case Kernel::Pointwise1x1: return load_base_pw;
            case Kernel::Dense3x3: return load_base_dense;
            case Kernel::Depthwise3x3: return load_base_dw;
        }
        return 0;
    }
    int mm(Kernel k, int qw) const {
        switch (k) {
            case Kernel::Pointwise1x1: return mm_per_qw_pw * qw;
            case Kernel::Dense3x3: return mm_per_qw_dense * qw;
            case Kernel::Depthwise3x3: return mm_per_qw_dw * qw;
        }
        return 0;
    }

    // Cycles to replay one half tile after a detected mismatch: squashed
    // drain + rollback + reload/recompute + re-check. Equals the published
    // step formulas for pointwise and dense kernels at qw = 8.
    int64_t tile_replay_cycles(Kernel k, int ic_blocks, int qw) const {
        return static_cast<int64_t>(ic_blocks) * (load_half(k) + mm(k, qw)) + check_cycles() +
               streamout + rollback_residual;
    }
};

// Recovery-cycle step formulas; depend only on the input channel dimension.
inline int64_t recovery_cycles(const CycleModel& m, Kernel kernel, int k_i) {
    if (k_i < 1) throw ConfigError("k_i must be >= 1");
    if (kernel == Kernel::Depthwise3x3)
        throw NotModeled("no published recovery formula for depthwise kernels");
    return m.tile_replay_cycles(kernel, ceil_div(k_i, 32), 8);
}

struct CycleReport {
    int64_t input_load = 0;
    int64_t mm = 0;
    int64_t streamout = 0;
    int64_t error_check = 0;
    int64_t recovery = 0;
    int64_t prologue = 0;
    int64_t streamouts = 0;  // count, not cycles
    int64_t tiles = 0;

    int64_t fsm_total() const { return input_load + mm + streamout + error_check + recovery; }
    int64_t total() const { return fsm_total() + prologue; }

    bool operator==(const CycleReport&) const = default;
};

// Analytic fault-free breakdown; the acceptance suite asserts this matches
// the executed walk cycle for cycle.
inline CycleReport breakdown(const LayerJob& job, Mode mode, const CycleModel& m) {
    Tiling t = make_tiling(job, mode);
    CycleReport r;
    r.prologue = m.prologue;
    int n = t.ic_blocks;
    int M = m.mm(job.kernel, job.qw);
    switch (mode) {
        case Mode::Redundancy: {
            int64_t tiles = t.tiles();
            r.tiles = tiles;
            r.input_load = tiles * (m.reconfig + static_cast<int64_t>(n) * m.load_half(job.kernel));
            r.mm = tiles * static_cast<int64_t>(n) * M;
            r.error_check = tiles * static_cast<int64_t>(m.check_cycles());
            r.streamout = tiles * static_cast<int64_t>(m.streamout);
            r.streamouts = tiles;
            break;
        }
        case Mode::Performance: {
            // Tiles advance in pairs; loads and drains serialize on the
            // shared streamer while the MM phases overlap.
            int64_t pairs = static_cast<int64_t>(t.tile_rows) * (t.tile_cols / 2) * t.ko_blocks;
            r.tiles = pairs * 2;
            r.input_load = pairs * (2 * m.reconfig + 2ll * n * m.load_half(job.kernel));
            r.mm = pairs * static_cast<int64_t>(n) * M;
            r.streamout = pairs * 2ll * m.streamout;
            r.streamouts = pairs * 2;
            break;
        }
        case Mode::Baseline4x4: {
            int64_t tiles = t.tiles();
            r.tiles = tiles;
            r.input_load = tiles * static_cast<int64_t>(n) * m.load_full(job.kernel);
            r.mm = tiles * static_cast<int64_t>(n) * M;
            r.streamout = tiles * static_cast<int64_t>(m.streamout_base);
            r.streamouts = tiles;
            break;
        }
    }
    return r;
}

inline int64_t watchdog_budget_raw(int64_t fault_free_total, const CycleModel& m) {
    return static_cast<int64_t>(static_cast<double>(fault_free_total) * m.watchdog_factor);
}

inline int64_t watchdog_budget(const LayerJob& job, Mode mode, const CycleModel& m) {
    return watchdog_budget_raw(breakdown(job, mode, m).total(), m);
}

}  // namespace safenn::perf
