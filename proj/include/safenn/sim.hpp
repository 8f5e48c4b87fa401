#pragma once

// Cycle-level simulator of the hybrid-redundant accelerator. One Simulator
// owns the scratchpad image, the triplicated controller and the engine
// state; run() executes one job under an optional set of injected faults
// and returns the cycle breakdown, error registers and the readback output.
//
// Per-cycle order: (1) scheduled state flips land, (2) the controller
// replicas are voted (plus any voter transient for this cycle), (3) the
// voted view drives this cycle's datapath commits, (4) every replica
// advances one step.

#include <cstring>
#include <functional>
#include <ostream>
#include <vector>

#include "safenn/controller.hpp"
#include "safenn/cycle_model.hpp"
#include "safenn/engine.hpp"
#include "safenn/faultspec.hpp"
#include "safenn/golden.hpp"
#include "safenn/memory.hpp"
#include "safenn/tiling.hpp"
#include "safenn/types.hpp"

namespace safenn::sim {

enum class Outcome : uint8_t { NoEffect, DetectedCorrected, IncorrectResult, Hang };

inline const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::NoEffect: return "no_effect";
        case Outcome::DetectedCorrected: return "detected_corrected";
        case Outcome::IncorrectResult: return "incorrect_result";
        case Outcome::Hang: return "hang";
    }
    return "?";
}

enum class CtrlStatus : uint8_t { Ok, Busy };

struct RunResult {
    bool hang = false;
    bool aborted = false;  // corrupted state drove an illegal access
    int64_t cycles = 0;
    perf::CycleReport report;
    int64_t rollbacks = 0;
    int64_t tmr_divergence = 0;  // cycles with any replica disagreeing
    bool error_status = false;   // any lockstep mismatch latched
    mem::ErrorRegisters ecc;
    TensorBuf output;  // valid region readback (empty on hang)
};

// Memory placement of one job: activations, weights, outputs, each padded
// to the tile grid so every mode shares one layout.
struct MemLayout {
    uint32_t base_act = 0, base_w = 0, base_out = 0;
    int k_i_pad = 0, k_o_pad = 0;
    int h_out_pad = 0, w_out_pad = 0;  // padded to the full-array grid
    size_t total_bytes = 0;
};

inline MemLayout make_layout(const LayerJob& job) {
    MemLayout L;
    int ks = kernel_size(job.kernel);
    L.k_i_pad = round_up(job.k_i, 32);
    L.k_o_pad = round_up(job.k_o, 32);
    L.h_out_pad = round_up(job.h_o, 4);
    L.w_out_pad = round_up(job.w_o, 4);
    size_t act_bytes = static_cast<size_t>(job.h_i()) * job.w_i() * L.k_i_pad;
    size_t w_bytes = job.kernel == Kernel::Depthwise3x3
                         ? static_cast<size_t>(L.k_o_pad) * 9
                         : static_cast<size_t>(L.k_o_pad) * ks * ks * L.k_i_pad;
    L.base_act = 0;
    L.base_w = static_cast<uint32_t>(round_up(static_cast<int>(act_bytes), 4));
    L.base_out = static_cast<uint32_t>(L.base_w + round_up(static_cast<int>(w_bytes), 4));
    L.total_bytes = L.base_out + static_cast<size_t>(L.h_out_pad) * L.w_out_pad * L.k_o_pad;
    return L;
}

class Simulator {
  public:
    Simulator(LayerJob job, const TensorBuf& acts, const TensorBuf& weights,
              perf::CycleModel model = {}, int bank_depth = mem::kDefaultBankDepth)
        : job_(std::move(job)), model_(model), mode_(job_.mode), mem_(bank_depth) {
        job_.validate();
        layout_ = make_layout(job_);
        if (layout_.total_bytes > mem_.capacity_bytes())
            throw ConfigError("job footprint exceeds TCDM capacity");
        preload(acts, weights);
        pristine_ = mem_.raw_words();
        scale_pad_.assign(layout_.k_o_pad, 1);
        bias_pad_.assign(layout_.k_o_pad, 0);
        for (int c = 0; c < job_.k_o; ++c) {
            scale_pad_[c] = job_.quant.scale[c];
            bias_pad_[c] = job_.quant.bias[c];
        }
    }

    const LayerJob& job() const { return job_; }
    const perf::CycleModel& model() const { return model_; }
    const MemLayout& layout() const { return layout_; }
    Mode mode() const { return mode_; }
    const mem::Tcdm& tcdm() const { return mem_; }

    CtrlStatus set_mode(Mode m) {
        if (busy_) return CtrlStatus::Busy;  // rejected, no state change
        mode_ = m;
        return CtrlStatus::Ok;
    }

    // Optional per-cycle callback (tracing, mid-run poking in tests).
    std::function<void(Simulator&, int64_t)> cycle_hook;
    // Optional per-cycle voted-FSM log (used to pick representative cycles).
    std::vector<uint8_t>* fsm_log = nullptr;

    int64_t watchdog_budget() const { return perf::watchdog_budget(job_, mode_, model_); }

    RunResult run(const std::vector<flt::FaultSpec>& faults = {}, std::ostream* trace = nullptr) {
        busy_ = true;
        reset(faults);
        RunResult res;
        const int64_t watchdog = watchdog_budget();
        int64_t cycle = 0;
        try {
            for (;;) {
                if (cycle > watchdog) {
                    res.hang = true;
                    break;
                }
                apply_seus(cycle);
                ctrl::CtrlState voted = voted_state(res);
                apply_voter_sets(voted, cycle);
                ctrl::CtrlView v{voted};
                if (v.fsm() == ctrl::kDone) break;
                if (fsm_log) fsm_log->push_back(static_cast<uint8_t>(v.fsm()));
                if (cycle_hook) cycle_hook(*this, cycle);
                if (trace && v.phase() == 0) trace_line(*trace, cycle, v);
                bool mismatch = act(v, cycle, res);
                account(v, res);
                ctrl::StepInputs in{mismatch};
                if (mode_ == Mode::Baseline4x4) {
                    ctrl::step_replica(rep_[0], model_, in);
                } else {
                    for (auto& r : rep_) ctrl::step_replica(r, model_, in);
                }
                ++cycle;
            }
        } catch (const ConfigError&) {
            res.aborted = true;  // corrupted state produced an illegal access
        }
        res.cycles = cycle;
        res.rollbacks = rollbacks_;
        res.error_status = error_status_;
        res.ecc = mem_.errors();
        if (!res.hang && !res.aborted) res.output = extract_output();
        busy_ = false;
        return res;
    }

    // Valid-region output readback through the ECC'd port.
    TensorBuf extract_output() {
        TensorBuf out(job_.h_o, job_.w_o, job_.k_o);
        std::vector<uint8_t> row(static_cast<size_t>(job_.k_o));
        for (int y = 0; y < job_.h_o; ++y)
            for (int x = 0; x < job_.w_o; ++x) {
                uint32_t addr = layout_.base_out +
                                static_cast<uint32_t>((static_cast<size_t>(y) * layout_.w_out_pad + x) *
                                                      layout_.k_o_pad);
                mem_.load_bytes(addr, row.data(), row.size());
                for (int c = 0; c < job_.k_o; ++c) out.at(y, x, c) = static_cast<int8_t>(row[c]);
            }
        return out;
    }

    // Raw access for the injection harness.
    mem::Tcdm& tcdm_mut() { return mem_; }
    eng::Engine& engine_mut() { return eng_; }
    const ctrl::CtrlState& replica(int i) const { return rep_[i]; }

  private:
    // ---- setup ----------------------------------------------------------
    void preload(const TensorBuf& acts, const TensorBuf& weights) {
        if (acts.h != job_.h_i() || acts.w != job_.w_i() || acts.c != job_.k_i)
            throw ConfigError("activation dims inconsistent with job");
        int ks = kernel_size(job_.kernel);
        bool dw = job_.kernel == Kernel::Depthwise3x3;
        int ci = dw ? 1 : job_.k_i;
        if (weights.h != job_.k_o || weights.w != ks * ks || weights.c != ci)
            throw ConfigError("weight dims inconsistent with job");

        std::vector<uint8_t> zeroed(layout_.total_bytes, 0);
        for (int y = 0; y < acts.h; ++y)
            for (int x = 0; x < acts.w; ++x)
                for (int c = 0; c < acts.c; ++c)
                    zeroed[layout_.base_act +
                           (static_cast<size_t>(y) * acts.w + x) * layout_.k_i_pad + c] =
                        static_cast<uint8_t>(acts.at(y, x, c));
        for (int oc = 0; oc < job_.k_o; ++oc)
            for (int tap = 0; tap < ks * ks; ++tap) {
                if (dw) {
                    zeroed[layout_.base_w + static_cast<size_t>(oc) * 9 + tap] =
                        static_cast<uint8_t>(weights.at(oc, tap, 0));
                } else {
                    for (int ic = 0; ic < job_.k_i; ++ic)
                        zeroed[layout_.base_w +
                               (static_cast<size_t>(oc) * ks * ks + tap) * layout_.k_i_pad + ic] =
                            static_cast<uint8_t>(weights.at(oc, tap, ic));
                }
            }
        mem_.store_bytes(0, zeroed.data(), zeroed.size());
    }

    void reset(const std::vector<flt::FaultSpec>& faults) {
        mem_.restore_raw(pristine_);
        mem_.reset_errors();
        eng_ = eng::Engine{};
        LayerJob j = job_;
        j.mode = mode_;
        for (auto& r : rep_) r = ctrl::make_idle_state(j);
        seus_.clear();
        transients_.clear();
        voter_sets_.clear();
        for (const auto& f : faults) {
            switch (f.site) {
                case flt::SiteKind::SetVoter: voter_sets_.push_back(f); break;
                case flt::SiteKind::StreamerBuf:
                case flt::SiteKind::SetMac:
                case flt::SiteKind::SetChecker:
                case flt::SiteKind::SetEccEnc:
                case flt::SiteKind::SetEccDec: transients_.push_back({f, false}); break;
                default: seus_.push_back(f); break;
            }
        }
        rollbacks_ = 0;
        error_status_ = false;
        staged_.fill(0);
    }

    // ---- fault plumbing --------------------------------------------------
    void apply_seus(int64_t cycle) {
        for (const auto& f : seus_) {
            if (f.cycle != cycle) continue;
            switch (f.site) {
                case flt::SiteKind::TcdmCell:
                    if (f.elem < mem_.num_words() && f.bit < 39) mem_.word(f.elem) ^= 1ull << f.bit;
                    break;
                case flt::SiteKind::InputBufMain:
                    flip_byte(eng_.buf_main.data(), eng_.buf_main.size(), f);
                    break;
                case flt::SiteKind::InputBufB:
                    flip_byte(eng_.buf_b.data(), eng_.buf_b.size(), f);
                    break;
                case flt::SiteKind::OffsetBuf:
                    flip_byte(eng_.offset_buf.data(), eng_.offset_buf.size(), f);
                    break;
                case flt::SiteKind::RequantMain:
                    flip_byte(eng_.out_main.data(), eng_.out_main.size(), f);
                    break;
                case flt::SiteKind::RequantB:
                    flip_byte(eng_.out_b.data(), eng_.out_b.size(), f);
                    break;
                case flt::SiteKind::Accumulator:
                    if (f.elem < eng::kNumPe * 32 && f.bit < 32)
                        eng_.acc[f.elem / 32][f.elem % 32] ^= 1u << f.bit;
                    break;
                case flt::SiteKind::UloopCounter:
                case flt::SiteKind::FsmReg:
                case flt::SiteKind::RegFileField: {
                    auto [r, w] = ctrl_target(f);
                    if (r < ctrl::kReplicas && static_cast<int>(f.bit) < ctrl::kCtrlWordBits[w])
                        rep_[r][w] ^= (1u << f.bit);
                    break;
                }
                default: break;
            }
        }
    }

    static void flip_byte(int8_t* buf, size_t n, const flt::FaultSpec& f) {
        if (f.elem < n && f.bit < 8) buf[f.elem] ^= static_cast<int8_t>(1u << f.bit);
    }

    // Maps a control-plane fault element to (replica, controller word).
    static std::pair<uint32_t, int> ctrl_target(const flt::FaultSpec& f) {
        switch (f.site) {
            case flt::SiteKind::UloopCounter:
                return {f.elem / 8, ctrl::W_UL0_KO + static_cast<int>(f.elem % 8)};
            case flt::SiteKind::FsmReg: {
                static constexpr int words[3] = {ctrl::W_FSM, ctrl::W_PHASE, ctrl::W_FLAGS};
                return {f.elem / 3, words[f.elem % 3]};
            }
            case flt::SiteKind::RegFileField:
                return {f.elem / 7, ctrl::W_RF_KERNEL + static_cast<int>(f.elem % 7)};
            default: return {ctrl::kReplicas, 0};
        }
    }

    ctrl::CtrlState voted_state(RunResult& res) {
        if (mode_ == Mode::Baseline4x4) return rep_[0];
        ctrl::CtrlState v = ctrl::vote(rep_[0], rep_[1], rep_[2]);
        for (const auto& r : rep_)
            if (r != v) {
                ++res.tmr_divergence;
                break;
            }
        return v;
    }

    void apply_voter_sets(ctrl::CtrlState& v, int64_t cycle) {
        if (mode_ == Mode::Baseline4x4) return;
        for (const auto& f : voter_sets_) {
            if (f.cycle != cycle) continue;
            int w = static_cast<int>(f.elem % ctrl::kCtrlWords);
            if (static_cast<int>(f.bit) < ctrl::kCtrlWordBits[w]) v[w] ^= 1u << f.bit;
        }
    }

    struct Transient {
        flt::FaultSpec spec;
        bool consumed = false;
    };

    // Hook applied to in-flight codewords on loads (pre-decode corruption).
    mem::Tcdm::CorruptHook load_hook(int64_t beat_cycle) {
        return [this, beat_cycle](int chunk, ecc::Codeword w) {
            for (auto& t : transients_) {
                if (t.consumed || t.spec.cycle != beat_cycle) continue;
                if (t.spec.site == flt::SiteKind::StreamerBuf &&
                    static_cast<int>(t.spec.elem) == chunk && t.spec.bit < 39) {
                    w ^= 1ull << t.spec.bit;
                    t.consumed = true;
                }
            }
            return w;
        };
    }

    // Post-decode transient on the load data bus (shared ECC decoder output,
    // broadcast to both halves).
    void apply_dec_sets(int64_t beat_cycle, uint32_t* chunks, int n) {
        for (auto& t : transients_) {
            if (t.consumed || t.spec.cycle != beat_cycle) continue;
            if (t.spec.site == flt::SiteKind::SetEccDec && static_cast<int>(t.spec.elem) < n &&
                t.spec.bit < 32) {
                chunks[t.spec.elem] ^= 1u << t.spec.bit;
                t.consumed = true;
            }
        }
    }

    // Store-side hook: encoder-input transient re-encodes the flipped data
    // (silent, self-consistent codeword); a streamer-buffer hit flips the
    // stored codeword directly (caught by SECDED on readback).
    mem::Tcdm::CorruptHook store_hook(int64_t beat_cycle) {
        return [this, beat_cycle](int chunk, ecc::Codeword w) {
            for (auto& t : transients_) {
                if (t.consumed || t.spec.cycle != beat_cycle) continue;
                if (static_cast<int>(t.spec.elem) != chunk) continue;
                if (t.spec.site == flt::SiteKind::SetEccEnc && t.spec.bit < 32) {
                    uint64_t data = w & ecc::payload_code().data_mask();
                    w = ecc::payload_code().encode(data ^ (1ull << t.spec.bit));
                    t.consumed = true;
                } else if (t.spec.site == flt::SiteKind::StreamerBuf && t.spec.bit < 39) {
                    w ^= 1ull << t.spec.bit;
                    t.consumed = true;
                }
            }
            return w;
        };
    }

    void apply_mac_sets(int64_t from_cycle, int64_t to_cycle) {
        for (auto& t : transients_) {
            if (t.consumed || t.spec.site != flt::SiteKind::SetMac) continue;
            if (t.spec.cycle < from_cycle || t.spec.cycle > to_cycle) continue;
            if (t.spec.elem < eng::kNumPe * 32 && t.spec.bit < 32) {
                eng_.acc[t.spec.elem / 32][t.spec.elem % 32] ^= 1u << t.spec.bit;
                t.consumed = true;
            }
        }
    }

    bool apply_checker_sets(int64_t from_cycle, int64_t to_cycle, bool mismatch) {
        for (auto& t : transients_) {
            if (t.consumed || t.spec.site != flt::SiteKind::SetChecker) continue;
            if (t.spec.cycle < from_cycle || t.spec.cycle > to_cycle) continue;
            mismatch = !mismatch;
            t.consumed = true;
        }
        return mismatch;
    }

    // ---- address generation (from the voted register file) ---------------
    static uint32_t addr32(uint64_t a) {
        if (a > 0xffffffffull) throw ConfigError("address overflow");
        return static_cast<uint32_t>(a);
    }

    // Load one input patch for the tile addressed by uloop `loop`.
    // Consumes one beat (cycle) per in-image pixel; grid padding is
    // zero-filled without a bus transaction.
    void load_patch(const ctrl::CtrlView& v, int loop, int tile_w, int64_t window_start,
                    int8_t* dst) {
        int ks = kernel_size(v.kernel());
        bool dw = v.kernel() == Kernel::Depthwise3x3;
        int ph = 4 + ks - 1, pw = tile_w + ks - 1;
        uint64_t h_i = v.s[ctrl::W_RF_HO] + static_cast<uint64_t>(ks) - 1;
        uint64_t w_i = v.s[ctrl::W_RF_WO] + static_cast<uint64_t>(ks) - 1;
        uint64_t ki_pad = static_cast<uint64_t>(round_up(std::max<int>(1, v.s[ctrl::W_RF_KI]), 32));
        uint64_t chan_blk = dw ? v.ko(loop) : v.ic(loop);
        int64_t beat = 0;
        for (int py = 0; py < ph; ++py)
            for (int px = 0; px < pw; ++px) {
                int8_t* pix = dst + (py * pw + px) * 32;
                uint64_t y = v.tr(loop) * 4ull + py;
                uint64_t x = v.tc(loop) * static_cast<uint64_t>(tile_w) + px;
                if (y >= h_i || x >= w_i) {
                    std::memset(pix, 0, 32);
                    continue;
                }
                uint64_t addr = layout_.base_act + (y * w_i + x) * ki_pad + chan_blk * 32;
                uint32_t chunks[8];
                int64_t bc = window_start + beat;
                mem_.stream_load(addr32(addr), 8, chunks, load_hook(bc));
                apply_dec_sets(bc, chunks, 8);
                std::memcpy(pix, chunks, 32);
                ++beat;
            }
    }

    // Fetch this IC block's weights for output block `ko_block` through the
    // ECC'd port. Layout: dense/pointwise [oc32][tap][ic32], depthwise
    // [oc32][tap].
    std::vector<int8_t> load_weights(const ctrl::CtrlView& v, uint32_t ko_block,
                                     int64_t window_start) {
        int ks = kernel_size(v.kernel());
        bool dw = v.kernel() == Kernel::Depthwise3x3;
        uint64_t ki_pad = static_cast<uint64_t>(round_up(std::max<int>(1, v.s[ctrl::W_RF_KI]), 32));
        int64_t beat = 0;
        if (dw) {
            std::vector<int8_t> wbuf(32 * 9);
            uint64_t addr = layout_.base_w + static_cast<uint64_t>(ko_block) * 32 * 9;
            size_t off = 0;
            while (off < wbuf.size()) {
                int n = static_cast<int>(std::min<size_t>(mem::kChunksPerBeat * 4, wbuf.size() - off)) / 4;
                uint32_t chunks[mem::kChunksPerBeat];
                int64_t bc = window_start + beat;
                mem_.stream_load(addr32(addr + off), n, chunks, load_hook(bc));
                apply_dec_sets(bc, chunks, n);
                std::memcpy(wbuf.data() + off, chunks, static_cast<size_t>(n) * 4);
                off += static_cast<size_t>(n) * 4;
                ++beat;
            }
            return wbuf;
        }
        std::vector<int8_t> wbuf(static_cast<size_t>(32) * ks * ks * 32);
        for (int oc = 0; oc < 32; ++oc) {
            uint64_t goc = static_cast<uint64_t>(ko_block) * 32 + oc;
            for (int tap = 0; tap < ks * ks; ++tap) {
                uint64_t addr =
                    layout_.base_w + (goc * ks * ks + tap) * ki_pad + v.ic(0) * 32ull;
                uint32_t chunks[8];
                int64_t bc = window_start + beat;
                mem_.stream_load(addr32(addr), 8, chunks, load_hook(bc));
                apply_dec_sets(bc, chunks, 8);
                std::memcpy(wbuf.data() + (static_cast<size_t>(oc) * ks * ks + tap) * 32, chunks, 32);
                ++beat;
            }
        }
        return wbuf;
    }

    // Drain one 4 x tile_w tile of requantized outputs to memory.
    void store_tile(const ctrl::CtrlView& v, int loop, int tile_w, const int8_t* src,
                    int64_t window_start) {
        uint64_t ko_pad = static_cast<uint64_t>(round_up(std::max<int>(1, v.s[ctrl::W_RF_KO]), 32));
        uint64_t w_out_pad = static_cast<uint64_t>(round_up(std::max<int>(1, v.s[ctrl::W_RF_WO]), 4));
        int64_t beat = 0;
        for (int pr = 0; pr < 4; ++pr)
            for (int pc = 0; pc < tile_w; ++pc) {
                uint64_t y = v.tr(loop) * 4ull + pr;
                uint64_t x = v.tc(loop) * static_cast<uint64_t>(tile_w) + pc;
                uint64_t addr = layout_.base_out + (y * w_out_pad + x) * ko_pad + v.ko(loop) * 32ull;
                uint32_t chunks[8];
                std::memcpy(chunks, src + (pr * tile_w + pc) * 32, 32);
                mem_.stream_store(addr32(addr), 8, chunks, store_hook(window_start + beat));
                ++beat;
            }
    }

    // ---- per-cycle datapath commits --------------------------------------
    // Returns the checker signal sampled by the controller this cycle.
    bool act(const ctrl::CtrlView& v, int64_t cycle, RunResult& res) {
        Mode m = v.mode();
        int64_t dur = ctrl::phase_duration(v, model_);
        int64_t phase = v.phase();
        int64_t phase_start = cycle - phase;
        int tile_w = v.tile_w();
        Kernel k = v.kernel();

        switch (v.fsm()) {
            case ctrl::kInputLoad: {
                if (phase == 0 && v.ic(0) == 0) eng_.clear_accs();
                if (m == Mode::Redundancy) {
                    int64_t rc = (v.ic(0) == 0 && !v.recovering()) ? model_.reconfig : 0;
                    if (phase == rc) {
                        load_patch(v, 0, tile_w, phase_start + rc, staged_.data());
                        std::memcpy(eng_.buf_main.data(), staged_.data(), staged_.size());
                    } else if (phase == rc + 1) {
                        // shadow half latches the broadcast one cycle later
                        std::memcpy(eng_.buf_b.data(), staged_.data(), staged_.size());
                    }
                } else if (m == Mode::Performance) {
                    int64_t rc = v.ic(0) == 0 ? 2 * model_.reconfig : 0;
                    int64_t L = model_.load_half(k);
                    if (phase == rc) load_patch(v, 0, tile_w, phase_start + rc, eng_.buf_main.data());
                    if (phase == rc + L)
                        load_patch(v, 1, tile_w, phase_start + rc + L, eng_.buf_b.data());
                } else {
                    if (phase == 0) load_patch(v, 0, tile_w, phase_start, eng_.buf_main.data());
                }
                break;
            }
            case ctrl::kMm: {
                if (phase == dur - 1) {
                    int pw = tile_w + kernel_size(k) - 1;
                    std::vector<int8_t> w = load_weights(v, v.ko(0), phase_start);
                    if (m == Mode::Redundancy) {
                        eng::accumulate_block(eng_, 0, tile_w, eng_.buf_main.data(), pw, w.data(), k);
                        eng::accumulate_block(eng_, 8, tile_w, eng_.buf_b.data(), pw, w.data(), k);
                    } else if (m == Mode::Performance) {
                        eng::accumulate_block(eng_, 0, tile_w, eng_.buf_main.data(), pw, w.data(), k);
                        eng::accumulate_block(eng_, 8, tile_w, eng_.buf_b.data(), pw, w.data(), k);
                    } else {
                        eng::accumulate_block(eng_, 0, tile_w, eng_.buf_main.data(), pw, w.data(), k);
                    }
                    apply_mac_sets(phase_start, cycle);
                    if (v.ic(0) + 1 >= v.ic_blocks()) {
                        int shift = job_.quant.shift;
                        if (m == Mode::Baseline4x4) {
                            eng::requantize_half(eng_, 0, 4, v.ko(0), scale_pad_, bias_pad_, shift,
                                                 eng_.out_main.data());
                        } else {
                            eng::requantize_half(eng_, 0, 2, v.ko(0), scale_pad_, bias_pad_, shift,
                                                 eng_.out_main.data());
                            eng::requantize_half(eng_, 8, 2, v.ko(m == Mode::Performance ? 1 : 0),
                                                 scale_pad_, bias_pad_, shift, eng_.out_b.data());
                        }
                    }
                }
                break;
            }
            case ctrl::kOutputCheck: {
                if (phase == 0) eng_.offset_buf = eng_.out_main;
                if (phase == dur - 1) {
                    bool mismatch =
                        std::memcmp(eng_.offset_buf.data(), eng_.out_b.data(), 4 * 2 * 32) != 0;
                    mismatch = apply_checker_sets(phase_start, cycle, mismatch);
                    if (mismatch) {
                        ++rollbacks_;
                        error_status_ = true;
                    }
                    return mismatch;
                }
                break;
            }
            case ctrl::kStreamout: {
                if (m == Mode::Redundancy) {
                    if (phase == dur - 1 && !v.squash()) {
                        store_tile(v, 0, tile_w, eng_.offset_buf.data(), phase_start);
                        ++res.report.streamouts;
                        ++res.report.tiles;
                    }
                } else if (m == Mode::Performance) {
                    int64_t S = model_.streamout;
                    if (phase == S - 1) {
                        store_tile(v, 0, tile_w, eng_.out_main.data(), phase_start);
                        ++res.report.streamouts;
                        ++res.report.tiles;
                    }
                    if (phase == 2 * S - 1) {
                        store_tile(v, 1, tile_w, eng_.out_b.data(), phase_start + S);
                        ++res.report.streamouts;
                        ++res.report.tiles;
                    }
                } else {
                    if (phase == dur - 1) {
                        store_tile(v, 0, tile_w, eng_.out_main.data(), phase_start);
                        ++res.report.streamouts;
                        ++res.report.tiles;
                    }
                }
                break;
            }
            default: break;
        }
        return false;
    }

    void account(const ctrl::CtrlView& v, RunResult& res) {
        switch (v.fsm()) {
            case ctrl::kIdle: ++res.report.prologue; break;
            case ctrl::kErrorRecovery: ++res.report.recovery; break;
            case ctrl::kInputLoad:
                ++(v.recovering() ? res.report.recovery : res.report.input_load);
                break;
            case ctrl::kMm: ++(v.recovering() ? res.report.recovery : res.report.mm); break;
            case ctrl::kOutputCheck:
                ++(v.recovering() ? res.report.recovery : res.report.error_check);
                break;
            case ctrl::kStreamout:
                ++(v.squash() ? res.report.recovery : res.report.streamout);
                break;
            default: break;
        }
    }

    void trace_line(std::ostream& os, int64_t cycle, const ctrl::CtrlView& v) {
        static const char* names[8] = {"idle",      "input_load", "mm",   "output_check",
                                       "streamout", "recovery",   "done", "invalid"};
        os << cycle << " " << names[v.fsm() & 7] << " ko=" << v.ko(0) << " tr=" << v.tr(0)
           << " tc=" << v.tc(0) << " ic=" << v.ic(0) << (v.recovering() ? " replay" : "") << "\n";
    }

    LayerJob job_;
    perf::CycleModel model_;
    Mode mode_;
    mem::Tcdm mem_;
    MemLayout layout_;
    std::vector<ecc::Codeword> pristine_;
    std::vector<int32_t> scale_pad_, bias_pad_;
    eng::Engine eng_;
    std::array<ctrl::CtrlState, ctrl::kReplicas> rep_{};
    std::array<int8_t, eng::kMaxPatchBytes> staged_{};
    std::vector<flt::FaultSpec> seus_;
    std::vector<Transient> transients_;
    std::vector<flt::FaultSpec> voter_sets_;
    int64_t rollbacks_ = 0;
    bool error_status_ = false;
    bool busy_ = false;
};

}  // namespace safenn::sim
