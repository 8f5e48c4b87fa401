#pragma once

// Injection harness: enumerates the addressable fault universe of a
// constructed simulator, classifies single-fault runs against the golden
// output, and executes deterministic Monte-Carlo campaigns and exhaustive
// sweeps on a worker pool.

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <map>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "safenn/engine.hpp"
#include "safenn/faultspec.hpp"
#include "safenn/rng.hpp"
#include "safenn/sim.hpp"

namespace safenn::flt {

enum class Filter : uint8_t { Full, ControllerOnly, DatapathNonSpof, NonSpof };

inline const char* to_string(Filter f) {
    switch (f) {
        case Filter::Full: return "full";
        case Filter::ControllerOnly: return "controller_only";
        case Filter::DatapathNonSpof: return "datapath";
        case Filter::NonSpof: return "non_spof";
    }
    return "?";
}

inline Filter filter_from_string(const std::string& s) {
    if (s == "full") return Filter::Full;
    if (s == "controller_only") return Filter::ControllerOnly;
    if (s == "datapath") return Filter::DatapathNonSpof;
    if (s == "non_spof") return Filter::NonSpof;
    throw ConfigError("unknown site filter: " + s);
}

struct SiteEntry {
    SiteKind site;
    uint32_t elem;
    uint32_t bits;
};

struct SiteUniverse {
    std::vector<SiteEntry> entries;
    std::vector<uint64_t> prefix;  // cumulative bit counts, entries.size()+1
    uint64_t total_bits = 0;

    // Global bit index -> concrete (site, elem, bit).
    FaultSpec pick(uint64_t bit_index, int64_t cycle) const {
        auto it = std::upper_bound(prefix.begin(), prefix.end(), bit_index);
        size_t i = static_cast<size_t>(it - prefix.begin()) - 1;
        const SiteEntry& e = entries[i];
        return FaultSpec{e.site, e.elem, static_cast<uint32_t>(bit_index - prefix[i]), cycle};
    }
};

inline bool passes_filter(SiteKind s, Filter f) {
    switch (f) {
        case Filter::Full: return true;
        case Filter::ControllerOnly: return is_controller_site(s);
        case Filter::DatapathNonSpof: return !is_controller_site(s) && !is_spof_site(s);
        case Filter::NonSpof: return !is_spof_site(s);
    }
    return false;
}

// Deterministically ordered fault universe for one constructed simulator.
// Baseline mode models the unhardened device: one controller copy, no
// voter/checker, and no shadow-half or offset registers.
inline SiteUniverse enumerate_sites(const sim::Simulator& s, Filter filter) {
    SiteUniverse u;
    bool hardened = s.mode() != Mode::Baseline4x4;
    int reps = hardened ? ctrl::kReplicas : 1;
    auto add = [&](SiteKind site, uint32_t elem, uint32_t bits) {
        if (passes_filter(site, filter)) u.entries.push_back({site, elem, bits});
    };

    uint32_t words = static_cast<uint32_t>((s.layout().total_bytes + 3) / 4);
    for (uint32_t w = 0; w < words; ++w) add(SiteKind::TcdmCell, w, 39);
    for (uint32_t c = 0; c < mem::kChunksPerBeat; ++c) add(SiteKind::StreamerBuf, c, 39);
    for (uint32_t b = 0; b < eng::kMaxPatchBytes; ++b) add(SiteKind::InputBufMain, b, 8);
    if (hardened)
        for (uint32_t b = 0; b < eng::kMaxPatchBytes; ++b) add(SiteKind::InputBufB, b, 8);
    for (uint32_t b = 0; b < eng::kOutBytes; ++b) add(SiteKind::RequantMain, b, 8);
    if (hardened) {
        for (uint32_t b = 0; b < eng::kOutBytes; ++b) add(SiteKind::RequantB, b, 8);
        for (uint32_t b = 0; b < eng::kOutBytes; ++b) add(SiteKind::OffsetBuf, b, 8);
    }
    for (uint32_t a = 0; a < eng::kNumPe * 32; ++a) add(SiteKind::Accumulator, a, 32);
    for (int r = 0; r < reps; ++r) {
        for (int c = 0; c < 8; ++c)
            add(SiteKind::UloopCounter, static_cast<uint32_t>(r * 8 + c), 16);
        static constexpr int fsm_bits[3] = {3, 16, 2};
        for (int f = 0; f < 3; ++f)
            add(SiteKind::FsmReg, static_cast<uint32_t>(r * 3 + f), fsm_bits[f]);
        for (int f = 0; f < 7; ++f)
            add(SiteKind::RegFileField, static_cast<uint32_t>(r * 7 + f),
                static_cast<uint32_t>(ctrl::kCtrlWordBits[ctrl::W_RF_KERNEL + f]));
    }
    for (uint32_t a = 0; a < eng::kNumPe * 32; ++a) add(SiteKind::SetMac, a, 32);
    if (hardened) {
        add(SiteKind::SetChecker, 0, 1);
        for (int w = 0; w < ctrl::kCtrlWords; ++w)
            add(SiteKind::SetVoter, static_cast<uint32_t>(w),
                static_cast<uint32_t>(ctrl::kCtrlWordBits[w]));
    }
    for (uint32_t c = 0; c < mem::kChunksPerBeat; ++c) add(SiteKind::SetEccEnc, c, 32);
    for (uint32_t c = 0; c < mem::kChunksPerBeat; ++c) add(SiteKind::SetEccDec, c, 32);

    u.prefix.resize(u.entries.size() + 1, 0);
    for (size_t i = 0; i < u.entries.size(); ++i) u.prefix[i + 1] = u.prefix[i] + u.entries[i].bits;
    u.total_bits = u.prefix.back();
    return u;
}

// ---- classification -------------------------------------------------------

inline sim::Outcome classify(const sim::RunResult& r, const TensorBuf& golden) {
    if (r.hang) return sim::Outcome::Hang;
    if (r.aborted) return sim::Outcome::IncorrectResult;
    if (r.output.data != golden.data) return sim::Outcome::IncorrectResult;
    if (r.rollbacks > 0) return sim::Outcome::DetectedCorrected;
    return sim::Outcome::NoEffect;  // ECC-corrected / TMR-voted faults land here
}

struct OutcomeRecord {
    FaultSpec spec;
    sim::Outcome classification = sim::Outcome::NoEffect;
    int64_t recoveries = 0;
    int64_t cycles = 0;
    bool error_status = false;
};

inline OutcomeRecord inject_and_run(sim::Simulator& s, const FaultSpec& f, const TensorBuf& golden) {
    sim::RunResult r = s.run({f});
    return {f, classify(r, golden), r.rollbacks, r.cycles, r.error_status};
}

// ---- histograms -----------------------------------------------------------

struct Histogram {
    std::array<uint64_t, 4> counts{};  // indexed by Outcome

    uint64_t total() const { return counts[0] + counts[1] + counts[2] + counts[3]; }
    uint64_t of(sim::Outcome o) const { return counts[static_cast<size_t>(o)]; }
    void add(sim::Outcome o) { ++counts[static_cast<size_t>(o)]; }
    void merge(const Histogram& h) {
        for (size_t i = 0; i < 4; ++i) counts[i] += h.counts[i];
    }

    bool operator==(const Histogram&) const = default;
};

struct CampaignResult {
    Histogram overall;
    std::map<std::string, Histogram> per_site;
    uint64_t universe_bits = 0;
    int64_t cycle_window = 0;
    uint64_t requested = 0;

    bool operator==(const CampaignResult&) const = default;
};

struct Campaign {
    LayerJob job;
    Mode mode = Mode::Redundancy;
    uint64_t n = 100000;
    uint64_t seed = 1;
    Filter filter = Filter::Full;
    int jobs = 1;
};

namespace detail {

// Runs the given (fault, entry-index) work items over a pool; results are
// merged per site kind, so ordering never affects the histogram.
template <typename MakeSim>
CampaignResult execute_parallel(const std::vector<FaultSpec>& work, MakeSim make_sim,
                                const TensorBuf& golden, int jobs, uint64_t universe_bits,
                                int64_t window, const std::function<void(uint64_t)>& progress) {
    int n_threads = std::max(1, jobs);
    std::vector<CampaignResult> partial(static_cast<size_t>(n_threads));
    std::atomic<size_t> next{0};
    std::atomic<uint64_t> done{0};
    auto worker = [&](int t) {
        sim::Simulator s = make_sim();
        CampaignResult& res = partial[static_cast<size_t>(t)];
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= work.size()) break;
            OutcomeRecord rec = inject_and_run(s, work[i], golden);
            res.overall.add(rec.classification);
            res.per_site[to_string(work[i].site)].add(rec.classification);
            uint64_t d = done.fetch_add(1) + 1;
            if (progress && (d % 2048 == 0 || d == work.size())) progress(d);
        }
    };
    if (n_threads == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
        for (auto& th : pool) th.join();
    }
    CampaignResult out;
    out.universe_bits = universe_bits;
    out.cycle_window = window;
    out.requested = work.size();
    for (const auto& p : partial) {
        out.overall.merge(p.overall);
        for (const auto& [k, h] : p.per_site) out.per_site[k].merge(h);
    }
    return out;
}

}  // namespace detail

// Smallest bank depth that fits the job (keeps per-injection memory resets
// cheap for small jobs); never below a whole beat per bank.
inline int fitted_bank_depth(const LayerJob& job) {
    size_t bytes = sim::make_layout(job).total_bytes;
    size_t words = (bytes + 3) / 4;
    int depth = static_cast<int>((words + mem::kNumBanks - 1) / mem::kNumBanks) + 2;
    return std::max(depth, 16);
}

// Deterministic generated inputs for a campaign seed.
struct CampaignData {
    TensorBuf acts, weights;
    TensorBuf golden;
};

inline CampaignData make_campaign_data(LayerJob& job, uint64_t seed) {
    Rng rng(mix64(seed, 0x64617461ull));  // data stream, disjoint from sampling stream
    CampaignData d;
    d.acts = random_acts(job, rng);
    d.weights = random_weights(job, rng);
    if (job.quant.scale.empty()) job.quant = random_quant(job.k_o, rng);
    d.golden = golden::layer_golden(job, d.acts, d.weights);
    return d;
}

// Monte-Carlo campaign: unique (site-bit, cycle) pairs drawn uniformly from
// universe x fault-free cycle window. The pair set is generated serially
// from the seed, then executed on the pool, so --jobs never changes results.
inline CampaignResult run_campaign(const Campaign& c, const perf::CycleModel& model = {},
                                   const std::function<void(uint64_t)>& progress = nullptr) {
    LayerJob job = c.job;
    job.mode = c.mode;
    CampaignData data = make_campaign_data(job, c.seed);
    int depth = fitted_bank_depth(job);
    sim::Simulator probe(job, data.acts, data.weights, model, depth);
    SiteUniverse universe = enumerate_sites(probe, c.filter);
    int64_t window = perf::breakdown(job, c.mode, model).total();
    uint64_t total_pairs = universe.total_bits * static_cast<uint64_t>(window);
    uint64_t n = std::min<uint64_t>(c.n, total_pairs);

    Rng rng(mix64(c.seed, 0x70616972ull));  // pair-sampling stream
    std::unordered_set<uint64_t> seen;
    std::vector<FaultSpec> work;
    work.reserve(n);
    while (work.size() < n) {
        uint64_t p = rng.below(total_pairs);
        if (!seen.insert(p).second) continue;
        work.push_back(universe.pick(p % universe.total_bits,
                                     static_cast<int64_t>(p / universe.total_bits)));
    }

    auto make_sim = [&]() { return sim::Simulator(job, data.acts, data.weights, model, depth); };
    return detail::execute_parallel(work, make_sim, data.golden, c.jobs, universe.total_bits,
                                    window, progress);
}

// Three representative cycles (first, middle, last occurrence) of each FSM
// phase observed in a fault-free run.
inline std::vector<int64_t> representative_cycles(sim::Simulator& s) {
    std::vector<uint8_t> log;
    s.fsm_log = &log;
    s.run();
    s.fsm_log = nullptr;
    std::vector<int64_t> out;
    for (uint8_t state = 0; state <= ctrl::kErrorRecovery; ++state) {
        std::vector<int64_t> hits;
        for (size_t i = 0; i < log.size(); ++i)
            if (log[i] == state) hits.push_back(static_cast<int64_t>(i));
        if (hits.empty()) continue;
        out.push_back(hits.front());
        out.push_back(hits[hits.size() / 2]);
        out.push_back(hits.back());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Exhaustive sweep: every (entry, bit, cycle) combination in the filtered
// universe at the given cycles.
inline CampaignResult run_exhaustive_sweep(const LayerJob& job_in, Mode mode,
                                           const TensorBuf& acts, const TensorBuf& weights,
                                           Filter filter, const std::vector<int64_t>& cycles,
                                           int jobs, const perf::CycleModel& model = {},
                                           const std::function<void(uint64_t)>& progress = nullptr) {
    LayerJob job = job_in;
    job.mode = mode;
    int depth = fitted_bank_depth(job);
    sim::Simulator probe(job, acts, weights, model, depth);
    SiteUniverse universe = enumerate_sites(probe, filter);
    TensorBuf golden = golden::layer_golden(job, acts, weights);

    std::vector<FaultSpec> work;
    work.reserve(universe.total_bits * cycles.size());
    for (const SiteEntry& e : universe.entries)
        for (uint32_t b = 0; b < e.bits; ++b)
            for (int64_t cy : cycles) work.push_back({e.site, e.elem, b, cy});

    auto make_sim = [&]() { return sim::Simulator(job, acts, weights, model, depth); };
    return detail::execute_parallel(work, make_sim, golden, jobs, universe.total_bits,
                                    static_cast<int64_t>(cycles.size()), progress);
}

}  // namespace safenn::flt
