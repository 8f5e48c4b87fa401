#pragma once

// Reliability analysis on top of the cycle model: execution-time overhead of
// a single corrected fault, and throughput degradation under sustained fault
// rates for the two recovery policies (in-place hardware rollback of one
// tile vs restarting the whole job in software).

#include <cmath>
#include <cstdint>
#include <vector>

#include "safenn/cycle_model.hpp"
#include "safenn/rng.hpp"
#include "safenn/types.hpp"

namespace safenn::perf {

// Percent execution-time overhead of one detected-and-corrected fault,
// relative to the fault-free redundancy-mode run.
inline double single_fault_overhead(const LayerJob& job, const CycleModel& m = {}) {
    int64_t total = breakdown(job, Mode::Redundancy, m).total();
    return 100.0 * static_cast<double>(recovery_cycles(m, job.kernel, job.k_i)) /
           static_cast<double>(total);
}

enum class RecoveryPolicy : uint8_t { HardwareRollback, SoftwareRestart };

inline const char* to_string(RecoveryPolicy p) {
    return p == RecoveryPolicy::HardwareRollback ? "hardware_rollback" : "software_restart";
}

struct RecoveryScenario {
    LayerJob job;
    RecoveryPolicy policy = RecoveryPolicy::HardwareRollback;
    std::vector<double> rates;  // faults per second, >= 0
    int trials = 1000;          // Monte-Carlo trials per rate
    uint64_t seed = 1;
};

struct DegradationPoint {
    double rate = 0.0;
    double perf = 1.0;  // relative performance in (0,1]; 0 when non-terminating
    bool non_terminating = false;
};

inline double job_seconds(const LayerJob& job, const CycleModel& m) {
    return static_cast<double>(breakdown(job, Mode::Redundancy, m).total()) / m.f_clk_hz;
}

inline double recovery_seconds(const LayerJob& job, const CycleModel& m) {
    return static_cast<double>(recovery_cycles(m, job.kernel, job.k_i)) / m.f_clk_hz;
}

// Expected wasted time per fault: the rollback replays one tile; the
// software fallback reissues the whole job, losing half of it on average
// (midpoint assumption).
inline double fault_penalty_seconds(const LayerJob& job, RecoveryPolicy p, const CycleModel& m) {
    return p == RecoveryPolicy::HardwareRollback ? recovery_seconds(job, m)
                                                 : job_seconds(job, m) / 2.0;
}

// A software restart needs a fault-free window as long as the job; beyond
// this fault count per window the job can be considered never to finish.
constexpr double kNonTerminationFaults = 700.0;  // exp(-700) underflows to 0

// Analytic expected relative performance: N_f = r * T0 faults land during
// useful work, each costing the policy's penalty, so
// perf = T0 / (T0 + N_f * penalty) = 1 / (1 + r * penalty).
inline DegradationPoint degradation_analytic(const LayerJob& job, RecoveryPolicy p, double rate,
                                             const CycleModel& m = {}) {
    if (rate < 0) throw ConfigError("fault rate must be >= 0");
    DegradationPoint d;
    d.rate = rate;
    if (rate == 0.0) return d;
    double t0 = job_seconds(job, m);
    if (p == RecoveryPolicy::SoftwareRestart && rate * t0 >= kNonTerminationFaults) {
        d.perf = 0.0;
        d.non_terminating = true;
        return d;
    }
    d.perf = 1.0 / (1.0 + rate * fault_penalty_seconds(job, p, m));
    return d;
}

// Monte-Carlo cross-check: exponential inter-fault times over the useful
// execution window; perf = T0 / mean completion time.
inline DegradationPoint degradation_monte_carlo(const LayerJob& job, RecoveryPolicy p, double rate,
                                                int trials, uint64_t seed,
                                                const CycleModel& m = {}) {
    if (rate < 0) throw ConfigError("fault rate must be >= 0");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    DegradationPoint d;
    d.rate = rate;
    if (rate == 0.0) return d;
    double t0 = job_seconds(job, m);
    if (p == RecoveryPolicy::SoftwareRestart && rate * t0 >= kNonTerminationFaults) {
        d.perf = 0.0;
        d.non_terminating = true;
        return d;
    }
    double penalty = fault_penalty_seconds(job, p, m);
    double sum = 0.0;
    for (int t = 0; t < trials; ++t) {
        Rng rng(mix64(seed, static_cast<uint64_t>(t)));
        double progress = 0.0, total = t0;
        for (;;) {
            progress += rng.exponential(rate);
            if (progress >= t0) break;
            total += penalty;
        }
        sum += total;
    }
    d.perf = t0 * trials / sum;
    return d;
}

inline std::vector<DegradationPoint> degradation_curve(const RecoveryScenario& sc, bool monte_carlo,
                                                       const CycleModel& m = {}) {
    std::vector<DegradationPoint> out;
    out.reserve(sc.rates.size());
    for (double r : sc.rates)
        out.push_back(monte_carlo
                          ? degradation_monte_carlo(sc.job, sc.policy, r, sc.trials, sc.seed, m)
                          : degradation_analytic(sc.job, sc.policy, r, m));
    return out;
}

// Smallest fault rate (bisected) at which relative performance drops to the
// given level, e.g. 0.5 for the 50%-degradation point.
inline double rate_at_performance(const LayerJob& job, RecoveryPolicy p, double perf_level,
                                  const CycleModel& m = {}) {
    double penalty = fault_penalty_seconds(job, p, m);
    // invert perf = 1/(1 + r*penalty)
    return (1.0 / perf_level - 1.0) / penalty;
}

}  // namespace safenn::perf
