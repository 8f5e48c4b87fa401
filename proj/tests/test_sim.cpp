// Whole-simulator tests: datapath equivalence with the reference model,
// lockstep detection and rollback, TMR masking, the mode register interface
// and watchdog behavior.

#include <gtest/gtest.h>

#include <sstream>

#include "safenn/fault.hpp"
#include "safenn/sim.hpp"

using namespace safenn;

namespace {

struct JobSetup {
    LayerJob job;
    TensorBuf acts, weights, golden;
};

JobSetup make_setup(Kernel k, Mode m, int k_i, int k_o, int h, int w, uint64_t seed = 1) {
    JobSetup s;
    s.job.kernel = k;
    s.job.k_i = k_i;
    s.job.k_o = k_o;
    s.job.h_o = h;
    s.job.w_o = w;
    s.job.mode = m;
    Rng rng(seed);
    s.job.quant = random_quant(k_o, rng);
    s.acts = random_acts(s.job, rng);
    s.weights = random_weights(s.job, rng);
    s.golden = golden::layer_golden(s.job, s.acts, s.weights);
    return s;
}

}  // namespace

TEST(Sim, AllModesMatchReference) {
    for (Kernel k : {Kernel::Pointwise1x1, Kernel::Dense3x3, Kernel::Depthwise3x3}) {
        for (Mode m : {Mode::Baseline4x4, Mode::Performance, Mode::Redundancy}) {
            JobSetup su = make_setup(k, m, 32, 32, 4, 4);
            sim::Simulator s(su.job, su.acts, su.weights);
            sim::RunResult r = s.run();
            EXPECT_FALSE(r.hang);
            EXPECT_EQ(r.rollbacks, 0);
            EXPECT_FALSE(r.error_status);
            EXPECT_EQ(r.output.data, su.golden.data) << to_string(k) << "/" << to_string(m);
        }
    }
}

TEST(Sim, UnalignedDimsArePaddedAndDiscarded) {
    JobSetup su = make_setup(Kernel::Pointwise1x1, Mode::Redundancy, 40, 50, 5, 3, 7);
    sim::Simulator s(su.job, su.acts, su.weights);
    EXPECT_EQ(s.run().output.data, su.golden.data);
}

TEST(Sim, RunIsRepeatable) {
    JobSetup su = make_setup(Kernel::Dense3x3, Mode::Redundancy, 32, 32, 4, 4, 9);
    sim::Simulator s(su.job, su.acts, su.weights);
    sim::RunResult a = s.run();
    sim::RunResult b = s.run();  // state fully reset between runs
    EXPECT_EQ(a.output.data, b.output.data);
    EXPECT_EQ(a.cycles, b.cycles);
    EXPECT_EQ(a.report, b.report);
}

// Constant-one inputs with pass-through quantization: any upset of an input
// byte is guaranteed to reach the requantized outputs, so detection is
// deterministic rather than dependent on saturation.
JobSetup make_constant_setup(int k_i, int k_o, int h, int w, Mode m) {
    JobSetup s;
    s.job.kernel = Kernel::Pointwise1x1;
    s.job.k_i = k_i;
    s.job.k_o = k_o;
    s.job.h_o = h;
    s.job.w_o = w;
    s.job.mode = m;
    s.job.quant.scale.assign(static_cast<size_t>(k_o), 1);
    s.job.quant.bias.assign(static_cast<size_t>(k_o), 0);
    s.job.quant.shift = 0;
    s.acts = TensorBuf(s.job.h_i(), s.job.w_i(), k_i);
    s.weights = TensorBuf(k_o, 1, k_i);
    for (auto& v : s.acts.data) v = 1;
    for (auto& v : s.weights.data) v = 1;
    s.golden = golden::layer_golden(s.job, s.acts, s.weights);
    return s;
}

TEST(Sim, LockstepDetectsAndRollsBackBufferUpset) {
    JobSetup su = make_constant_setup(64, 64, 4, 4, Mode::Redundancy);
    sim::Simulator s(su.job, su.acts, su.weights);
    int64_t clean = s.run().cycles;
    perf::CycleModel m;
    // Flip a main-half input byte after the patch load of the first tile.
    flt::FaultSpec f{flt::SiteKind::InputBufMain, 10, 7, m.prologue + m.reconfig + 3};
    sim::RunResult r = s.run({f});
    EXPECT_EQ(r.rollbacks, 1);
    EXPECT_TRUE(r.error_status);
    EXPECT_EQ(r.output.data, su.golden.data);
    EXPECT_EQ(r.cycles, clean + perf::recovery_cycles(m, su.job.kernel, su.job.k_i));
}

TEST(Sim, AccumulatorUpsetIsDetected) {
    JobSetup su = make_constant_setup(32, 32, 4, 4, Mode::Redundancy);
    sim::Simulator s(su.job, su.acts, su.weights);
    perf::CycleModel m;
    // Flip an accumulator bit in the main half before the MM result commits.
    int64_t mm_start = m.prologue + m.reconfig + m.load_pw;
    flt::FaultSpec f{flt::SiteKind::Accumulator, 0, 12, mm_start};
    sim::RunResult r = s.run({f});
    EXPECT_GE(r.rollbacks, 1);
    EXPECT_EQ(r.output.data, su.golden.data);
}

TEST(Sim, MemoryUpsetCorrectedTransparently) {
    JobSetup su = make_setup(Kernel::Pointwise1x1, Mode::Redundancy, 32, 32, 4, 4, 6);
    sim::Simulator s(su.job, su.acts, su.weights);
    // Single-bit flip in an activation word before it is ever read.
    flt::FaultSpec f{flt::SiteKind::TcdmCell, 2, 17, 0};
    sim::RunResult r = s.run({f});
    EXPECT_EQ(r.rollbacks, 0);
    EXPECT_EQ(r.output.data, su.golden.data);
    EXPECT_GE(r.ecc.corrected_payload, 1u);
    EXPECT_EQ(r.ecc.uncorrectable_payload, 0u);
}

TEST(Sim, DoubleMemoryUpsetFlagsUncorrectable) {
    JobSetup su = make_setup(Kernel::Pointwise1x1, Mode::Redundancy, 32, 32, 4, 4, 6);
    sim::Simulator s(su.job, su.acts, su.weights);
    sim::RunResult r = s.run({flt::FaultSpec{flt::SiteKind::TcdmCell, 2, 3, 0},
                              flt::FaultSpec{flt::SiteKind::TcdmCell, 2, 9, 0}});
    EXPECT_GE(r.ecc.uncorrectable_payload, 1u);
}

TEST(Sim, TmrMasksSingleReplicaUpsets) {
    JobSetup su = make_setup(Kernel::Pointwise1x1, Mode::Redundancy, 32, 32, 4, 4, 8);
    sim::Simulator s(su.job, su.acts, su.weights);
    sim::RunResult clean = s.run();
    // A few representative single-replica control upsets at varied cycles.
    std::vector<flt::FaultSpec> cases = {
        {flt::SiteKind::FsmReg, 0, 0, 50},          // replica 0 FSM state
        {flt::SiteKind::FsmReg, 4, 3, 200},         // replica 1 phase counter
        {flt::SiteKind::UloopCounter, 9, 1, 220},   // replica 1 uloop 0 tr
        {flt::SiteKind::RegFileField, 15, 2, 100},  // replica 2 k_i field
    };
    for (const auto& f : cases) {
        sim::RunResult r = s.run({f});
        EXPECT_EQ(r.output.data, clean.output.data) << to_string(f);
        EXPECT_EQ(r.report, clean.report) << to_string(f);
        EXPECT_EQ(r.rollbacks, 0) << to_string(f);
        EXPECT_GE(r.tmr_divergence, 1) << to_string(f);
    }
}

TEST(Sim, VotedFsmCorruptionHangsAndWatchdogFires) {
    JobSetup su = make_setup(Kernel::Pointwise1x1, Mode::Redundancy, 32, 32, 4, 4, 8);
    sim::Simulator s(su.job, su.acts, su.weights);
    // Park all three replicas in the invalid FSM encoding (idle 0 -> 7)
    // during the prologue: unrecoverable self-loop.
    std::vector<flt::FaultSpec> faults;
    for (uint32_t rep = 0; rep < 3; ++rep)
        for (uint32_t b = 0; b < 3; ++b)
            faults.push_back({flt::SiteKind::FsmReg, rep * 3, b, 100});
    sim::RunResult r = s.run(faults);
    EXPECT_TRUE(r.hang);
    EXPECT_EQ(r.cycles, s.watchdog_budget() + 1);
}

TEST(Sim, ModeRegisterRejectsWritesWhileBusy) {
    JobSetup su = make_setup(Kernel::Pointwise1x1, Mode::Redundancy, 32, 32, 4, 4, 8);
    sim::Simulator s(su.job, su.acts, su.weights);
    sim::CtrlStatus mid = sim::CtrlStatus::Ok;
    s.cycle_hook = [&mid](sim::Simulator& self, int64_t cycle) {
        if (cycle == 100) mid = self.set_mode(Mode::Baseline4x4);
    };
    sim::RunResult r = s.run();
    s.cycle_hook = nullptr;
    EXPECT_EQ(mid, sim::CtrlStatus::Busy);
    EXPECT_EQ(s.mode(), Mode::Redundancy);  // write was rejected outright
    EXPECT_EQ(r.output.data, su.golden.data);

    // Between jobs the register accepts writes; the same device instance
    // re-runs in any mode.
    EXPECT_EQ(s.set_mode(Mode::Baseline4x4), sim::CtrlStatus::Ok);
    EXPECT_EQ(s.run().output.data, su.golden.data);
    EXPECT_EQ(s.set_mode(Mode::Performance), sim::CtrlStatus::Ok);
    EXPECT_EQ(s.run().output.data, su.golden.data);
}

TEST(Sim, TraceContainsPhaseLines) {
    JobSetup su = make_setup(Kernel::Pointwise1x1, Mode::Redundancy, 32, 32, 4, 4, 8);
    sim::Simulator s(su.job, su.acts, su.weights);
    std::ostringstream trace;
    s.run({}, &trace);
    std::string t = trace.str();
    EXPECT_NE(t.find("input_load"), std::string::npos);
    EXPECT_NE(t.find("output_check"), std::string::npos);
    EXPECT_NE(t.find("streamout"), std::string::npos);
}

TEST(Sim, FootprintValidation) {
    LayerJob j;
    j.kernel = Kernel::Dense3x3;
    j.k_i = j.k_o = 512;
    j.h_o = j.w_o = 16;
    j.quant.scale.assign(512, 1);
    j.quant.bias.assign(512, 0);
    TensorBuf acts(j.h_i(), j.w_i(), j.k_i), w(j.k_o, 9, j.k_i);
    // Weights alone exceed the default 128 kB scratchpad.
    EXPECT_THROW(sim::Simulator(j, acts, w), ConfigError);
}
