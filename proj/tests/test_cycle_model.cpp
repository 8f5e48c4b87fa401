// Cycle-model tests: the published step formulas, breakdown examples and
// agreement between the analytic model and an executed run.

#include <gtest/gtest.h>

#include "safenn/cycle_model.hpp"
#include "safenn/rng.hpp"
#include "safenn/sim.hpp"

using namespace safenn;

TEST(CycleModel, RecoveryFormulaValues) {
    perf::CycleModel m;
    EXPECT_EQ(perf::recovery_cycles(m, Kernel::Pointwise1x1, 32), 90);
    EXPECT_EQ(perf::recovery_cycles(m, Kernel::Pointwise1x1, 64), 150);
    EXPECT_EQ(perf::recovery_cycles(m, Kernel::Pointwise1x1, 256), 510);
    EXPECT_EQ(perf::recovery_cycles(m, Kernel::Dense3x3, 32), 330);
    EXPECT_EQ(perf::recovery_cycles(m, Kernel::Dense3x3, 256), 2430);
}

TEST(CycleModel, RecoveryDependsOnlyOnInputChannels) {
    perf::CycleModel m;
    // 60 * ceil(k_i/32) + 30 for pointwise: piecewise constant in k_i,
    // independent of spatial size and output channels.
    EXPECT_EQ(perf::recovery_cycles(m, Kernel::Pointwise1x1, 33),
              perf::recovery_cycles(m, Kernel::Pointwise1x1, 64));
    EXPECT_EQ(perf::recovery_cycles(m, Kernel::Pointwise1x1, 1),
              perf::recovery_cycles(m, Kernel::Pointwise1x1, 32));
    for (int blocks = 1; blocks <= 8; ++blocks)
        EXPECT_EQ(perf::recovery_cycles(m, Kernel::Pointwise1x1, 32 * blocks),
                  60 * blocks + 30);
}

TEST(CycleModel, DepthwiseRecoveryNotModeled) {
    perf::CycleModel m;
    EXPECT_THROW(perf::recovery_cycles(m, Kernel::Depthwise3x3, 32), perf::NotModeled);
    EXPECT_THROW(perf::recovery_cycles(m, Kernel::Pointwise1x1, 0), ConfigError);
}

TEST(CycleModel, DenseBreakdownExample) {
    // dense 3x3, k_i=256, k_o=32, 8x8 output, redundancy: 8 half tiles,
    // 3 check cycles each = 24 error-check cycles total.
    LayerJob j;
    j.kernel = Kernel::Dense3x3;
    j.k_i = 256;
    j.k_o = 32;
    j.h_o = j.w_o = 8;
    perf::CycleModel m;
    perf::CycleReport r = perf::breakdown(j, Mode::Redundancy, m);
    EXPECT_EQ(r.tiles, 8);
    EXPECT_EQ(r.error_check, 24);
    EXPECT_EQ(r.input_load, 8 * (8 + 8 * 44));
    EXPECT_EQ(r.mm, 8LL * 8 * 32 * 8);
    EXPECT_EQ(r.streamout, 8 * 24);
}

TEST(CycleModel, PointwiseBreakdownExample) {
    // pointwise, k_i=256, k_o=64, 16x16, redundancy: 4 rows x 8 cols x
    // 2 ko blocks = 64 half tiles.
    LayerJob j;
    j.kernel = Kernel::Pointwise1x1;
    j.k_i = 256;
    j.k_o = 64;
    j.h_o = j.w_o = 16;
    perf::CycleModel m;
    perf::CycleReport r = perf::breakdown(j, Mode::Redundancy, m);
    EXPECT_EQ(r.streamouts, 64);
    EXPECT_EQ(r.error_check, 64 * 3);
    EXPECT_EQ(r.input_load, 64 * (8 + 8 * 28));
}

TEST(CycleModel, ModeRelationsOnAlignedJobs) {
    // For grid-aligned jobs: redundancy does every MAC twice, so its MM time
    // is exactly twice baseline's; performance mode loads both halves
    // through the shared streamer, so its input-load time equals
    // redundancy's while MM halves.
    perf::CycleModel m;
    for (Kernel k : {Kernel::Pointwise1x1, Kernel::Dense3x3}) {
        LayerJob j;
        j.kernel = k;
        j.k_i = 256;
        j.k_o = 64;
        j.h_o = j.w_o = 16;
        auto red = perf::breakdown(j, Mode::Redundancy, m);
        auto prf = perf::breakdown(j, Mode::Performance, m);
        auto base = perf::breakdown(j, Mode::Baseline4x4, m);
        EXPECT_EQ(red.mm, 2 * base.mm);
        EXPECT_EQ(prf.mm, base.mm);
        EXPECT_EQ(prf.input_load, red.input_load);
        EXPECT_EQ(prf.streamout, red.streamout);
    }
}

TEST(CycleModel, BreakdownMatchesExecutedRun) {
    perf::CycleModel m;
    Rng rng(404);
    for (Kernel k : {Kernel::Pointwise1x1, Kernel::Dense3x3, Kernel::Depthwise3x3}) {
        LayerJob j;
        j.kernel = k;
        j.k_i = j.k_o = 32;
        j.h_o = 5;  // deliberately unaligned
        j.w_o = 7;
        j.quant = random_quant(j.k_o, rng);
        TensorBuf acts = random_acts(j, rng);
        TensorBuf weights = random_weights(j, rng);
        for (Mode mode : {Mode::Baseline4x4, Mode::Performance, Mode::Redundancy}) {
            j.mode = mode;
            sim::Simulator s(j, acts, weights, m);
            sim::RunResult r = s.run();
            perf::CycleReport want = perf::breakdown(j, mode, m);
            EXPECT_EQ(r.report, want) << to_string(k) << "/" << to_string(mode);
            EXPECT_EQ(r.cycles, want.total());
        }
    }
}

TEST(CycleModel, WatchdogBudget) {
    perf::CycleModel m;
    LayerJob j;
    j.kernel = Kernel::Pointwise1x1;
    j.k_i = j.k_o = 32;
    j.h_o = j.w_o = 4;
    int64_t total = perf::breakdown(j, Mode::Redundancy, m).total();
    EXPECT_EQ(perf::watchdog_budget(j, Mode::Redundancy, m),
              static_cast<int64_t>(total * m.watchdog_factor));
}
