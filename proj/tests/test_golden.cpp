// Reference-model tests: hand-computed examples, an externally generated
// brute-force fixture, and algebraic properties of the convolution and the
// requantizer.

#include <gtest/gtest.h>

#include <cstdint>
#include <fstream>
#include <vector>

#include "safenn/golden.hpp"
#include "safenn/rng.hpp"
#include "safenn/types.hpp"

using namespace safenn;

namespace {

// Same LCG as tests/fixtures/gen_conv_fixture.py.
struct Lcg {
    uint32_t state;
    explicit Lcg(uint32_t seed) : state(seed) {}
    int8_t next_i8() {
        state = 1664525u * state + 1013904223u;
        return static_cast<int8_t>(static_cast<int>((state >> 16) & 0xFF) - 128);
    }
};

QuantParams identity_quant(int k_o) {
    QuantParams q;
    q.scale.assign(static_cast<size_t>(k_o), 1);
    q.bias.assign(static_cast<size_t>(k_o), 0);
    q.shift = 0;
    return q;
}

}  // namespace

TEST(Golden, PointwiseIdentityKernel) {
    // 1x1 kernel with a single weight of 1 copies the input channel.
    LayerJob j;
    j.kernel = Kernel::Pointwise1x1;
    j.k_i = j.k_o = 1;
    j.h_o = j.w_o = 2;
    j.quant = identity_quant(1);
    TensorBuf acts(2, 2, 1), w(1, 1, 1);
    acts.at(0, 0, 0) = 3;
    acts.at(0, 1, 0) = -7;
    acts.at(1, 0, 0) = 0;
    acts.at(1, 1, 0) = 100;
    w.at(0, 0, 0) = 1;
    TensorBuf out = golden::layer_golden(j, acts, w);
    EXPECT_EQ(out.data, acts.data);
}

TEST(Golden, DenseAllOnesSumsReceptiveField) {
    // 3x3 kernel of ones over a constant-1 image: every output is 9.
    LayerJob j;
    j.kernel = Kernel::Dense3x3;
    j.k_i = j.k_o = 1;
    j.h_o = j.w_o = 3;
    j.quant = identity_quant(1);
    TensorBuf acts(5, 5, 1), w(1, 9, 1);
    for (auto& v : acts.data) v = 1;
    for (auto& v : w.data) v = 1;
    TensorBuf out = golden::layer_golden(j, acts, w);
    for (int8_t v : out.data) EXPECT_EQ(v, 9);
}

TEST(Golden, MatchesBruteForceFixture) {
    // conv_pw_seed42.bin holds the int32 accumulators of a 4x4x32 pointwise
    // convolution computed by the independent generator script.
    LayerJob j;
    j.kernel = Kernel::Pointwise1x1;
    j.k_i = j.k_o = 32;
    j.h_o = j.w_o = 4;
    j.quant = identity_quant(32);
    Lcg lcg(42);
    TensorBuf acts(4, 4, 32), w(32, 1, 32);
    for (auto& v : acts.data) v = lcg.next_i8();
    for (auto& v : w.data) v = lcg.next_i8();

    std::ifstream f(std::string(SAFENN_FIXTURE_DIR) + "/conv_pw_seed42.bin", std::ios::binary);
    ASSERT_TRUE(f.good());
    std::vector<int32_t> expect(4 * 4 * 32);
    f.read(reinterpret_cast<char*>(expect.data()),
           static_cast<std::streamsize>(expect.size() * 4));
    ASSERT_TRUE(f.good());
    // Spot-check the file itself against frozen values.
    EXPECT_EQ(expect[0], -33497);
    EXPECT_EQ(expect[1], 29818);
    EXPECT_EQ(expect[2], -6803);
    EXPECT_EQ(expect[3], -5860);
    EXPECT_EQ(expect[510], -45725);
    EXPECT_EQ(expect[511], -29115);

    AccumBuf acc = golden::conv_golden(j, acts, w);
    EXPECT_EQ(acc.data, expect);
}

TEST(Golden, RequantizeExamples) {
    QuantParams q;
    q.scale = {2};
    q.bias = {5};
    q.shift = 3;
    // (10*2 + 5) >> 3 = 3
    EXPECT_EQ(golden::requantize(10, 0, q), 3);
    // (-10*2 + 5) >> 3 = -15 >> 3 = -2 (arithmetic, floors)
    EXPECT_EQ(golden::requantize(-10, 0, q), -2);
    // saturation both ways
    EXPECT_EQ(golden::requantize(1 << 20, 0, q), 127);
    EXPECT_EQ(golden::requantize(-(1 << 20), 0, q), -128);
    // exact edges
    q.scale = {1};
    q.bias = {0};
    q.shift = 0;
    EXPECT_EQ(golden::requantize(127, 0, q), 127);
    EXPECT_EQ(golden::requantize(-128, 0, q), -128);
    EXPECT_EQ(golden::requantize(118, 0, q), 118);
    EXPECT_EQ(golden::requantize(128, 0, q), 127);
}

TEST(Golden, ConvolutionIsLinearInActivations) {
    LayerJob j;
    j.kernel = Kernel::Dense3x3;
    j.k_i = 8;
    j.k_o = 4;
    j.h_o = j.w_o = 3;
    j.quant = identity_quant(4);
    Rng rng(17);
    TensorBuf a1 = random_acts(j, rng), a2 = random_acts(j, rng);
    TensorBuf w = random_weights(j, rng);
    TensorBuf sum(a1.h, a1.w, a1.c);
    // Keep the sum in int8 range so linearity holds without wrap in inputs.
    for (size_t i = 0; i < sum.data.size(); ++i)
        sum.data[i] = static_cast<int8_t>((a1.data[i] / 2) + (a2.data[i] / 2));
    TensorBuf h1 = a1, h2 = a2;
    for (auto& v : h1.data) v = static_cast<int8_t>(v / 2);
    for (auto& v : h2.data) v = static_cast<int8_t>(v / 2);

    AccumBuf c1 = golden::conv_golden(j, h1, w);
    AccumBuf c2 = golden::conv_golden(j, h2, w);
    AccumBuf cs = golden::conv_golden(j, sum, w);
    for (size_t i = 0; i < cs.data.size(); ++i)
        EXPECT_EQ(static_cast<uint32_t>(cs.data[i]),
                  static_cast<uint32_t>(c1.data[i]) + static_cast<uint32_t>(c2.data[i]));
}

TEST(Golden, DepthwiseEqualsBlockDiagonalDense) {
    // A depthwise layer is a dense layer whose weight matrix is diagonal in
    // the channel dimension.
    LayerJob dw;
    dw.kernel = Kernel::Depthwise3x3;
    dw.k_i = dw.k_o = 6;
    dw.h_o = dw.w_o = 4;
    dw.quant = identity_quant(6);
    Rng rng(23);
    TensorBuf acts = random_acts(dw, rng);
    TensorBuf wdw = random_weights(dw, rng);  // [6][9][1]

    LayerJob dn = dw;
    dn.kernel = Kernel::Dense3x3;
    TensorBuf wdn(6, 9, 6);  // zero except the diagonal
    for (int oc = 0; oc < 6; ++oc)
        for (int tap = 0; tap < 9; ++tap) wdn.at(oc, tap, oc) = wdw.at(oc, tap, 0);

    AccumBuf a = golden::conv_golden(dw, acts, wdw);
    AccumBuf b = golden::conv_golden(dn, acts, wdn);
    EXPECT_EQ(a.data, b.data);
}

TEST(Golden, DimensionValidation) {
    LayerJob j;
    j.kernel = Kernel::Dense3x3;
    j.k_i = 4;
    j.k_o = 2;
    j.h_o = j.w_o = 2;
    j.quant = identity_quant(2);
    TensorBuf acts(3, 3, 4);  // too small: needs h_i = 4
    TensorBuf w(2, 9, 4);
    EXPECT_THROW(golden::conv_golden(j, acts, w), ConfigError);
    TensorBuf acts_ok(4, 4, 4);
    TensorBuf w_bad(2, 9, 3);
    EXPECT_THROW(golden::conv_golden(j, acts_ok, w_bad), ConfigError);
}

TEST(Golden, WeightPackingRoundTrip) {
    Rng rng(31);
    for (int qw = 2; qw <= 8; ++qw) {
        std::vector<int8_t> w(301);
        int lo = -(1 << (qw - 1)), hi = (1 << (qw - 1)) - 1;
        for (auto& v : w) v = static_cast<int8_t>(rng.range(lo, hi));
        auto packed = pack_weights(w, qw);
        EXPECT_EQ(packed.size(), (w.size() * static_cast<size_t>(qw) + 7) / 8);
        EXPECT_EQ(unpack_weights(packed, w.size(), qw), w);
    }
}
