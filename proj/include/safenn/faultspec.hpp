#pragma once

// Fault vocabulary shared by the simulator and the injection harness.
// An SEU flips one bit of persistent state at a given cycle and the flip
// stays until overwritten. An SET flips one combinational signal for one
// cycle; it only matters if downstream state samples it in that window.

#include <cstdint>
#include <string>

namespace safenn::flt {

enum class SiteKind : uint8_t {
    // state (SEU) sites
    TcdmCell,      // elem = word index, bit in [0,39)
    StreamerBuf,   // elem = chunk lane in beat, bit = codeword bit in [0,39)
    InputBufMain,  // elem = byte, bit in [0,8)
    InputBufB,
    OffsetBuf,
    RequantMain,   // requantized output registers, main half
    RequantB,
    Accumulator,   // elem = pe*32 + oc, bit in [0,32)
    UloopCounter,  // elem = replica*8 + loop*4 + counter, bit in [0,16)
    FsmReg,        // elem = replica*3 + {0:state(3b), 1:phase(16b), 2:flags(2b)}
    RegFileField,  // elem = replica*7 + field, per-field widths
    // combinational (SET) sites
    SetMac,      // elem = pe*32 + oc lane, bit in [0,32); sampled by the accumulator
    SetChecker,  // single compare-result wire
    SetVoter,    // elem = voted word, bit < word width
    SetEccEnc,   // elem = chunk lane, bit in [0,32); corrupts data before encoding
    SetEccDec,   // elem = chunk lane, bit in [0,32); corrupts data after decoding
};

constexpr int kNumSiteKinds = 16;

enum class FaultKind : uint8_t { Seu, Set };

inline FaultKind kind_of(SiteKind s) {
    switch (s) {
        case SiteKind::SetMac:
        case SiteKind::SetChecker:
        case SiteKind::SetVoter:
        case SiteKind::SetEccEnc:
        case SiteKind::SetEccDec: return FaultKind::Set;
        default: return FaultKind::Seu;
    }
}

// Single points of failure: faults past the output check, in the voted
// control signals, or inside the shared ECC codecs can escape detection.
// Everything else is covered by the detect-and-retry guarantee.
inline bool is_spof_site(SiteKind s) {
    switch (s) {
        case SiteKind::OffsetBuf:
        case SiteKind::SetChecker:
        case SiteKind::SetVoter:
        case SiteKind::SetEccEnc:
        case SiteKind::SetEccDec: return true;
        default: return false;
    }
}

// Replicated control-plane registers (the controller-only campaign filter).
inline bool is_controller_site(SiteKind s) {
    return s == SiteKind::UloopCounter || s == SiteKind::FsmReg || s == SiteKind::RegFileField;
}

inline const char* to_string(SiteKind s) {
    switch (s) {
        case SiteKind::TcdmCell: return "tcdm_cell";
        case SiteKind::StreamerBuf: return "streamer_buf";
        case SiteKind::InputBufMain: return "input_buf_main";
        case SiteKind::InputBufB: return "input_buf_b";
        case SiteKind::OffsetBuf: return "offset_buf";
        case SiteKind::RequantMain: return "requant_main";
        case SiteKind::RequantB: return "requant_b";
        case SiteKind::Accumulator: return "accumulator";
        case SiteKind::UloopCounter: return "uloop_counter";
        case SiteKind::FsmReg: return "fsm_reg";
        case SiteKind::RegFileField: return "regfile_field";
        case SiteKind::SetMac: return "set_mac";
        case SiteKind::SetChecker: return "set_checker";
        case SiteKind::SetVoter: return "set_voter";
        case SiteKind::SetEccEnc: return "set_ecc_enc";
        case SiteKind::SetEccDec: return "set_ecc_dec";
    }
    return "?";
}

struct FaultSpec {
    SiteKind site = SiteKind::TcdmCell;
    uint32_t elem = 0;
    uint32_t bit = 0;
    int64_t cycle = 0;

    FaultKind kind() const { return kind_of(site); }

    bool operator==(const FaultSpec&) const = default;
};

inline std::string to_string(const FaultSpec& f) {
    return std::string(to_string(f.site)) + "[" + std::to_string(f.elem) + "]." +
           std::to_string(f.bit) + "@" + std::to_string(f.cycle);
}

}  // namespace safenn::flt
