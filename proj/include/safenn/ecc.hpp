#pragma once

// Hsiao SECDED codec for 32-bit payload words (39,32) and 37-bit metadata
// words (44,37). All H-matrix columns have odd weight and are pairwise
// distinct: single-bit errors map to unique syndromes, double-bit errors
// produce even-weight (hence non-column) syndromes and are detected.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "safenn/types.hpp"

namespace safenn::ecc {

constexpr int kCheckBits = 7;

enum class DecodeKind : uint8_t { NoError, Corrected, DetectedUncorrectable };

struct DecodeStatus {
    DecodeKind kind = DecodeKind::NoError;
    int bit_index = -1;  // corrected bit position, valid when kind == Corrected

    bool corrected() const { return kind == DecodeKind::Corrected; }
    bool uncorrectable() const { return kind == DecodeKind::DetectedUncorrectable; }
};

// A codeword is kept in the low (data_bits + 7) bits of a uint64:
// bits [0, data_bits) are data, bits [data_bits, data_bits+7) are checks.
using Codeword = uint64_t;

class HsiaoCode {
  public:
    // data_bits must be 32 (payload) or 37 (metadata).
    explicit HsiaoCode(int data_bits) : data_bits_(data_bits) {
        if (data_bits != 32 && data_bits != 37) throw ConfigError("HsiaoCode supports 32 or 37 data bits");
        // Data columns: the lexicographically (numerically) smallest odd-weight
        // 7-bit vectors of weight 3, then weight 5 once those run out.
        int taken = 0;
        for (int weight : {3, 5}) {
            for (int v = 1; v < 128 && taken < data_bits; ++v) {
                if (popcount7(v) == weight) columns_[taken++] = static_cast<uint8_t>(v);
            }
            if (taken == data_bits) break;
        }
        // Check columns are the weight-1 unit vectors.
        for (int j = 0; j < kCheckBits; ++j) columns_[data_bits + j] = static_cast<uint8_t>(1u << j);

        for (auto& m : row_mask_) m = 0;
        for (int i = 0; i < data_bits; ++i)
            for (int j = 0; j < kCheckBits; ++j)
                if (columns_[i] & (1u << j)) row_mask_[j] |= 1ull << i;

        for (auto& s : syndrome_to_bit_) s = -1;
        for (int i = 0; i < total_bits(); ++i) syndrome_to_bit_[columns_[i]] = i;
    }

    int data_bits() const { return data_bits_; }
    int total_bits() const { return data_bits_ + kCheckBits; }
    uint64_t data_mask() const { return (data_bits_ == 64) ? ~0ull : ((1ull << data_bits_) - 1); }

    uint8_t column(int i) const { return columns_[i]; }

    uint8_t check_bits(uint64_t data) const {
        uint8_t c = 0;
        for (int j = 0; j < kCheckBits; ++j)
            c |= static_cast<uint8_t>(parity(data & row_mask_[j]) << j);
        return c;
    }

    Codeword encode(uint64_t data) const {
        data &= data_mask();
        return data | (static_cast<uint64_t>(check_bits(data)) << data_bits_);
    }

    uint8_t syndrome(Codeword word) const {
        uint64_t data = word & data_mask();
        uint8_t stored = static_cast<uint8_t>(word >> data_bits_) & 0x7f;
        return static_cast<uint8_t>(check_bits(data) ^ stored);
    }

    // Decode in place semantics: returns (possibly corrected) data and status.
    // Uncorrectable words pass the data through unchanged.
    std::pair<uint64_t, DecodeStatus> decode(Codeword word) const {
        uint8_t s = syndrome(word);
        if (s == 0) return {word & data_mask(), {DecodeKind::NoError, -1}};
        int bit = syndrome_to_bit_[s];
        if (bit < 0) return {word & data_mask(), {DecodeKind::DetectedUncorrectable, -1}};
        Codeword fixed = word ^ (1ull << bit);
        return {fixed & data_mask(), {DecodeKind::Corrected, bit}};
    }

    Codeword correct_word(Codeword word) const {
        uint8_t s = syndrome(word);
        if (s == 0) return word;
        int bit = syndrome_to_bit_[s];
        return bit < 0 ? word : (word ^ (1ull << bit));
    }

    // Text form of H for the --dump-hmatrix audit artifact.
    std::string dump() const {
        std::string out = "H matrix (" + std::to_string(total_bits()) + "," + std::to_string(data_bits_) + "), rows are check equations, columns bit 0.." +
                          std::to_string(total_bits() - 1) + ":\n";
        for (int j = kCheckBits - 1; j >= 0; --j) {
            for (int i = 0; i < total_bits(); ++i) out += (columns_[i] & (1u << j)) ? '1' : '0';
            out += '\n';
        }
        return out;
    }

  private:
    static int popcount7(int v) { return __builtin_popcount(static_cast<unsigned>(v)); }
    static uint64_t parity(uint64_t v) { return static_cast<uint64_t>(__builtin_parityll(v)); }

    int data_bits_;
    std::array<uint8_t, 44> columns_{};
    std::array<uint64_t, kCheckBits> row_mask_{};
    std::array<int, 128> syndrome_to_bit_{};
};

inline const HsiaoCode& payload_code() {
    static const HsiaoCode code(32);
    return code;
}

inline const HsiaoCode& metadata_code() {
    static const HsiaoCode code(37);
    return code;
}

// Metadata packing per the protected transaction fields, listed order:
// 32-bit address, 4-bit byte enable, 1-bit write enable.
inline uint64_t pack_metadata(uint32_t addr, uint8_t be, bool we) {
    return static_cast<uint64_t>(addr) | (static_cast<uint64_t>(be & 0xf) << 32) |
           (static_cast<uint64_t>(we ? 1 : 0) << 36);
}

struct Metadata {
    uint32_t addr;
    uint8_t be;
    bool we;
};

inline Metadata unpack_metadata(uint64_t bits) {
    return {static_cast<uint32_t>(bits & 0xffffffffull), static_cast<uint8_t>((bits >> 32) & 0xf),
            ((bits >> 36) & 1) != 0};
}

}  // namespace safenn::ecc
