#pragma once

// ECC'd scratchpad (TCDM) plus the wide streamer port. 16 banks of 39-bit
// words, word-level interleaved (bank = word index mod 16). The streamer
// moves up to nine 32-bit chunks per beat; payload and metadata are SECDED
// protected end to end.

#include <algorithm>
#include <cstring>
#include <functional>
#include <vector>

#include "safenn/ecc.hpp"
#include "safenn/types.hpp"

namespace safenn::mem {

using ecc::Codeword;
using ecc::DecodeKind;
using ecc::DecodeStatus;

constexpr int kNumBanks = 16;
constexpr int kDefaultBankDepth = 2048;  // 16 banks * 2048 words * 4 B = 128 kB
constexpr int kChunksPerBeat = 9;
constexpr int kBeatBytes = kChunksPerBeat * 4;

struct ErrorRegisters {
    uint64_t corrected_payload = 0;
    uint64_t corrected_metadata = 0;
    uint64_t uncorrectable_payload = 0;
    uint64_t uncorrectable_metadata = 0;
    uint32_t last_error_addr = 0;
};

class Tcdm {
  public:
    explicit Tcdm(int bank_depth = kDefaultBankDepth)
        : bank_depth_(bank_depth), words_(static_cast<size_t>(bank_depth) * kNumBanks, 0) {
        // All-zero is a valid codeword, so a zeroed memory is clean.
    }

    int bank_depth() const { return bank_depth_; }
    size_t capacity_bytes() const { return words_.size() * 4; }
    size_t num_words() const { return words_.size(); }

    // word index = byte address >> 2; bank = index mod 16; row = index / 16
    Codeword& word(size_t index) { return words_[index]; }
    Codeword word(size_t index) const { return words_[index]; }
    Codeword& bank_word(int bank, int row) { return words_[static_cast<size_t>(row) * kNumBanks + bank]; }

    bool in_range(uint32_t addr, size_t bytes) const {
        return static_cast<size_t>(addr) + bytes <= capacity_bytes();
    }

    void check_range(uint32_t addr, size_t bytes) const {
        if ((addr & 3u) != 0) throw ConfigError("stream address must be 4-byte aligned");
        if (!in_range(addr, bytes)) throw ConfigError("stream access outside TCDM");
    }

    ErrorRegisters& errors() { return errors_; }
    const ErrorRegisters& errors() const { return errors_; }

    // ---- transaction metadata path ------------------------------------
    // Decode-and-correct immediately before the banks. Returns the corrected
    // fields; uncorrectable metadata is reported and the caller must drop
    // the transaction.
    std::pair<ecc::Metadata, DecodeStatus> metadata_roundtrip(uint32_t addr, uint8_t be, bool we,
                                                              int flip_a = -1, int flip_b = -1) {
        Codeword w = ecc::metadata_code().encode(ecc::pack_metadata(addr, be, we));
        if (flip_a >= 0) w ^= 1ull << flip_a;
        if (flip_b >= 0) w ^= 1ull << flip_b;
        auto [bits, st] = ecc::metadata_code().decode(w);
        if (st.corrected()) ++errors_.corrected_metadata;
        if (st.uncorrectable()) {
            ++errors_.uncorrectable_metadata;
            errors_.last_error_addr = addr;
        }
        return {ecc::unpack_metadata(bits), st};
    }

    // ---- payload path ---------------------------------------------------
    // One call = one beat (one simulated cycle on the 288-bit port). The
    // corrupt hook, when set, is applied to each in-flight codeword and
    // models streamer-buffer / wire faults between the banks and the engine.
    using CorruptHook = std::function<Codeword(int chunk, Codeword w)>;

    std::vector<DecodeStatus> stream_load(uint32_t addr, int n_chunks, uint32_t* out,
                                          const CorruptHook& corrupt = nullptr) {
        check_range(addr, static_cast<size_t>(n_chunks) * 4);
        std::vector<DecodeStatus> statuses(n_chunks);
        auto [meta, mst] = metadata_roundtrip(addr, 0xf, false);
        if (mst.uncorrectable()) return statuses;  // dropped; caller sees flagged registers
        size_t base = meta.addr >> 2;
        for (int c = 0; c < n_chunks; ++c) {
            Codeword w = words_[base + c];
            if (corrupt) w = corrupt(c, w);
            auto [data, st] = ecc::payload_code().decode(w);
            out[c] = static_cast<uint32_t>(data);
            statuses[c] = st;
            if (st.corrected()) ++errors_.corrected_payload;
            if (st.uncorrectable()) {
                ++errors_.uncorrectable_payload;
                errors_.last_error_addr = addr + static_cast<uint32_t>(c) * 4;
            }
        }
        return statuses;
    }

    // Full-word store of up to 9 chunks.
    void stream_store(uint32_t addr, int n_chunks, const uint32_t* chunks,
                      const CorruptHook& corrupt = nullptr) {
        check_range(addr, static_cast<size_t>(n_chunks) * 4);
        auto [meta, mst] = metadata_roundtrip(addr, 0xf, true);
        if (mst.uncorrectable()) return;  // transaction dropped and flagged
        size_t base = meta.addr >> 2;
        for (int c = 0; c < n_chunks; ++c) {
            Codeword w = ecc::payload_code().encode(chunks[c]);
            if (corrupt) w = corrupt(c, w);
            words_[base + c] = w;
        }
    }

    // Sub-word store: read-modify-write with re-encode, byte-enable granular.
    void store_bytes(uint32_t addr, const uint8_t* bytes, size_t len) {
        if (!in_range(addr, len)) throw ConfigError("store outside TCDM");
        size_t i = 0;
        while (i < len) {
            uint32_t a = addr + static_cast<uint32_t>(i);
            size_t widx = a >> 2;
            int off = a & 3;
            auto [data, st] = ecc::payload_code().decode(words_[widx]);
            if (st.corrected()) ++errors_.corrected_payload;
            if (st.uncorrectable()) ++errors_.uncorrectable_payload;
            uint32_t v = static_cast<uint32_t>(data);
            for (; off < 4 && i < len; ++off, ++i) {
                v &= ~(0xffu << (off * 8));
                v |= static_cast<uint32_t>(bytes[i]) << (off * 8);
            }
            words_[widx] = ecc::payload_code().encode(v);
        }
    }

    void load_bytes(uint32_t addr, uint8_t* bytes, size_t len) {
        if (!in_range(addr, len)) throw ConfigError("load outside TCDM");
        size_t i = 0;
        while (i < len) {
            uint32_t a = addr + static_cast<uint32_t>(i);
            size_t widx = a >> 2;
            int off = a & 3;
            auto [data, st] = ecc::payload_code().decode(words_[widx]);
            if (st.corrected()) ++errors_.corrected_payload;
            if (st.uncorrectable()) ++errors_.uncorrectable_payload;
            uint32_t v = static_cast<uint32_t>(data);
            for (; off < 4 && i < len; ++off, ++i) bytes[i] = static_cast<uint8_t>(v >> (off * 8));
        }
    }

    // ---- scrubber -------------------------------------------------------
    // Visits one word, rewrites the corrected codeword on single-bit errors,
    // leaves uncorrectable words untouched.
    DecodeStatus scrub_step(int bank, int row) {
        Codeword& w = bank_word(bank, row);
        uint8_t s = ecc::payload_code().syndrome(w);
        if (s == 0) return {DecodeKind::NoError, -1};
        Codeword fixed = ecc::payload_code().correct_word(w);
        if (fixed == w) {
            ++errors_.uncorrectable_payload;
            return {DecodeKind::DetectedUncorrectable, -1};
        }
        w = fixed;
        ++errors_.corrected_payload;
        return {DecodeKind::Corrected, -1};
    }

    // Advances the scrub pointer by one word across the whole array.
    DecodeStatus scrub_advance() {
        int bank = static_cast<int>(scrub_ptr_ % kNumBanks);
        int row = static_cast<int>(scrub_ptr_ / kNumBanks);
        scrub_ptr_ = (scrub_ptr_ + 1) % num_words();
        return scrub_step(bank, row);
    }

    uint64_t scrub_period = 0;  // cycles between scrub steps, 0 = disabled

    // ---- raw image ------------------------------------------------------
    // Payload-only image; check bits are regenerated on load.
    std::vector<uint8_t> dump_image() const {
        std::vector<uint8_t> img(capacity_bytes());
        for (size_t i = 0; i < num_words(); ++i) {
            uint32_t v = static_cast<uint32_t>(ecc::payload_code().correct_word(words_[i]) &
                                               ecc::payload_code().data_mask());
            std::memcpy(&img[i * 4], &v, 4);
        }
        return img;
    }

    void load_image(const std::vector<uint8_t>& img) {
        if (img.size() > capacity_bytes()) throw ConfigError("image larger than TCDM");
        for (size_t i = 0; i * 4 < img.size(); ++i) {
            uint32_t v = 0;
            std::memcpy(&v, &img[i * 4], std::min<size_t>(4, img.size() - i * 4));
            words_[i] = ecc::payload_code().encode(v);
        }
    }

    // Direct snapshot/restore of the raw codeword array, used by the fault
    // campaign to reset memory between injections without re-encoding.
    const std::vector<Codeword>& raw_words() const { return words_; }
    void restore_raw(const std::vector<Codeword>& snap) { words_ = snap; }
    void reset_errors() { errors_ = ErrorRegisters{}; }

  private:
    int bank_depth_;
    std::vector<Codeword> words_;
    ErrorRegisters errors_;
    size_t scrub_ptr_ = 0;
};

}  // namespace safenn::mem
