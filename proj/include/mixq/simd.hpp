#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "mixq/errors.hpp"

namespace mixq {

using u128 = unsigned __int128;

// All-ones mask of the low `bits` bits, bits <= 64.
inline uint64_t mask64(unsigned bits) {
    return bits >= 64 ? ~0ull : ((1ull << bits) - 1);
}

inline u128 mask128(unsigned bits) {
    return bits >= 128 ? ~u128{0} : ((u128{1} << bits) - 1);
}

// Geometry of the emulated register file: a register of `register_bits`
// split into independent lanes of `lane_bits`. Lane l occupies payload
// bits [l*lane_bits, (l+1)*lane_bits). Supported sizes mirror the 32-bit
// DSP-extension registers of Cortex-M parts and NEON-class 64/128-bit
// registers.
struct SimdShape {
    unsigned register_bits = 32;
    unsigned lane_bits = 8;

    unsigned lane_count() const { return register_bits / lane_bits; }

    bool operator==(const SimdShape&) const = default;

    static bool is_supported(unsigned reg_bits, unsigned lane_bits) {
        const bool reg_ok = reg_bits == 32 || reg_bits == 64 || reg_bits == 128;
        const bool lane_ok = lane_bits == 8 || lane_bits == 16 || lane_bits == 32 || lane_bits == 64;
        return reg_ok && lane_ok && lane_bits <= reg_bits && reg_bits % lane_bits == 0;
    }
};

// Throws ShapeMismatch if the shape is not one of the supported geometries.
SimdShape make_shape(unsigned register_bits, unsigned lane_bits);

// One register value. The payload never has bits set at or above
// register_bits.
struct SimdVec {
    SimdShape shape;
    u128 bits = 0;

    bool operator==(const SimdVec&) const = default;
};

std::string to_hex(const SimdVec& v);

// Per-class instruction tallies. Monotone within a run; ops only add.
//
// Counting conventions shared by the kernels and the closed-form cost
// model (see cost.hpp):
//   bit_ops       shifts, ands, dups, lane extracts (vector or scalar)
//   simd_mul      vector multiplies
//   simd_addsub   vector add/sub
//   loads_stores  vld/vst plus engine-side element loads and the
//                 load+store of each output accumulation
//   sisd_arith    scalar adds/muls (output accumulation, tail MACs)
//   seg_ops       "of which" tally: bit_ops issued inside segmentation-
//                 overhead extraction rounds (the boundary-field rounds
//                 beyond the N_s payload fields of each product register)
struct InstrCounts {
    uint64_t sisd_arith = 0;
    uint64_t simd_mul = 0;
    uint64_t simd_addsub = 0;
    uint64_t bit_ops = 0;
    uint64_t loads_stores = 0;
    uint64_t seg_ops = 0;

    bool operator==(const InstrCounts&) const = default;

    InstrCounts operator-(const InstrCounts& o) const {
        return {sisd_arith - o.sisd_arith, simd_mul - o.simd_mul,
                simd_addsub - o.simd_addsub, bit_ops - o.bit_ops,
                loads_stores - o.loads_stores, seg_ops - o.seg_ops};
    }
    InstrCounts& operator+=(const InstrCounts& o) {
        sisd_arith += o.sisd_arith;
        simd_mul += o.simd_mul;
        simd_addsub += o.simd_addsub;
        bit_ops += o.bit_ops;
        loads_stores += o.loads_stores;
        seg_ops += o.seg_ops;
        return *this;
    }
};

// Emulator context: the register-file semantics plus counters. Contexts
// are independent values; distinct contexts may be used from distinct
// threads, a single context is single-threaded.
class SimdCtx {
public:
    // --- vector ops -------------------------------------------------
    // Replicate scalar into every lane. scalar must fit a lane.
    SimdVec vdup(SimdShape shape, uint64_t scalar);
    // Per-lane modular multiply (low lane_bits of the product).
    SimdVec vmul(const SimdVec& a, const SimdVec& b);
    // Per-lane modular add, no cross-lane carry.
    SimdVec vadd(const SimdVec& a, const SimdVec& b);
    // Per-lane logical shift right, zero fill, 0 <= amount < lane_bits.
    SimdVec vshr(const SimdVec& a, unsigned amount);
    // Bitwise and.
    SimdVec vand(const SimdVec& a, const SimdVec& b);
    // Extract lane contents as a scalar.
    uint64_t vget(const SimdVec& a, unsigned lane);
    // Assemble a register from per-lane words (a memory load).
    // Each word must fit a lane.
    SimdVec vld(SimdShape shape, std::span<const uint64_t> lane_words);

    // --- engine-side scalar tallies ----------------------------------
    // The convolution kernels perform scalar work (packing, output
    // accumulation) outside the vector ops; they account for it here so
    // counters describe the whole kernel.
    void note_sisd(uint64_t n = 1) { counts_.sisd_arith += n; }
    void note_bit(uint64_t n = 1) { counts_.bit_ops += n; }
    void note_load_store(uint64_t n = 1) { counts_.loads_stores += n; }

    // --- counters -----------------------------------------------------
    void reset_counters() { counts_ = InstrCounts{}; }
    InstrCounts read_counters() const { return counts_; }

    // While a SegScope is alive, every bit_op issued is also tallied as
    // seg_ops. Kernels wrap the boundary-field extraction rounds in one.
    class SegScope {
    public:
        explicit SegScope(SimdCtx& ctx) : ctx_(ctx) { ++ctx_.seg_depth_; }
        ~SegScope() { --ctx_.seg_depth_; }
        SegScope(const SegScope&) = delete;
        SegScope& operator=(const SegScope&) = delete;

    private:
        SimdCtx& ctx_;
    };

private:
    friend class SegScope;
    void bump_bit() {
        ++counts_.bit_ops;
        if (seg_depth_ > 0) ++counts_.seg_ops;
    }
    static uint64_t lane_of(const SimdVec& v, unsigned lane) {
        return static_cast<uint64_t>((v.bits >> (lane * v.shape.lane_bits)) &
                                     mask128(v.shape.lane_bits));
    }
    static void check_same_shape(const SimdVec& a, const SimdVec& b);

    InstrCounts counts_;
    int seg_depth_ = 0;
};

}  // namespace mixq
