#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mixq/simd.hpp"

namespace mixq {

// The legality certificate for a packed convolution. A lane holds N_s
// sequence elements (or N_k kernel elements) in slots of slot_bits each;
// a slot of the product register then holds one convolution field.
//
// Feasibility (see validate_plan):
//   1. slot_bits >= seq_bits + ker_bits + ceil(log2(min(N_s, N_k)))
//                 + ceil(log2(accum_rounds))        -- carries never cross slots
//   2. (N_s-1)*slot_bits + seq_bits <= lane_bits       -- sequence operand fits
//      (N_k-1)*slot_bits + ker_bits <= lane_bits       -- kernel operand fits
//   3. (N_s-1+N_k-1)*slot_bits + seq_bits + ker_bits
//        + ceil(log2(min)) + ceil(log2(accum)) <= lane_bits
//                                                  -- low-half product is exact
struct PackingPlan {
    unsigned seq_bits = 0;       // bits per sequence element, 2..8
    unsigned ker_bits = 0;       // bits per kernel element, 2..8
    unsigned elems_per_lane_seq = 1;  // N_s
    unsigned elems_per_lane_ker = 1;  // N_k
    unsigned slot_bits = 0;      // G_b
    SimdShape shape;
    unsigned accum_rounds = 1;   // local accumulations before extraction; 1 for naive

    // MACs performed by a single SIMD multiply under this plan.
    uint64_t macs_per_simd_mul() const {
        return uint64_t{elems_per_lane_seq} * elems_per_lane_ker * shape.lane_count();
    }

    bool operator==(const PackingPlan&) const = default;
};

unsigned ceil_log2(uint64_t v);  // ceil(log2(v)), 0 for v <= 1

// Minimal legal slot width for the given geometry.
unsigned min_slot_bits(unsigned seq_bits, unsigned ker_bits, unsigned n_seq, unsigned n_ker,
                       unsigned accum_rounds);

// True iff the plan satisfies all feasibility constraints above.
bool plan_is_feasible(const PackingPlan& p);
// Throws InfeasiblePlan with the violated constraint named.
void validate_plan(const PackingPlan& p);

// A stream of unsigned quantized values, each below 2^bits. Signed data
// is mapped into this domain by adding zero_point before packing; the
// cross-terms are subtracted analytically afterwards (signed_conv).
struct QuantizedTensor {
    std::vector<uint64_t> values;
    unsigned bits = 8;
    uint64_t zero_point = 0;
};

// Throws SlotOverflow if any value has bits at or above `bits`.
QuantizedTensor make_tensor(std::vector<uint64_t> values, unsigned bits, uint64_t zero_point = 0);

// Best plan for the given bitwidths on one shape: maximizes N_s*N_k,
// ties broken by larger N_s, then smaller slot width. When kernel_len is
// given, N_k is pinned to it (whole kernel in one lane) and only N_s is
// swept. Throws NoFeasiblePlan.
PackingPlan derive_plan(unsigned seq_bits, unsigned ker_bits, SimdShape shape,
                        unsigned accum_rounds, std::optional<unsigned> kernel_len = std::nullopt);

// Word packing: sum of values[i] << (i*slot_bits) into a word_bits-wide
// word. SlotOverflow if a value has bits at or above slot_bits;
// WordOverflow if a nonzero value would be shifted past word_bits.
uint64_t pack_word(std::span<const uint64_t> values, unsigned slot_bits, unsigned word_bits = 64);

// Inverse slicing: count fields of slot_bits each, low first. Pure bit
// slicing, never fails; fields past the word width read as zero.
std::vector<uint64_t> extract_fields(uint64_t word, unsigned slot_bits, unsigned count);
std::vector<uint64_t> extract_fields_wide(u128 word, unsigned slot_bits, unsigned count);

// Scalar packed convolution: packs N_s-element segments of s and the
// whole kernel into words, one wide multiply per segment, extracts the
// fields and overlap-adds the N_k-1 boundary outputs between adjacent
// segments. Exact linear convolution of length |s|+|k|-1. No emulator,
// no counters; this is the pre-SIMD form of the algebra.
std::vector<uint64_t> scalar_packed_conv(const QuantizedTensor& s, const QuantizedTensor& k,
                                         const PackingPlan& plan);

// Shadow wide-integer check used by debug validation: true iff some
// convolution field of segment (x) kernel would not fit slot_bits.
// Accumulated values may be pre-loaded via `carry_in` (one entry per
// field position) to model local accumulation.
bool fields_overflow(std::span<const uint64_t> segment, std::span<const uint64_t> kernel,
                     unsigned slot_bits, std::span<const uint64_t> carry_in = {});

// Signed convolution computed through the unsigned packing domain:
// values are stored offset by zero_point; the result subtracts the
// analytic cross-terms so it equals the convolution of the signed data.
std::vector<int64_t> signed_conv(const QuantizedTensor& s, const QuantizedTensor& k,
                                 const PackingPlan& plan);

// Local-accumulation span of the reordered kernel, in groups of
// N_s*N_l^2 elements: N_s groups when the slot-depth bound
// 2 + floor((K-2)/N_s) stays within accum_rounds lanes, else 1 group.
// The reordered kernel flushes its accumulator every
// chain_group_factor * N_l multiplies.
unsigned chain_group_factor(const PackingPlan& plan, size_t kernel_len);

}  // namespace mixq
