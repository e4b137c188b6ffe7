#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mixq/cost.hpp"
#include "mixq/layer.hpp"
#include "mixq/packing.hpp"
#include "mixq/simd.hpp"

namespace mixq {

// One unit of 1-D convolution work.
struct ConvProblem {
    QuantizedTensor sequence;
    QuantizedTensor kernel;
    PackingPlan plan;
};

struct ConvResult {
    std::vector<uint64_t> outputs;  // length |sequence| + |kernel| - 1
    InstrCounts counts;             // counters for this run only
    PackingPlan plan_used;
};

struct KernelOptions {
    // Recompute every packed product in wide-integer arithmetic and throw
    // FieldOverflow when a field would not fit its slot. Off by default:
    // release mode trusts the PackingPlan feasibility proof.
    bool validate = false;
    // Verify the plan invariants on entry. Disabled only by fault-injection
    // tests that want to drive the shadow check with an illegal plan.
    bool check_plan = true;
};

// Exact linear convolution y[n] = sum_{i+j=n} s[i]*k[j], wide-integer
// arithmetic, no truncation. The correctness oracle for everything else.
std::vector<uint64_t> reference_conv(const QuantizedTensor& s, const QuantizedTensor& k);

// Packing -> one SIMD multiply per register -> shift/mask/get extraction,
// overlap-adding boundary fields through the output array. Sequence
// elements fill lanes in natural order, N_s per lane, N_s*N_l per
// register; the final register of a ragged sequence is zero padded.
ConvResult slbc_naive(const ConvProblem& p, SimdCtx& ctx, const KernelOptions& opts = {});

// Reordered packing: lane y of consecutive registers holds consecutive
// segments, so boundary fields line up across registers and merge with
// one vector add per multiply; a local accumulator is consumed with one
// vector shift per round and flushed every chain_group_factor(plan)*N_l
// multiplies. Requires plan.accum_rounds == N_l. Degenerate geometries
// (kernel length 1, one lane, or one element per register) fall back to
// the naive schedule unchanged.
ConvResult slbc_reordered(const ConvProblem& p, SimdCtx& ctx, const KernelOptions& opts = {});

ConvResult run_kernel(Variant v, const ConvProblem& p, SimdCtx& ctx,
                      const KernelOptions& opts = {});

// Sequence lengths at which the kernel's counters hit the closed-form
// fast path exactly, with no padded or tail work.
uint64_t group_elems(const PackingPlan& plan, size_t ker_len, Variant variant);

std::span<const SimdShape> all_shapes();

struct PlanChoice {
    PackingPlan plan;
    double predicted_cost = 0.0;
};

// Enumerates every shape in `shapes` (default: all supported), derives
// the best plan for each and returns the one whose predicted score is
// lowest. Deterministic tie-break: smaller register, then larger N_s.
PlanChoice select_plan(unsigned seq_bits, unsigned ker_bits, size_t kernel_len, size_t seq_len,
                       const CostParams& params, Variant variant = Variant::reordered,
                       std::span<const SimdShape> shapes = {});

// Multi-channel 2-D input: channels[c] holds h*w values, row major.
struct ChannelGrid {
    size_t h = 0;
    size_t w = 0;
    std::vector<QuantizedTensor> channels;
};

struct LayerResult {
    // One (h+k-1) x (w+k-1) full-convolution plane per output channel.
    std::vector<std::vector<uint64_t>> channels;
    size_t out_h = 0;
    size_t out_w = 0;
    InstrCounts counts;
    PackingPlan plan_used;
};

// Lowers a 2-D multi-channel convolution layer to rows of 1-D SLBC
// problems with channel-wise accumulation. weights[oc][ic] holds the
// k*k taps, row major.
LayerResult conv_layer(const ChannelGrid& inputs,
                       const std::vector<std::vector<QuantizedTensor>>& weights,
                       const LayerSpec& layer, SimdCtx& ctx,
                       Variant variant = Variant::reordered, const CostParams& params = {});

}  // namespace mixq
