#include "mixq/conv.hpp"

#include <algorithm>
#include <array>

namespace mixq {

std::vector<uint64_t> reference_conv(const QuantizedTensor& s, const QuantizedTensor& k) {
    if (s.values.empty() || k.values.empty()) throw EmptyInput("convolution of empty operand");
    std::vector<uint64_t> y(s.values.size() + k.values.size() - 1, 0);
    for (size_t i = 0; i < s.values.size(); ++i) {
        for (size_t j = 0; j < k.values.size(); ++j) {
            y[i + j] += s.values[i] * k.values[j];
        }
    }
    return y;
}

namespace {

struct KernelEnv {
    const PackingPlan& plan;
    std::span<const uint64_t> seq;
    std::span<const uint64_t> ker;
    unsigned lanes;
    unsigned n;           // elements per lane
    unsigned gbits;       // slot width
    size_t klen;
    SimdVec vmask;
    SimdVec vkernel;
    bool validate;
};

void check_problem(const ConvProblem& p, const KernelOptions& opts) {
    if (opts.check_plan) validate_plan(p.plan);
    if (p.sequence.values.empty() || p.kernel.values.empty()) {
        throw EmptyInput("convolution of empty operand");
    }
    if (p.sequence.bits != p.plan.seq_bits || p.kernel.bits != p.plan.ker_bits) {
        throw PlanMismatch("tensor bitwidths do not match the plan");
    }
    if (p.kernel.values.size() > p.plan.elems_per_lane_ker) {
        throw InfeasiblePlan("kernel does not fit in one lane under this plan");
    }
    if (p.sequence.values.size() < p.kernel.values.size()) {
        throw DimMismatch("sequence shorter than kernel");
    }
}

// Kernel word packed once, broadcast to every lane; plus the slot mask.
KernelEnv make_env(const ConvProblem& p, SimdCtx& ctx, const KernelOptions& opts) {
    const unsigned lane_bits = p.plan.shape.lane_bits;
    uint64_t kword = 0;
    for (size_t i = 0; i < p.kernel.values.size(); ++i) {
        ctx.note_load_store(1);
        ctx.note_bit(1);
        kword |= p.kernel.values[i] << (i * p.plan.slot_bits);
    }
    const uint64_t field_mask = mask64(std::min(p.plan.slot_bits, lane_bits));
    KernelEnv env{p.plan,
                  p.sequence.values,
                  p.kernel.values,
                  p.plan.shape.lane_count(),
                  p.plan.elems_per_lane_seq,
                  p.plan.slot_bits,
                  p.kernel.values.size(),
                  ctx.vdup(p.plan.shape, field_mask),
                  ctx.vdup(p.plan.shape, kword),
                  opts.validate};
    return env;
}

// Packs the elements of one segment (zero padding past the end of the
// sequence) into a lane word, counting one load and one shift-or
// placement per real element.
uint64_t pack_segment(const KernelEnv& env, SimdCtx& ctx, size_t elem_base) {
    uint64_t word = 0;
    for (unsigned i = 0; i < env.n; ++i) {
        const size_t idx = elem_base + i;
        if (idx >= env.seq.size()) break;
        ctx.note_load_store(1);
        ctx.note_bit(1);
        word |= env.seq[idx] << (i * env.gbits);
    }
    return word;
}

std::span<const uint64_t> segment_slice(const KernelEnv& env, size_t elem_base) {
    if (elem_base >= env.seq.size()) return {};
    return env.seq.subspan(elem_base, std::min<size_t>(env.n, env.seq.size() - elem_base));
}

// Naive SLBC over seq elements [span_base, span_base + span_len), padded
// to whole registers; boundary fields overlap-add through `out`.
void run_naive_span(const KernelEnv& env, SimdCtx& ctx, size_t span_base, size_t span_len,
                    std::vector<uint64_t>& out) {
    const unsigned fields = env.n + static_cast<unsigned>(env.klen) - 1;
    const size_t per_group = size_t{env.n} * env.lanes;
    const size_t groups = (span_len + per_group - 1) / per_group;
    std::vector<uint64_t> lane_words(env.lanes);

    for (size_t g = 0; g < groups; ++g) {
        const size_t base = span_base + g * per_group;
        for (unsigned l = 0; l < env.lanes; ++l) {
            lane_words[l] = pack_segment(env, ctx, base + size_t{l} * env.n);
        }
        SimdVec va = ctx.vld(env.plan.shape, lane_words);
        SimdVec vp = ctx.vmul(va, env.vkernel);
        if (env.validate) {
            for (unsigned l = 0; l < env.lanes; ++l) {
                if (fields_overflow(segment_slice(env, base + size_t{l} * env.n), env.ker,
                                    env.gbits)) {
                    throw FieldOverflow("convolution field exceeds slot width");
                }
            }
        }
        for (unsigned j = 0; j < fields; ++j) {
            // Rounds past the N_s payload fields are segmentation overhead:
            // they pull boundary fields that a neighboring register also
            // contributes to.
            std::optional<SimdCtx::SegScope> seg;
            if (j >= env.n) seg.emplace(ctx);
            SimdVec shifted = ctx.vshr(vp, j * env.gbits);
            SimdVec field = ctx.vand(shifted, env.vmask);
            for (unsigned l = 0; l < env.lanes; ++l) {
                const uint64_t v = ctx.vget(field, l);
                out[base + size_t{l} * env.n + j] += v;
                ctx.note_sisd(1);
                ctx.note_load_store(2);
            }
        }
    }
}

size_t naive_out_size(const KernelEnv& env, size_t span_len) {
    const size_t per_group = size_t{env.n} * env.lanes;
    const size_t groups = (span_len + per_group - 1) / per_group;
    return groups * per_group + env.klen - 1;
}

ConvResult finish(const ConvProblem& p, SimdCtx& ctx, const InstrCounts& before,
                  std::vector<uint64_t> out) {
    out.resize(p.sequence.values.size() + p.kernel.values.size() - 1);
    return ConvResult{std::move(out), ctx.read_counters() - before, p.plan};
}

}  // namespace

ConvResult slbc_naive(const ConvProblem& p, SimdCtx& ctx, const KernelOptions& opts) {
    check_problem(p, opts);
    const InstrCounts before = ctx.read_counters();
    KernelEnv env = make_env(p, ctx, opts);
    std::vector<uint64_t> out(naive_out_size(env, env.seq.size()), 0);
    run_naive_span(env, ctx, 0, env.seq.size(), out);
    return finish(p, ctx, before, std::move(out));
}

ConvResult slbc_reordered(const ConvProblem& p, SimdCtx& ctx, const KernelOptions& opts) {
    check_problem(p, opts);
    if (p.plan.accum_rounds != p.plan.shape.lane_count()) {
        throw InfeasiblePlan("reordered packing needs accum_rounds == lane count");
    }
    const InstrCounts before = ctx.read_counters();
    KernelEnv env = make_env(p, ctx, opts);

    const unsigned lanes = env.lanes;
    const unsigned n = env.n;
    const size_t klen = env.klen;
    // Without at least two lanes, two slots per register and a kernel that
    // overlaps segments there is nothing to merge; the naive schedule is
    // the same algorithm.
    if (klen < 2 || lanes < 2 || size_t{n} * lanes == 1) {
        std::vector<uint64_t> out(naive_out_size(env, env.seq.size()), 0);
        run_naive_span(env, ctx, 0, env.seq.size(), out);
        return finish(p, ctx, before, std::move(out));
    }

    const size_t chain_groups = chain_group_factor(p.plan, klen);
    const size_t rounds = chain_groups * lanes;          // registers per chain
    const size_t row_segs = rounds;                      // segments per lane row
    const size_t chain_elems = rounds * n * lanes;
    const size_t chains = env.seq.size() / chain_elems;
    const size_t tail = env.seq.size() - chains * chain_elems;

    size_t out_size = chains * chain_elems + klen - 1;
    if (tail > 0) out_size = std::max(out_size, chains * chain_elems + naive_out_size(env, tail));
    std::vector<uint64_t> out(out_size, 0);

    std::vector<uint64_t> lane_words(lanes);
    // Shadow slot values per lane for debug validation of the local
    // accumulator (exact arithmetic, no counter effect).
    std::vector<std::vector<uint64_t>> shadow(lanes, std::vector<uint64_t>(n + klen - 1, 0));

    for (size_t c = 0; c < chains; ++c) {
        const size_t chain_base = c * chain_elems;
        const size_t base_seg = chain_base / n;
        SimdVec local = ctx.vdup(p.plan.shape, 0);
        if (env.validate) {
            for (auto& s : shadow) std::fill(s.begin(), s.end(), 0);
        }

        for (size_t r = 0; r < rounds; ++r) {
            for (unsigned y = 0; y < lanes; ++y) {
                const size_t seg = base_seg + size_t{y} * row_segs + r;
                lane_words[y] = pack_segment(env, ctx, seg * n);
            }
            SimdVec va = ctx.vld(p.plan.shape, lane_words);
            SimdVec vp = ctx.vmul(va, env.vkernel);
            if (env.validate) {
                for (unsigned y = 0; y < lanes; ++y) {
                    const size_t seg = base_seg + size_t{y} * row_segs + r;
                    const auto slice = segment_slice(env, seg * n);
                    if (fields_overflow(slice, env.ker, env.gbits, shadow[y])) {
                        throw FieldOverflow("accumulated field exceeds slot width");
                    }
                    for (size_t t = 0; t < slice.size() + klen - 1; ++t) {
                        uint64_t acc = 0;
                        for (size_t i = 0; i < slice.size(); ++i) {
                            if (t < i || t - i >= klen) continue;
                            acc += slice[i] * env.ker[t - i];
                        }
                        shadow[y][t] += acc;
                    }
                }
            }
            local = ctx.vadd(local, vp);

            // The low N_s fields are complete convolution outputs now that
            // the previous register's boundary fields were merged in.
            for (unsigned t = 0; t < n; ++t) {
                SimdVec shifted = ctx.vshr(local, t * env.gbits);
                SimdVec field = ctx.vand(shifted, env.vmask);
                for (unsigned y = 0; y < lanes; ++y) {
                    const size_t seg = base_seg + size_t{y} * row_segs + r;
                    out[seg * n + t] += ctx.vget(field, y);
                    ctx.note_sisd(1);
                    ctx.note_load_store(2);
                }
            }
            local = ctx.vshr(local, n * env.gbits);  // consume extracted slots
            if (env.validate) {
                for (auto& s : shadow) {
                    s.erase(s.begin(), s.begin() + n);
                    s.resize(n + klen - 1, 0);
                }
            }
        }

        // Row-end boundary fields: the only per-field segmentation the
        // reordered schedule still pays.
        SimdCtx::SegScope seg_scope(ctx);
        for (size_t t = 0; t + 1 < klen; ++t) {
            SimdVec shifted = ctx.vshr(local, static_cast<unsigned>(t) * env.gbits);
            SimdVec field = ctx.vand(shifted, env.vmask);
            for (unsigned y = 0; y < lanes; ++y) {
                const size_t row_end = base_seg + (size_t{y} + 1) * row_segs;
                out[row_end * n + t] += ctx.vget(field, y);
                ctx.note_sisd(1);
                ctx.note_load_store(2);
            }
        }
    }

    if (tail > 0) run_naive_span(env, ctx, chains * chain_elems, tail, out);
    return finish(p, ctx, before, std::move(out));
}

ConvResult run_kernel(Variant v, const ConvProblem& p, SimdCtx& ctx, const KernelOptions& opts) {
    return v == Variant::naive ? slbc_naive(p, ctx, opts) : slbc_reordered(p, ctx, opts);
}

uint64_t group_elems(const PackingPlan& plan, size_t ker_len, Variant variant) {
    const uint64_t per_reg = uint64_t{plan.elems_per_lane_seq} * plan.shape.lane_count();
    const bool degenerate =
        ker_len < 2 || plan.shape.lane_count() < 2 || per_reg == 1;
    if (variant == Variant::naive || degenerate) return per_reg;
    return chain_group_factor(plan, ker_len) * per_reg * plan.shape.lane_count();
}

std::span<const SimdShape> all_shapes() {
    static const std::array<SimdShape, 11> shapes = {{
        {32, 8},  {32, 16}, {32, 32},  {64, 8},   {64, 16},  {64, 32},
        {64, 64}, {128, 8}, {128, 16}, {128, 32}, {128, 64},
    }};
    return shapes;
}

PlanChoice select_plan(unsigned seq_bits, unsigned ker_bits, size_t kernel_len, size_t seq_len,
                       const CostParams& params, Variant variant,
                       std::span<const SimdShape> shapes) {
    if (shapes.empty()) shapes = all_shapes();
    std::optional<PlanChoice> best;
    for (const SimdShape& shape : shapes) {
        const unsigned accum = variant == Variant::reordered ? shape.lane_count() : 1;
        PackingPlan plan;
        try {
            plan = derive_plan(seq_bits, ker_bits, shape, accum,
                               static_cast<unsigned>(kernel_len));
        } catch (const NoFeasiblePlan&) {
            continue;
        }
        const double cost =
            score(predict_counts(plan, seq_len, kernel_len, variant), params);
        if (!best || cost < best->predicted_cost ||
            (cost == best->predicted_cost &&
             (plan.shape.register_bits < best->plan.shape.register_bits ||
              (plan.shape.register_bits == best->plan.shape.register_bits &&
               plan.elems_per_lane_seq > best->plan.elems_per_lane_seq)))) {
            best = PlanChoice{plan, cost};
        }
    }
    if (!best) {
        throw NoFeasiblePlan("no shape admits a plan for " + std::to_string(seq_bits) + "/" +
                             std::to_string(ker_bits) + "-bit data with kernel length " +
                             std::to_string(kernel_len));
    }
    return *best;
}

LayerResult conv_layer(const ChannelGrid& inputs,
                       const std::vector<std::vector<QuantizedTensor>>& weights,
                       const LayerSpec& layer, SimdCtx& ctx, Variant variant,
                       const CostParams& params) {
    if (inputs.channels.size() != layer.c_in || weights.size() != layer.c_out) {
        throw DimMismatch("channel counts do not match the layer spec");
    }
    if (inputs.h != layer.h || inputs.w != layer.w) {
        throw DimMismatch("input grid does not match the layer spec");
    }
    const size_t k = layer.kernel;
    if (k < 1 || layer.w < k) throw DimMismatch("kernel wider than the input rows");
    for (const auto& per_ic : weights) {
        if (per_ic.size() != layer.c_in) throw DimMismatch("weight grid is ragged");
        for (const auto& t : per_ic) {
            if (t.values.size() != k * k) throw DimMismatch("weight tensor is not kernel^2");
        }
    }
    unsigned a_bits = inputs.channels.empty() ? 8 : inputs.channels[0].bits;
    unsigned w_bits = weights.empty() || weights[0].empty() ? 8 : weights[0][0].bits;
    for (const auto& t : inputs.channels) {
        if (t.values.size() != inputs.h * inputs.w) throw DimMismatch("input plane size");
        if (t.bits != a_bits) throw DimMismatch("mixed activation bitwidths in one layer");
    }

    const PackingPlan plan =
        select_plan(a_bits, w_bits, k, layer.w, params, variant).plan;
    const InstrCounts before = ctx.read_counters();

    LayerResult res;
    res.out_h = layer.h + k - 1;
    res.out_w = layer.w + k - 1;
    res.plan_used = plan;
    res.channels.assign(layer.c_out, std::vector<uint64_t>(res.out_h * res.out_w, 0));

    for (unsigned oc = 0; oc < layer.c_out; ++oc) {
        for (unsigned ic = 0; ic < layer.c_in; ++ic) {
            const auto& wt = weights[oc][ic];
            for (size_t kr = 0; kr < k; ++kr) {
                QuantizedTensor krow{{wt.values.begin() + kr * k, wt.values.begin() + (kr + 1) * k},
                                     wt.bits,
                                     wt.zero_point};
                for (size_t r = 0; r < layer.h; ++r) {
                    const auto& plane = inputs.channels[ic];
                    QuantizedTensor srow{{plane.values.begin() + r * layer.w,
                                          plane.values.begin() + (r + 1) * layer.w},
                                         plane.bits,
                                         plane.zero_point};
                    ConvResult rowres =
                        run_kernel(variant, ConvProblem{srow, krow, plan}, ctx);
                    uint64_t* dst = res.channels[oc].data() + (r + kr) * res.out_w;
                    for (size_t cx = 0; cx < rowres.outputs.size(); ++cx) {
                        dst[cx] += rowres.outputs[cx];
                    }
                }
            }
        }
    }
    res.counts = ctx.read_counters() - before;
    return res;
}

}  // namespace mixq
