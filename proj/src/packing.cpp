#include "mixq/packing.hpp"

#include <algorithm>
#include <bit>

namespace mixq {

unsigned ceil_log2(uint64_t v) {
    if (v <= 1) return 0;
    return static_cast<unsigned>(std::bit_width(v - 1));
}

unsigned min_slot_bits(unsigned seq_bits, unsigned ker_bits, unsigned n_seq, unsigned n_ker,
                       unsigned accum_rounds) {
    return seq_bits + ker_bits + ceil_log2(std::min(n_seq, n_ker)) + ceil_log2(accum_rounds);
}

bool plan_is_feasible(const PackingPlan& p) {
    if (p.elems_per_lane_seq < 1 || p.elems_per_lane_ker < 1) return false;
    if (p.accum_rounds < 1) return false;
    if (!SimdShape::is_supported(p.shape.register_bits, p.shape.lane_bits)) return false;
    const unsigned lane = p.shape.lane_bits;
    const unsigned ns = p.elems_per_lane_seq;
    const unsigned nk = p.elems_per_lane_ker;
    const unsigned carry = ceil_log2(std::min(ns, nk)) + ceil_log2(p.accum_rounds);
    if (p.slot_bits < p.seq_bits + p.ker_bits + carry) return false;
    if ((ns - 1) * p.slot_bits + p.seq_bits > lane) return false;
    if ((nk - 1) * p.slot_bits + p.ker_bits > lane) return false;
    if ((ns - 1 + nk - 1) * p.slot_bits + p.seq_bits + p.ker_bits + carry > lane) return false;
    return true;
}

void validate_plan(const PackingPlan& p) {
    if (p.elems_per_lane_seq < 1 || p.elems_per_lane_ker < 1 || p.accum_rounds < 1) {
        throw InfeasiblePlan("plan element/round counts must be >= 1");
    }
    if (!SimdShape::is_supported(p.shape.register_bits, p.shape.lane_bits)) {
        throw InfeasiblePlan("plan shape unsupported");
    }
    const unsigned lane = p.shape.lane_bits;
    const unsigned ns = p.elems_per_lane_seq;
    const unsigned nk = p.elems_per_lane_ker;
    const unsigned carry = ceil_log2(std::min(ns, nk)) + ceil_log2(p.accum_rounds);
    if (p.slot_bits < p.seq_bits + p.ker_bits + carry) {
        throw InfeasiblePlan("slot width below guard-bit requirement");
    }
    if ((ns - 1) * p.slot_bits + p.seq_bits > lane) {
        throw InfeasiblePlan("packed sequence operand exceeds lane width");
    }
    if ((nk - 1) * p.slot_bits + p.ker_bits > lane) {
        throw InfeasiblePlan("packed kernel operand exceeds lane width");
    }
    if ((ns - 1 + nk - 1) * p.slot_bits + p.seq_bits + p.ker_bits + carry > lane) {
        throw InfeasiblePlan("product fields exceed lane width");
    }
}

QuantizedTensor make_tensor(std::vector<uint64_t> values, unsigned bits, uint64_t zero_point) {
    for (uint64_t v : values) {
        if (bits < 64 && v >= (1ull << bits)) {
            throw SlotOverflow("tensor value " + std::to_string(v) + " exceeds " +
                               std::to_string(bits) + " bits");
        }
    }
    return QuantizedTensor{std::move(values), bits, zero_point};
}

PackingPlan derive_plan(unsigned seq_bits, unsigned ker_bits, SimdShape shape,
                        unsigned accum_rounds, std::optional<unsigned> kernel_len) {
    if (seq_bits < 2 || seq_bits > 8 || ker_bits < 2 || ker_bits > 8) {
        throw NoFeasiblePlan("bitwidths must lie in [2, 8]");
    }
    const unsigned lane = shape.lane_bits;
    // N never exceeds lane/1 slots; slot widths are at least 4 bits.
    const unsigned n_cap = lane / 2 + 1;

    PackingPlan best;
    bool found = false;
    auto consider = [&](unsigned ns, unsigned nk) {
        PackingPlan cand{seq_bits, ker_bits, ns, nk,
                         min_slot_bits(seq_bits, ker_bits, ns, nk, accum_rounds), shape,
                         accum_rounds};
        if (!plan_is_feasible(cand)) return;
        if (!found) {
            best = cand;
            found = true;
            return;
        }
        const uint64_t cm = uint64_t{cand.elems_per_lane_seq} * cand.elems_per_lane_ker;
        const uint64_t bm = uint64_t{best.elems_per_lane_seq} * best.elems_per_lane_ker;
        if (cm > bm ||
            (cm == bm && (cand.elems_per_lane_seq > best.elems_per_lane_seq ||
                          (cand.elems_per_lane_seq == best.elems_per_lane_seq &&
                           cand.slot_bits < best.slot_bits)))) {
            best = cand;
        }
    };

    if (kernel_len) {
        if (*kernel_len < 1) throw NoFeasiblePlan("kernel length must be >= 1");
        for (unsigned ns = 1; ns <= n_cap; ++ns) consider(ns, *kernel_len);
    } else {
        for (unsigned ns = 1; ns <= n_cap; ++ns) {
            for (unsigned nk = 1; nk <= n_cap; ++nk) consider(ns, nk);
        }
    }
    if (!found) {
        throw NoFeasiblePlan("no feasible packing for " + std::to_string(seq_bits) + "/" +
                             std::to_string(ker_bits) + "-bit data on " +
                             std::to_string(shape.register_bits) + "x" +
                             std::to_string(shape.lane_bits));
    }
    return best;
}

uint64_t pack_word(std::span<const uint64_t> values, unsigned slot_bits, unsigned word_bits) {
    uint64_t word = 0;
    for (size_t i = 0; i < values.size(); ++i) {
        const uint64_t v = values[i];
        if (slot_bits < 64 && v >= (1ull << slot_bits)) {
            throw SlotOverflow("value " + std::to_string(v) + " exceeds slot width " +
                               std::to_string(slot_bits));
        }
        if (v != 0) {
            const unsigned top = static_cast<unsigned>(i * slot_bits) +
                                 static_cast<unsigned>(std::bit_width(v));
            if (top > word_bits) {
                throw WordOverflow("packed value spills past " + std::to_string(word_bits) +
                                   "-bit word");
            }
            word |= v << (i * slot_bits);
        }
    }
    return word;
}

std::vector<uint64_t> extract_fields(uint64_t word, unsigned slot_bits, unsigned count) {
    std::vector<uint64_t> out(count);
    for (unsigned i = 0; i < count; ++i) {
        const unsigned off = i * slot_bits;
        out[i] = off >= 64 ? 0 : (word >> off) & mask64(slot_bits);
    }
    return out;
}

std::vector<uint64_t> extract_fields_wide(u128 word, unsigned slot_bits, unsigned count) {
    std::vector<uint64_t> out(count);
    for (unsigned i = 0; i < count; ++i) {
        const unsigned off = i * slot_bits;
        out[i] = off >= 128 ? 0 : static_cast<uint64_t>((word >> off) & mask128(slot_bits));
    }
    return out;
}

std::vector<uint64_t> scalar_packed_conv(const QuantizedTensor& s, const QuantizedTensor& k,
                                         const PackingPlan& plan) {
    validate_plan(plan);
    if (s.bits != plan.seq_bits || k.bits != plan.ker_bits) {
        throw PlanMismatch("tensor bitwidths do not match the plan");
    }
    if (k.values.size() > plan.elems_per_lane_ker) {
        throw PlanMismatch("kernel longer than the plan's elements per lane");
    }
    if (s.values.empty() || k.values.empty()) throw EmptyInput("empty operand");

    const unsigned g = plan.slot_bits;
    const size_t ns = plan.elems_per_lane_seq;
    const size_t klen = k.values.size();
    const uint64_t kword = pack_word(k.values, g, plan.shape.lane_bits);

    std::vector<uint64_t> out(s.values.size() + klen - 1, 0);
    for (size_t base = 0; base < s.values.size(); base += ns) {
        const size_t seg = std::min(ns, s.values.size() - base);
        const uint64_t sword =
            pack_word(std::span(s.values).subspan(base, seg), g, plan.shape.lane_bits);
        const u128 product = u128{sword} * u128{kword};
        const auto fields = extract_fields_wide(product, g, static_cast<unsigned>(seg + klen - 1));
        for (size_t t = 0; t < fields.size(); ++t) {
            out[base + t] += fields[t];  // overlap-add across segment boundaries
        }
    }
    return out;
}

bool fields_overflow(std::span<const uint64_t> segment, std::span<const uint64_t> kernel,
                     unsigned slot_bits, std::span<const uint64_t> carry_in) {
    if (segment.empty() || kernel.empty()) return false;
    const uint64_t limit = mask64(slot_bits);
    const size_t nfields = segment.size() + kernel.size() - 1;
    for (size_t t = 0; t < nfields; ++t) {
        u128 acc = t < carry_in.size() ? carry_in[t] : 0;
        for (size_t i = 0; i < segment.size(); ++i) {
            if (t < i || t - i >= kernel.size()) continue;
            acc += u128{segment[i]} * kernel[t - i];
        }
        if (acc > limit) return true;
    }
    return false;
}

std::vector<int64_t> signed_conv(const QuantizedTensor& s, const QuantizedTensor& k,
                                 const PackingPlan& plan) {
    const auto raw = scalar_packed_conv(s, k, plan);
    // conv(s - zs, k - zk) = conv(s, k) - zk*window_sum(s) - zs*window_sum(k)
    //                        + zs*zk*window_count
    const int64_t zs = static_cast<int64_t>(s.zero_point);
    const int64_t zk = static_cast<int64_t>(k.zero_point);
    const size_t slen = s.values.size(), klen = k.values.size();
    std::vector<int64_t> out(raw.size());
    for (size_t n = 0; n < raw.size(); ++n) {
        int64_t ssum = 0, ksum = 0, cnt = 0;
        for (size_t j = 0; j < klen; ++j) {
            if (n < j || n - j >= slen) continue;
            ssum += static_cast<int64_t>(s.values[n - j]);
            ksum += static_cast<int64_t>(k.values[j]);
            ++cnt;
        }
        out[n] = static_cast<int64_t>(raw[n]) - zk * ssum - zs * ksum + zs * zk * cnt;
    }
    return out;
}

unsigned chain_group_factor(const PackingPlan& plan, size_t kernel_len) {
    if (kernel_len < 2) return 1;
    const unsigned depth =
        2 + static_cast<unsigned>((kernel_len - 2) / plan.elems_per_lane_seq);
    return depth <= plan.shape.lane_count() ? plan.elems_per_lane_seq : 1;
}

}  // namespace mixq
