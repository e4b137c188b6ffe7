#include "mixq/bench.hpp"

#include <algorithm>
#include <cstdio>

#include "mixq/rng.hpp"

namespace mixq {

namespace {

unsigned ceil_248(unsigned bits) { return bits <= 2 ? 2 : bits <= 4 ? 4 : 8; }

unsigned pow2_at_least(unsigned v) {
    unsigned p = 1;
    while (p < v) p <<= 1;
    return p;
}

QuantizedTensor random_tensor(SplitMix64& rng, size_t len, unsigned bits) {
    std::vector<uint64_t> vals(len);
    for (auto& v : vals) v = rng.bounded(1ull << bits);
    return make_tensor(std::move(vals), bits);
}

}  // namespace

uint64_t best_density(unsigned s_bits, unsigned k_bits, std::span<const SimdShape> shapes) {
    uint64_t best = 0;
    for (const SimdShape& shape : shapes) {
        try {
            best = std::max(best, derive_plan(s_bits, k_bits, shape, 1).macs_per_simd_mul());
        } catch (const NoFeasiblePlan&) {
        }
    }
    return best;
}

uint64_t lane16_density(std::span<const SimdShape> shapes) {
    uint64_t best = 0;
    for (const SimdShape& shape : shapes) best = std::max(best, uint64_t{shape.register_bits} / 16);
    return best;
}

uint64_t cmix_density(unsigned s_bits, unsigned k_bits, std::span<const SimdShape> shapes) {
    const unsigned lane = pow2_at_least(ceil_248(s_bits) + ceil_248(k_bits));
    uint64_t best = 0;
    for (const SimdShape& shape : shapes) best = std::max(best, uint64_t{shape.register_bits} / lane);
    return best;
}

double scalar_baseline_score(size_t seq_len, size_t kernel_len, const CostParams& params) {
    InstrCounts c;
    c.sisd_arith = 2 * seq_len * kernel_len;                  // mul + add per MAC
    c.loads_stores = 2 * seq_len * kernel_len + seq_len;      // two loads per MAC, store per output
    return score(c, params);
}

std::vector<BenchCell> run_bench(const BenchRequest& req) {
    std::span<const SimdShape> shapes =
        req.shapes.empty() ? all_shapes() : std::span<const SimdShape>(req.shapes);
    if (req.bit_grid.empty()) throw Error("bench grid is empty");

    std::vector<BenchCell> cells;
    for (unsigned sb : req.bit_grid) {
        for (unsigned kb : req.bit_grid) {
            const uint64_t density = best_density(sb, kb, shapes);
            if (density == 0) continue;  // no feasible packing at all
            for (Variant variant : req.variants) {
                BenchCell cell;
                cell.s_bits = sb;
                cell.k_bits = kb;
                cell.variant = variant;
                cell.seq_len = req.seq_len;
                cell.density = density;
                cell.speedup_lane =
                    static_cast<double>(density) / static_cast<double>(lane16_density(shapes));
                cell.speedup_cmix =
                    static_cast<double>(density) / static_cast<double>(cmix_density(sb, kb, shapes));

                // Clamp the kernel to the longest that fits a lane anywhere.
                size_t klen = req.kernel_len;
                while (klen > 1) {
                    bool ok = false;
                    for (const SimdShape& shape : shapes) {
                        const unsigned accum =
                            variant == Variant::reordered ? shape.lane_count() : 1;
                        try {
                            derive_plan(sb, kb, shape, accum, static_cast<unsigned>(klen));
                            ok = true;
                            break;
                        } catch (const NoFeasiblePlan&) {
                        }
                    }
                    if (ok) break;
                    --klen;
                }
                cell.kernel_len = klen;

                const PlanChoice choice =
                    select_plan(sb, kb, klen, req.seq_len, req.params, variant, shapes);
                cell.plan = choice.plan;

                SplitMix64 rng(req.seed ^ (uint64_t{sb} << 24) ^ (uint64_t{kb} << 16) ^
                               (variant == Variant::reordered ? 1u : 0u));
                QuantizedTensor s = random_tensor(rng, req.seq_len, sb);
                QuantizedTensor k = random_tensor(rng, klen, kb);
                SimdCtx ctx;
                ConvResult res = run_kernel(variant, ConvProblem{s, k, choice.plan}, ctx);
                if (res.outputs != reference_conv(s, k)) {
                    throw Error("bench cell failed verification against reference_conv");
                }
                cell.counts = res.counts;
                cell.score = score(res.counts, req.params);
                cell.speedup_scalar =
                    scalar_baseline_score(req.seq_len, klen, req.params) / cell.score;
                cells.push_back(std::move(cell));
            }
        }
    }
    return cells;
}

std::string bench_to_csv(const std::vector<BenchCell>& cells) {
    std::string out =
        "s_bits,k_bits,variant,shape,simd_mul,bit_ops,sisd,score,"
        "speedup_scalar,speedup_lane,speedup_cmix\n";
    char buf[256];
    for (const BenchCell& c : cells) {
        std::snprintf(buf, sizeof(buf), "%u,%u,%s,%ux%u,%llu,%llu,%llu,%.6g,%.6g,%.6g,%.6g\n",
                      c.s_bits, c.k_bits, variant_name(c.variant), c.plan.shape.register_bits,
                      c.plan.shape.lane_bits, static_cast<unsigned long long>(c.counts.simd_mul),
                      static_cast<unsigned long long>(c.counts.bit_ops),
                      static_cast<unsigned long long>(c.counts.sisd_arith), c.score,
                      c.speedup_scalar, c.speedup_lane, c.speedup_cmix);
        out += buf;
    }
    return out;
}

}  // namespace mixq
