#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mixq/conv.hpp"

namespace mixq {

// One (s_bits, k_bits, variant) cell of the bench grid.
//
// Columns and their derivations:
//   density        best MACs-per-SIMD-multiply over the shape set
//                  (derive_plan with a free kernel length, accum 1)
//   counts, score  measured by running the variant on a seeded random
//                  problem (outputs verified against reference_conv)
//   speedup_scalar weighted-cost ratio against an analytic scalar MAC
//                  loop on the same problem: per MAC one multiply, one
//                  add and two loads, plus one store per output
//   speedup_lane   density ratio against one-element-per-lane SIMD with
//                  product-safe 16-bit lanes (classic int8 SIMD)
//   speedup_cmix   density ratio against one-element-per-lane packing at
//                  bitwidths ceiled to {2,4,8}: the element pair needs
//                  ceil(s)+ceil(k) product bits, snapped up to a power-
//                  of-two lane
struct BenchCell {
    unsigned s_bits = 0;
    unsigned k_bits = 0;
    Variant variant = Variant::reordered;
    PackingPlan plan;            // plan of the measured run
    size_t kernel_len = 0;       // possibly clamped to what fits a lane
    size_t seq_len = 0;
    InstrCounts counts;
    double score = 0.0;
    uint64_t density = 0;
    double speedup_scalar = 0.0;
    double speedup_lane = 0.0;
    double speedup_cmix = 0.0;
};

struct BenchRequest {
    std::vector<unsigned> bit_grid;   // bitwidths to cross, each in [2, 8]
    std::vector<Variant> variants{Variant::naive, Variant::reordered};
    std::vector<SimdShape> shapes;    // empty: all supported shapes
    size_t seq_len = 512;
    size_t kernel_len = 2;
    uint64_t seed = 1;
    CostParams params;
};

uint64_t best_density(unsigned s_bits, unsigned k_bits, std::span<const SimdShape> shapes);
uint64_t lane16_density(std::span<const SimdShape> shapes);
uint64_t cmix_density(unsigned s_bits, unsigned k_bits, std::span<const SimdShape> shapes);

// Analytic scalar-loop score for the same problem size.
double scalar_baseline_score(size_t seq_len, size_t kernel_len, const CostParams& params);

std::vector<BenchCell> run_bench(const BenchRequest& req);

// CSV with header s_bits,k_bits,variant,shape,simd_mul,bit_ops,sisd,
// score,speedup_scalar,speedup_lane,speedup_cmix.
std::string bench_to_csv(const std::vector<BenchCell>& cells);

}  // namespace mixq
