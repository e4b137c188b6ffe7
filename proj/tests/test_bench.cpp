#include "mixq/bench.hpp"

#include <doctest.h>

using namespace mixq;

TEST_CASE("density baselines on 32-bit registers") {
    const std::vector<SimdShape> mcu32 = {{32, 8}, {32, 16}, {32, 32}};
    CHECK(lane16_density(mcu32) == 2);
    CHECK(cmix_density(8, 8, mcu32) == 2);   // 16-bit product lanes
    CHECK(cmix_density(4, 4, mcu32) == 4);   // 8-bit product lanes
    CHECK(cmix_density(2, 2, mcu32) == 8);   // 4-bit product lanes
    CHECK(cmix_density(2, 4, mcu32) == 4);   // 6 -> 8-bit lanes

    // 8/8 is degenerate on both sides: ratio exactly one.
    CHECK(best_density(8, 8, mcu32) == cmix_density(8, 8, mcu32));
}

TEST_CASE("bench grid: packing-density claims") {
    BenchRequest req;
    req.bit_grid = {2, 3, 4, 5, 6, 7, 8};
    req.variants = {Variant::reordered};
    req.seq_len = 256;
    req.kernel_len = 2;
    req.seed = 7;
    const auto cells = run_bench(req);
    REQUIRE(cells.size() == 49);

    bool any_fast = false;
    double scalar_2x2 = 0, scalar_8x8 = 0;
    for (const BenchCell& c : cells) {
        // No cell falls below the one-element-per-lane baselines.
        CHECK(c.speedup_lane >= 1.0);
        CHECK(c.speedup_cmix >= 1.0);
        if (c.speedup_cmix >= 1.5 && c.s_bits < 8 && c.k_bits < 8) any_fast = true;
        if (c.s_bits == 8 && c.k_bits == 8) {
            CHECK(c.speedup_cmix == doctest::Approx(1.0).epsilon(1e-12));
            scalar_8x8 = c.speedup_scalar;
        }
        if (c.s_bits == 2 && c.k_bits == 2) scalar_2x2 = c.speedup_scalar;
    }
    CHECK(any_fast);
    CHECK(scalar_2x2 > scalar_8x8);
}

TEST_CASE("bench CSV carries the documented header") {
    BenchRequest req;
    req.bit_grid = {2, 8};
    req.seq_len = 64;
    const auto cells = run_bench(req);
    const std::string csv = bench_to_csv(cells);
    CHECK(csv.rfind("s_bits,k_bits,variant,shape,simd_mul,bit_ops,sisd,score,"
                    "speedup_scalar,speedup_lane,speedup_cmix\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(cells.size()) + 1);
}

TEST_CASE("reordered weighted cost never exceeds naive on the same plan") {
    // Ablation comparison: both variants run the identical packing plan
    // (derived with the reordered guard), across every feasible
    // bitwidth/shape/kernel cell.
    const CostParams params{};
    bool strong = false;
    for (unsigned sb = 2; sb <= 8; ++sb) {
        for (unsigned kb = 2; kb <= 8; ++kb) {
            for (const SimdShape& shape : all_shapes()) {
                for (unsigned klen : {1u, 2u, 3u}) {
                    PackingPlan plan;
                    try {
                        plan = derive_plan(sb, kb, shape, shape.lane_count(), klen);
                    } catch (const NoFeasiblePlan&) {
                        continue;
                    }
                    const size_t slen = 1024;
                    const double cn = score(predict_counts(plan, slen, klen, Variant::naive),
                                            params);
                    const double cr = score(predict_counts(plan, slen, klen, Variant::reordered),
                                            params);
                    CHECK(cr <= cn);
                    if (sb < 8 && kb < 8 && cr <= 0.95 * cn) strong = true;
                }
            }
        }
    }
    CHECK(strong);
}
