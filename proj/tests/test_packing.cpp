#include "mixq/packing.hpp"

#include <doctest.h>

#include <algorithm>

#include "oracles.hpp"

using namespace mixq;

namespace {

// Independent feasibility sweep: enumerate (N_s, N_k) directly against
// the plan inequalities and big-integer products.
struct SweepBest {
    unsigned ns = 0, nk = 0, g = 0;
    uint64_t product = 0;
};

SweepBest sweep_best(unsigned sb, unsigned kb, SimdShape shape, unsigned accum) {
    SweepBest best;
    for (unsigned ns = 1; ns <= 64; ++ns) {
        for (unsigned nk = 1; nk <= 64; ++nk) {
            const unsigned carry = ceil_log2(std::min(ns, nk)) + ceil_log2(accum);
            const unsigned g = sb + kb + carry;
            if ((ns - 1) * g + sb > shape.lane_bits) continue;
            if ((nk - 1) * g + kb > shape.lane_bits) continue;
            if ((ns - 1 + nk - 1) * g + sb + kb + carry > shape.lane_bits) continue;
            const uint64_t prod = uint64_t{ns} * nk;
            if (prod > best.product || (prod == best.product && ns > best.ns)) {
                best = {ns, nk, g, prod};
            }
        }
    }
    return best;
}

}  // namespace

TEST_CASE("pack_word evaluates the packing polynomial") {
    std::vector<uint64_t> zeros = {0, 0, 0};
    CHECK(pack_word(zeros, 5) == 0);
    std::vector<uint64_t> v123 = {1, 2, 3};
    CHECK(pack_word(v123, 4) == 0x321);
    CHECK(pack_word(v123, 4) == 801);
    std::vector<uint64_t> v12 = {1, 2};
    std::vector<uint64_t> v31 = {3, 1};
    CHECK(pack_word(v12, 8) == 513);
    CHECK(pack_word(v31, 8) == 259);

    std::vector<uint64_t> wide = {16};
    CHECK_THROWS_AS(pack_word(wide, 4), SlotOverflow);
    std::vector<uint64_t> spill = {0, 0, 0, 0, 0, 0, 0, 1};
    CHECK_THROWS_AS(pack_word(spill, 10, 64), WordOverflow);
    // Zero values never spill, whatever the nominal slot count.
    std::vector<uint64_t> zspill(9, 0);
    CHECK(pack_word(zspill, 10, 64) == 0);
}

TEST_CASE("extract_fields slices fields back out") {
    CHECK(extract_fields(132867, 8, 3) == std::vector<uint64_t>{3, 7, 2});
    CHECK(extract_fields(0x321, 4, 3) == std::vector<uint64_t>{1, 2, 3});

    SplitMix64 rng(77);
    for (int iter = 0; iter < 500; ++iter) {
        const unsigned g = static_cast<unsigned>(rng.range(3, 12));
        const unsigned count = static_cast<unsigned>(rng.range(1, 64 / g));
        auto vals = oracle::random_values(rng, count, g);
        CHECK(extract_fields(pack_word(vals, g), g, count) == vals);
    }
}

TEST_CASE("product of packed words is the convolution") {
    SplitMix64 rng(0xC0DE);
    int done = 0;
    while (done < 1000) {
        const unsigned sb = static_cast<unsigned>(rng.range(2, 8));
        const unsigned kb = static_cast<unsigned>(rng.range(2, 8));
        const unsigned ns = static_cast<unsigned>(rng.range(1, 4));
        const unsigned nk = static_cast<unsigned>(rng.range(1, 3));
        const unsigned g = min_slot_bits(sb, kb, ns, nk, 1);
        if ((ns - 1 + nk - 1) * g + sb + kb + ceil_log2(std::min(ns, nk)) > 64) continue;
        auto s = oracle::random_values(rng, ns, sb);
        auto k = oracle::random_values(rng, nk, kb);
        const oracle::u128 prod = oracle::pack_poly(s, g) * oracle::pack_poly(k, g);
        CHECK(extract_fields_wide(prod, g, ns + nk - 1) == oracle::conv(s, k));
        ++done;
    }
}

TEST_CASE("guard bits: sufficient at the minimum, corrupt one bit below") {
    // min(N_s, N_k) = 2 makes the ceil(log2) bound exact, so max-value
    // inputs overflow a slot exactly one guard bit short of the minimum.
    const unsigned sb = 2, kb = 2, ns = 2, nk = 2;
    const unsigned gmin = min_slot_bits(sb, kb, ns, nk, 1);
    CHECK(gmin == 5);
    std::vector<uint64_t> smax = {3, 3}, kmax = {3, 3};

    const oracle::u128 good = oracle::pack_poly(smax, gmin) * oracle::pack_poly(kmax, gmin);
    CHECK(extract_fields_wide(good, gmin, 3) == oracle::conv(smax, kmax));
    CHECK_FALSE(fields_overflow(smax, kmax, gmin));

    const unsigned gbad = gmin - 1;
    const oracle::u128 bad = oracle::pack_poly(smax, gbad) * oracle::pack_poly(kmax, gbad);
    CHECK(extract_fields_wide(bad, gbad, 3) != oracle::conv(smax, kmax));
    CHECK(fields_overflow(smax, kmax, gbad));

    // Same with the accumulation term: two rounds of max fields overflow
    // at one bit below the minimum and fit at the minimum.
    const unsigned ga = min_slot_bits(sb, kb, ns, nk, 2);
    CHECK(ga == 6);
    std::vector<uint64_t> carry_full(3, (1ull << ga) - 1 - 18);  // headroom for one more round
    CHECK_FALSE(fields_overflow(smax, kmax, ga, carry_full));
    std::vector<uint64_t> carry_tight(3, 18);
    CHECK(fields_overflow(smax, kmax, ga - 1, carry_tight));
}

TEST_CASE("plan feasibility and validation") {
    // Single-element packing is always legal when the product fits a lane.
    PackingPlan degenerate{2, 2, 1, 1, 4, {32, 8}, 1};
    CHECK(plan_is_feasible(degenerate));
    CHECK_NOTHROW(validate_plan(degenerate));

    PackingPlan below_guard{2, 2, 2, 2, 4, {32, 32}, 1};
    CHECK_FALSE(plan_is_feasible(below_guard));
    CHECK_THROWS_AS(validate_plan(below_guard), InfeasiblePlan);

    PackingPlan too_wide{8, 8, 2, 2, 17, {32, 32}, 1};
    CHECK_FALSE(plan_is_feasible(too_wide));
}

TEST_CASE("derive_plan matches an independent exhaustive sweep") {
    for (unsigned sb = 2; sb <= 8; ++sb) {
        for (unsigned kb = 2; kb <= 8; ++kb) {
            for (SimdShape shape : {SimdShape{32, 8}, SimdShape{32, 16}, SimdShape{32, 32},
                                    SimdShape{64, 32}, SimdShape{64, 64}, SimdShape{128, 64}}) {
                for (unsigned accum : {1u, shape.lane_count()}) {
                    SweepBest want = sweep_best(sb, kb, shape, accum);
                    if (want.product == 0) {
                        CHECK_THROWS_AS(derive_plan(sb, kb, shape, accum), NoFeasiblePlan);
                        continue;
                    }
                    PackingPlan got = derive_plan(sb, kb, shape, accum);
                    CHECK(uint64_t{got.elems_per_lane_seq} * got.elems_per_lane_ker ==
                          want.product);
                    CHECK(got.elems_per_lane_seq == want.ns);
                    CHECK(got.elems_per_lane_ker == want.nk);
                    CHECK(got.slot_bits == want.g);
                    CHECK(plan_is_feasible(got));
                }
            }
        }
    }
}

TEST_CASE("derive_plan spec cases") {
    // 8/8-bit on 8-bit lanes: even one element per lane needs a 16-bit slot.
    CHECK_THROWS_AS(derive_plan(8, 8, SimdShape{32, 8}, 1), NoFeasiblePlan);

    // 2/2-bit on a 32-bit lane, minimal slot is s+k+carry.
    PackingPlan p = derive_plan(2, 2, SimdShape{32, 32}, 1);
    CHECK(p.slot_bits == min_slot_bits(2, 2, p.elems_per_lane_seq, p.elems_per_lane_ker, 1));
    CHECK(plan_is_feasible(p));

    // Pinned kernel length occupies the kernel lane exactly.
    PackingPlan pk = derive_plan(2, 2, SimdShape{32, 32}, 1, 3);
    CHECK(pk.elems_per_lane_ker == 3);
}

TEST_CASE("derive_plan density is non-increasing in either bitwidth") {
    for (SimdShape shape : {SimdShape{32, 32}, SimdShape{64, 64}}) {
        for (unsigned sb = 2; sb <= 8; ++sb) {
            uint64_t prev = UINT64_MAX;
            for (unsigned kb = 2; kb <= 8; ++kb) {
                const uint64_t macs = derive_plan(sb, kb, shape, 1).macs_per_simd_mul();
                CHECK(macs <= prev);
                prev = macs;
            }
        }
        for (unsigned kb = 2; kb <= 8; ++kb) {
            uint64_t prev = UINT64_MAX;
            for (unsigned sb = 2; sb <= 8; ++sb) {
                const uint64_t macs = derive_plan(sb, kb, shape, 1).macs_per_simd_mul();
                CHECK(macs <= prev);
                prev = macs;
            }
        }
    }
}

TEST_CASE("scalar_packed_conv") {
    PackingPlan plan = derive_plan(2, 2, SimdShape{32, 32}, 1, 2);
    QuantizedTensor s = make_tensor({1, 2}, 2);
    QuantizedTensor k = make_tensor({3, 1}, 2);
    CHECK(scalar_packed_conv(s, k, plan) == std::vector<uint64_t>{3, 7, 2});

    // Identity kernel.
    PackingPlan plan1 = derive_plan(4, 2, SimdShape{32, 32}, 1, 1);
    QuantizedTensor sx = make_tensor({5, 0, 9, 13, 2}, 4);
    CHECK(scalar_packed_conv(sx, make_tensor({1}, 2), plan1) == sx.values);

    SplitMix64 rng(0x5EED);
    int done = 0;
    while (done < 500) {
        const unsigned sb = static_cast<unsigned>(rng.range(2, 8));
        const unsigned kb = static_cast<unsigned>(rng.range(2, 8));
        const size_t klen = rng.range(1, 5);
        const size_t slen = rng.range(klen, 64);
        PackingPlan p;
        try {
            p = derive_plan(sb, kb, SimdShape{64, 64}, 1, static_cast<unsigned>(klen));
        } catch (const NoFeasiblePlan&) {
            continue;
        }
        auto sv = oracle::random_values(rng, slen, sb);
        auto kv = oracle::random_values(rng, klen, kb);
        CHECK(scalar_packed_conv(make_tensor(sv, sb), make_tensor(kv, kb), p) ==
              oracle::conv(sv, kv));
        ++done;
    }

    QuantizedTensor wrong_bits = make_tensor({1}, 3);
    CHECK_THROWS_AS(scalar_packed_conv(wrong_bits, k, plan), PlanMismatch);
    QuantizedTensor long_kernel = make_tensor({1, 1, 1}, 2);
    CHECK_THROWS_AS(scalar_packed_conv(s, long_kernel, plan), PlanMismatch);
}

TEST_CASE("signed convolution through the zero-point offset") {
    // Signed data in [-2, 1] stored with zero_point 2 at 2 bits.
    QuantizedTensor s = make_tensor({3, 0, 2, 1}, 2, 2);  // signed: 1, -2, 0, -1
    QuantizedTensor k = make_tensor({0, 3}, 2, 2);        // signed: -2, 1
    PackingPlan plan = derive_plan(2, 2, SimdShape{32, 32}, 1, 2);
    const auto got = signed_conv(s, k, plan);

    std::vector<int64_t> ssig = {1, -2, 0, -1}, ksig = {-2, 1};
    std::vector<int64_t> want(ssig.size() + ksig.size() - 1, 0);
    for (size_t i = 0; i < ssig.size(); ++i) {
        for (size_t j = 0; j < ksig.size(); ++j) want[i + j] += ssig[i] * ksig[j];
    }
    CHECK(got == want);
}

TEST_CASE("chain_group_factor") {
    PackingPlan p{2, 2, 2, 2, 6, {64, 32}, 2};
    CHECK(chain_group_factor(p, 1) == 1);
    CHECK(chain_group_factor(p, 2) == 2);   // depth 2 <= 2 lanes
    CHECK(chain_group_factor(p, 3) == 2);   // ceil((3-2)/2): depth still 2
    CHECK(chain_group_factor(p, 4) == 1);   // depth 3 exceeds 2 lanes

    PackingPlan p4{2, 2, 2, 7, 7, {128, 32}, 4};
    CHECK(chain_group_factor(p4, 7) == 2);  // depth 2+floor(5/2)=4 <= 4 lanes
}

TEST_CASE("make_tensor validates value range") {
    CHECK_THROWS_AS(make_tensor({4}, 2), SlotOverflow);
    CHECK_NOTHROW(make_tensor({3}, 2));
}
