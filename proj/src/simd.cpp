#include "mixq/simd.hpp"

#include <cstdio>

namespace mixq {

SimdShape make_shape(unsigned register_bits, unsigned lane_bits) {
    if (!SimdShape::is_supported(register_bits, lane_bits)) {
        throw ShapeMismatch("unsupported SIMD shape " + std::to_string(register_bits) + "x" +
                            std::to_string(lane_bits));
    }
    return SimdShape{register_bits, lane_bits};
}

std::string to_hex(const SimdVec& v) {
    char buf[33];
    const unsigned digits = v.shape.register_bits / 4;
    for (unsigned i = 0; i < digits; ++i) {
        unsigned nib = static_cast<unsigned>((v.bits >> (4 * (digits - 1 - i))) & 0xF);
        buf[i] = "0123456789abcdef"[nib];
    }
    buf[digits] = '\0';
    return std::string("0x") + buf;
}

void SimdCtx::check_same_shape(const SimdVec& a, const SimdVec& b) {
    if (a.shape != b.shape) throw ShapeMismatch("operand shapes differ");
}

SimdVec SimdCtx::vdup(SimdShape shape, uint64_t scalar) {
    if (shape.lane_bits < 64 && scalar >= (1ull << shape.lane_bits)) {
        throw ScalarTooWide("vdup scalar does not fit a " + std::to_string(shape.lane_bits) +
                            "-bit lane");
    }
    u128 out = 0;
    for (unsigned l = 0; l < shape.lane_count(); ++l) {
        out |= u128{scalar} << (l * shape.lane_bits);
    }
    bump_bit();
    return SimdVec{shape, out};
}

SimdVec SimdCtx::vmul(const SimdVec& a, const SimdVec& b) {
    check_same_shape(a, b);
    const unsigned lb = a.shape.lane_bits;
    u128 out = 0;
    for (unsigned l = 0; l < a.shape.lane_count(); ++l) {
        u128 prod = u128{lane_of(a, l)} * u128{lane_of(b, l)};
        out |= (prod & mask128(lb)) << (l * lb);
    }
    ++counts_.simd_mul;
    return SimdVec{a.shape, out};
}

SimdVec SimdCtx::vadd(const SimdVec& a, const SimdVec& b) {
    check_same_shape(a, b);
    const unsigned lb = a.shape.lane_bits;
    u128 out = 0;
    for (unsigned l = 0; l < a.shape.lane_count(); ++l) {
        u128 sum = u128{lane_of(a, l)} + u128{lane_of(b, l)};
        out |= (sum & mask128(lb)) << (l * lb);
    }
    ++counts_.simd_addsub;
    return SimdVec{a.shape, out};
}

SimdVec SimdCtx::vshr(const SimdVec& a, unsigned amount) {
    if (amount >= a.shape.lane_bits) {
        throw ShiftOutOfRange("vshr amount " + std::to_string(amount) + " not below lane width " +
                              std::to_string(a.shape.lane_bits));
    }
    const unsigned lb = a.shape.lane_bits;
    u128 out = 0;
    for (unsigned l = 0; l < a.shape.lane_count(); ++l) {
        out |= u128{lane_of(a, l) >> amount} << (l * lb);
    }
    bump_bit();
    return SimdVec{a.shape, out};
}

SimdVec SimdCtx::vand(const SimdVec& a, const SimdVec& b) {
    check_same_shape(a, b);
    bump_bit();
    return SimdVec{a.shape, a.bits & b.bits};
}

uint64_t SimdCtx::vget(const SimdVec& a, unsigned lane) {
    if (lane >= a.shape.lane_count()) {
        throw LaneOutOfRange("vget lane " + std::to_string(lane) + " out of range");
    }
    bump_bit();
    return lane_of(a, lane);
}

SimdVec SimdCtx::vld(SimdShape shape, std::span<const uint64_t> lane_words) {
    if (lane_words.size() != shape.lane_count()) {
        throw ShapeMismatch("vld expects one word per lane");
    }
    u128 out = 0;
    for (unsigned l = 0; l < shape.lane_count(); ++l) {
        if (shape.lane_bits < 64 && lane_words[l] >= (1ull << shape.lane_bits)) {
            throw ScalarTooWide("vld word does not fit a lane");
        }
        out |= u128{lane_words[l]} << (l * shape.lane_bits);
    }
    ++counts_.loads_stores;
    return SimdVec{shape, out};
}

}  // namespace mixq
