// Test-side oracles, written independently of the library code paths
// they check. Everything here is plain loop arithmetic on wide integers.
#pragma once

#include <cstdint>
#include <vector>

#include "mixq/packing.hpp"
#include "mixq/rng.hpp"

namespace oracle {

using u128 = unsigned __int128;

// Direct evaluation of y[n] = sum_{i+j=n} s[i]*k[j].
inline std::vector<uint64_t> conv(const std::vector<uint64_t>& s, const std::vector<uint64_t>& k) {
    std::vector<uint64_t> y(s.size() + k.size() - 1, 0);
    for (size_t n = 0; n < y.size(); ++n) {
        for (size_t j = 0; j < k.size(); ++j) {
            if (n < j || n - j >= s.size()) continue;
            y[n] += s[n - j] * k[j];
        }
    }
    return y;
}

// Full 2-D multi-channel convolution, brute force.
// in: [c_in][h*w] row major, wt: [oc][ic][k*k] row major.
inline std::vector<std::vector<uint64_t>> conv2d_full(
    const std::vector<std::vector<uint64_t>>& in, size_t h, size_t w,
    const std::vector<std::vector<std::vector<uint64_t>>>& wt, size_t k) {
    const size_t oh = h + k - 1, ow = w + k - 1;
    std::vector<std::vector<uint64_t>> out(wt.size(), std::vector<uint64_t>(oh * ow, 0));
    for (size_t oc = 0; oc < wt.size(); ++oc) {
        for (size_t ic = 0; ic < in.size(); ++ic) {
            for (size_t r = 0; r < h; ++r) {
                for (size_t c = 0; c < w; ++c) {
                    for (size_t kr = 0; kr < k; ++kr) {
                        for (size_t kc = 0; kc < k; ++kc) {
                            out[oc][(r + kr) * ow + (c + kc)] +=
                                in[ic][r * w + c] * wt[oc][ic][kr * k + kc];
                        }
                    }
                }
            }
        }
    }
    return out;
}

// Big-integer packing polynomial: sum v[i] * 2^(i*g).
inline u128 pack_poly(const std::vector<uint64_t>& v, unsigned g) {
    u128 word = 0;
    for (size_t i = 0; i < v.size(); ++i) word += u128{v[i]} << (i * g);
    return word;
}

inline std::vector<uint64_t> random_values(mixq::SplitMix64& rng, size_t len, unsigned bits) {
    std::vector<uint64_t> v(len);
    for (auto& x : v) x = rng.bounded(1ull << bits);
    return v;
}

inline mixq::QuantizedTensor random_tensor(mixq::SplitMix64& rng, size_t len, unsigned bits) {
    return mixq::make_tensor(random_values(rng, len, bits), bits);
}

}  // namespace oracle
