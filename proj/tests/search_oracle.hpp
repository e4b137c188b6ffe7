// Brute-force search oracle: full enumeration of the candidate grid with
// the same objective and tie-breaking contract the library promises, but
// none of its pruning or beam machinery.
#pragma once

#include <vector>

#include "mixq/search.hpp"

namespace oracle {

inline mixq::QuantConfig exhaustive_search(const mixq::Network& net,
                                           const mixq::SensitivityTable& table, double lambda,
                                           const mixq::SearchConstraints& cons,
                                           const mixq::CostParams& params) {
    using namespace mixq;
    std::vector<std::vector<SensEntry>> cands;
    for (const auto& l : net.layers) cands.push_back(table.layers.at(l.name));
    std::vector<std::vector<double>> cand_cost(net.layers.size());
    for (size_t l = 0; l < net.layers.size(); ++l) {
        for (const SensEntry& e : cands[l]) {
            cand_cost[l].push_back(layer_compute_cost(net.layers[l], e.w_bits, e.a_bits, params));
        }
    }
    // Enumeration is lexicographic over sorted candidate lists, so on a
    // full (objective, total-bitwidth) tie the first hit is already the
    // lexicographically smallest config.
    std::vector<size_t> idx(net.layers.size(), 0);
    bool have = false;
    QuantConfig best;
    unsigned best_bits = 0;
    while (true) {
        std::vector<LayerChoice> cfg;
        double acc = 0, comp = 0;
        unsigned bits = 0;
        for (size_t l = 0; l < idx.size(); ++l) {
            const SensEntry& e = cands[l][idx[l]];
            cfg.push_back({e.w_bits, e.a_bits});
            acc += e.delta;
            comp += cand_cost[l][idx[l]];
            bits += e.w_bits + e.a_bits;
        }
        const MemoryFootprint m = memory_footprint(cfg, net);
        if (m.flash_bytes <= cons.flash_bytes && m.peak_bytes <= cons.peak_bytes) {
            const double obj = acc + lambda * comp;
            bool take = !have;
            if (have) {
                if (obj != best.objective) take = obj < best.objective;
                else if (bits != best_bits) take = bits < best_bits;
            }
            if (take) {
                best = QuantConfig{cfg, obj, acc, comp, lambda, m.flash_bytes, m.peak_bytes, ""};
                best_bits = bits;
                have = true;
            }
        }
        size_t l = idx.size();
        bool rolled = true;
        while (l-- > 0) {
            if (++idx[l] < cands[l].size()) {
                rolled = false;
                break;
            }
            idx[l] = 0;
        }
        if (rolled) break;
    }
    if (!have) throw Infeasible("exhaustive oracle: nothing feasible");
    return best;
}

}  // namespace oracle
