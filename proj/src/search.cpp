#include "mixq/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

namespace mixq {

namespace {

uint64_t ceil_div8(uint64_t bits) { return (bits + 7) / 8; }

uint64_t out_activations(const Network& net, size_t l) {
    if (l + 1 < net.layers.size()) return net.layers[l + 1].activation_count;
    const LayerSpec& last = net.layers[l];
    return uint64_t{last.h} * last.w * last.c_out;
}

uint64_t layer_flash(const LayerSpec& layer, unsigned w_bits) {
    return ceil_div8(layer.weight_count * w_bits);
}

uint64_t layer_peak(const Network& net, size_t l, unsigned a_bits) {
    return ceil_div8((net.layers[l].activation_count + out_activations(net, l)) * a_bits);
}

}  // namespace

double layer_compute_cost(const LayerSpec& layer, unsigned w_bits, unsigned a_bits,
                          const CostParams& params) {
    PlanChoice choice;
    try {
        choice = select_plan(a_bits, w_bits, layer.kernel, layer.w, params);
    } catch (const NoFeasiblePlan& e) {
        throw NoFeasiblePlan("layer '" + layer.name + "': " + e.what());
    }
    const double rows = static_cast<double>(layer.c_out) * layer.c_in * layer.kernel * layer.h;
    return rows * choice.predicted_cost;
}

double compute_loss(const std::vector<LayerChoice>& cfg, const Network& net,
                    const CostParams& params) {
    if (cfg.size() != net.layers.size()) {
        throw DimMismatch("config does not cover every layer");
    }
    double total = 0.0;
    for (size_t l = 0; l < net.layers.size(); ++l) {
        total += layer_compute_cost(net.layers[l], cfg[l].w_bits, cfg[l].a_bits, params);
    }
    return total;
}

MemoryFootprint memory_footprint(const std::vector<LayerChoice>& cfg, const Network& net) {
    if (cfg.size() != net.layers.size()) {
        throw DimMismatch("config does not cover every layer");
    }
    MemoryFootprint m;
    for (size_t l = 0; l < net.layers.size(); ++l) {
        m.flash_bytes += layer_flash(net.layers[l], cfg[l].w_bits);
        m.peak_bytes = std::max(m.peak_bytes, layer_peak(net, l, cfg[l].a_bits));
    }
    return m;
}

namespace {

struct Candidate {
    LayerChoice choice;
    double delta = 0.0;
    double comp = 0.0;
    uint64_t flash = 0;
    uint64_t peak = 0;
};

struct Partial {
    std::vector<uint8_t> picks;  // candidate index per decided layer
    double acc = 0.0;
    double comp = 0.0;
    uint64_t flash = 0;
    uint64_t peak = 0;
    unsigned total_bits = 0;
};

// Objective, then lower total bitwidth, then lexicographic choices.
bool better(double obj_a, unsigned bits_a, const std::vector<uint8_t>& picks_a, double obj_b,
            unsigned bits_b, const std::vector<uint8_t>& picks_b) {
    if (obj_a != obj_b) return obj_a < obj_b;
    if (bits_a != bits_b) return bits_a < bits_b;
    return picks_a < picks_b;
}

}  // namespace

QuantConfig search(const Network& net, const SensitivityTable& table, double lambda,
                   const SearchConstraints& constraints, const SearchOptions& options) {
    if (lambda < 0) throw Error("lambda must be non-negative");

    // Per-layer candidate lists with precomputed costs and footprints.
    std::vector<std::vector<Candidate>> cands(net.layers.size());
    size_t max_cands = 0;
    for (size_t l = 0; l < net.layers.size(); ++l) {
        const auto it = table.layers.find(net.layers[l].name);
        if (it == table.layers.end() || it->second.empty()) {
            throw IncompleteTable("sensitivity table has no entries for layer '" +
                                  net.layers[l].name + "'");
        }
        for (const SensEntry& e : it->second) {
            Candidate c;
            c.choice = {e.w_bits, e.a_bits};
            c.delta = e.delta;
            c.comp = layer_compute_cost(net.layers[l], e.w_bits, e.a_bits, options.params);
            c.flash = layer_flash(net.layers[l], e.w_bits);
            c.peak = layer_peak(net, l, e.a_bits);
            cands[l].push_back(c);
        }
        max_cands = std::max(max_cands, cands[l].size());
    }

    bool exhaustive = net.layers.size() <= 6 && max_cands <= 4;
    if (options.mode == SearchOptions::Mode::exhaustive) exhaustive = true;
    if (options.mode == SearchOptions::Mode::beam) exhaustive = false;

    // Cheapest-possible flash of the remaining layers, for pruning.
    std::vector<uint64_t> min_flash_from(net.layers.size() + 1, 0);
    for (size_t l = net.layers.size(); l-- > 0;) {
        uint64_t mn = UINT64_MAX;
        for (const Candidate& c : cands[l]) mn = std::min(mn, c.flash);
        min_flash_from[l] = min_flash_from[l + 1] + mn;
    }

    std::vector<Partial> frontier{Partial{}};
    for (size_t l = 0; l < net.layers.size(); ++l) {
        std::vector<Partial> next;
        for (const Partial& p : frontier) {
            for (size_t ci = 0; ci < cands[l].size(); ++ci) {
                const Candidate& c = cands[l][ci];
                Partial q = p;
                q.picks.push_back(static_cast<uint8_t>(ci));
                q.acc += c.delta;
                q.comp += c.comp;
                q.flash += c.flash;
                q.peak = std::max(q.peak, c.peak);
                q.total_bits += c.choice.w_bits + c.choice.a_bits;
                if (q.flash + min_flash_from[l + 1] > constraints.flash_bytes) continue;
                if (q.peak > constraints.peak_bytes) continue;
                next.push_back(std::move(q));
            }
        }
        if (!exhaustive && next.size() > options.beam_width) {
            std::sort(next.begin(), next.end(), [&](const Partial& a, const Partial& b) {
                return better(a.acc + lambda * a.comp, a.total_bits, a.picks,
                              b.acc + lambda * b.comp, b.total_bits, b.picks);
            });
            next.resize(options.beam_width);
        }
        frontier = std::move(next);
        if (frontier.empty()) break;
    }

    const Partial* best = nullptr;
    for (const Partial& p : frontier) {
        if (!best || better(p.acc + lambda * p.comp, p.total_bits, p.picks,
                            best->acc + lambda * best->comp, best->total_bits, best->picks)) {
            best = &p;
        }
    }
    if (!best) throw Infeasible("no configuration satisfies the memory constraints");

    QuantConfig cfg;
    cfg.lambda = lambda;
    cfg.mode = exhaustive ? "exhaustive" : "beam";
    for (size_t l = 0; l < net.layers.size(); ++l) {
        cfg.per_layer.push_back(cands[l][best->picks[l]].choice);
    }
    cfg.acc_total = best->acc;
    cfg.comp_total = best->comp;
    cfg.objective = best->acc + lambda * best->comp;
    cfg.flash_bytes = best->flash;
    cfg.peak_bytes = best->peak;
    return cfg;
}

Network load_network(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("network JSON: ") + e.what());
    }
    Network net;
    if (!doc.contains("layers") || !doc["layers"].is_array()) {
        throw Error("network JSON needs a 'layers' array");
    }
    for (const auto& j : doc["layers"]) {
        LayerSpec ls;
        try {
            ls.name = j.at("name").get<std::string>();
            ls.h = j.at("h").get<unsigned>();
            ls.w = j.at("w").get<unsigned>();
            ls.c_in = j.at("c_in").get<unsigned>();
            ls.c_out = j.at("c_out").get<unsigned>();
            ls.kernel = j.at("kernel").get<unsigned>();
            ls.weight_count = j.at("weight_count").get<uint64_t>();
            ls.activation_count = j.value("activation_count",
                                          uint64_t{ls.h} * ls.w * ls.c_in);
        } catch (const nlohmann::json::exception& e) {
            throw Error(std::string("network JSON layer: ") + e.what());
        }
        if (ls.h < 1 || ls.w < 1 || ls.c_in < 1 || ls.c_out < 1 || ls.kernel < 1) {
            throw Error("layer '" + ls.name + "' has a zero dimension");
        }
        net.layers.push_back(std::move(ls));
    }
    return net;
}

SensitivityTable load_sensitivity(const std::string& json_text, const Network& net) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("sensitivity JSON: ") + e.what());
    }
    if (!doc.contains("layers") || !doc["layers"].is_object()) {
        throw Error("sensitivity JSON needs a 'layers' object");
    }
    SensitivityTable table;
    for (const auto& [name, entries] : doc["layers"].items()) {
        std::vector<SensEntry> list;
        for (const auto& j : entries) {
            SensEntry e;
            try {
                e.w_bits = j.at("w_bits").get<unsigned>();
                e.a_bits = j.at("a_bits").get<unsigned>();
                e.delta = j.at("delta").get<double>();
            } catch (const nlohmann::json::exception& ex) {
                throw Error(std::string("sensitivity entry: ") + ex.what());
            }
            if (e.w_bits < 2 || e.w_bits > 8 || e.a_bits < 2 || e.a_bits > 8) {
                throw Error("sensitivity bitwidths must lie in [2, 8]");
            }
            if (e.delta < 0) {
                throw Error("sensitivity delta must be non-negative (layer '" + name + "')");
            }
            list.push_back(e);
        }
        std::sort(list.begin(), list.end(), [](const SensEntry& a, const SensEntry& b) {
            return std::tie(a.w_bits, a.a_bits) < std::tie(b.w_bits, b.a_bits);
        });
        for (size_t i = 1; i < list.size(); ++i) {
            if (list[i - 1].w_bits == list[i].w_bits && list[i - 1].a_bits == list[i].a_bits) {
                throw Error("duplicate sensitivity entry for layer '" + name + "'");
            }
        }
        // Monotonicity: growing either width may not increase the loss.
        for (const SensEntry& lo : list) {
            for (const SensEntry& hi : list) {
                if (hi.w_bits >= lo.w_bits && hi.a_bits >= lo.a_bits && hi.delta > lo.delta) {
                    throw Error("sensitivity for layer '" + name +
                                "' increases with bitwidth: (" + std::to_string(hi.w_bits) + "," +
                                std::to_string(hi.a_bits) + ") above (" +
                                std::to_string(lo.w_bits) + "," + std::to_string(lo.a_bits) + ")");
                }
            }
        }
        table.layers.emplace(name, std::move(list));
    }
    for (const LayerSpec& l : net.layers) {
        if (!table.layers.count(l.name)) {
            throw IncompleteTable("sensitivity table missing layer '" + l.name + "'");
        }
    }
    return table;
}

std::string quant_config_to_json(const QuantConfig& cfg, const Network& net) {
    nlohmann::ordered_json j;
    j["mode"] = cfg.mode;
    j["lambda"] = cfg.lambda;
    j["objective"] = cfg.objective;
    j["acc_total"] = cfg.acc_total;
    j["comp_total"] = cfg.comp_total;
    j["flash_bytes"] = cfg.flash_bytes;
    j["peak_bytes"] = cfg.peak_bytes;
    nlohmann::ordered_json layers = nlohmann::ordered_json::array();
    for (size_t l = 0; l < cfg.per_layer.size(); ++l) {
        nlohmann::ordered_json e;
        e["name"] = l < net.layers.size() ? net.layers[l].name : std::to_string(l);
        e["w_bits"] = cfg.per_layer[l].w_bits;
        e["a_bits"] = cfg.per_layer[l].a_bits;
        layers.push_back(e);
    }
    j["layers"] = layers;
    return j.dump();
}

}  // namespace mixq
