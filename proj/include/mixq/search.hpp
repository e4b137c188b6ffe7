#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mixq/conv.hpp"
#include "mixq/cost.hpp"
#include "mixq/layer.hpp"

namespace mixq {

struct Network {
    std::vector<LayerSpec> layers;
};

// Additive accuracy-loss proxy per (layer, w_bits, a_bits): the penalty
// for quantizing that layer to those widths. Deltas are non-negative and
// non-increasing as either bitwidth grows; load_sensitivity rejects
// tables violating that.
struct SensEntry {
    unsigned w_bits = 8;
    unsigned a_bits = 8;
    double delta = 0.0;
};

struct SensitivityTable {
    // Candidate lists sorted by (w_bits, a_bits); the per-layer candidate
    // grid of the search is exactly the listed pairs.
    std::map<std::string, std::vector<SensEntry>> layers;
};

struct LayerChoice {
    unsigned w_bits = 8;
    unsigned a_bits = 8;
    bool operator==(const LayerChoice&) const = default;
};

struct MemoryFootprint {
    uint64_t flash_bytes = 0;
    uint64_t peak_bytes = 0;
};

struct SearchConstraints {
    uint64_t flash_bytes = UINT64_MAX;
    uint64_t peak_bytes = UINT64_MAX;
};

// Per-layer (w, a) assignment with its objective decomposition.
struct QuantConfig {
    std::vector<LayerChoice> per_layer;  // one per network layer, in order
    double objective = 0.0;              // acc_total + lambda * comp_total
    double acc_total = 0.0;
    double comp_total = 0.0;
    double lambda = 0.0;
    uint64_t flash_bytes = 0;
    uint64_t peak_bytes = 0;
    std::string mode;  // "exhaustive" or "beam"
};

// Predicted complexity of one layer at the given widths: the select_plan
// optimum for a W-long row with the layer's kernel, scaled by the number
// of 1-D row problems the layer lowers to (c_out * c_in * kernel * h).
// Activations stream through the sequence operand, weights through the
// kernel operand. NoFeasiblePlan names the offending layer.
double layer_compute_cost(const LayerSpec& layer, unsigned w_bits, unsigned a_bits,
                          const CostParams& params);

// Sum of layer_compute_cost over the network for a full assignment.
double compute_loss(const std::vector<LayerChoice>& cfg, const Network& net,
                    const CostParams& params);

// flash = sum ceil(weight_count * w_bits / 8);
// peak = max over layers of ceil((in + out activations) * a_bits / 8),
// where in = the layer's activation_count and out = the next layer's
// (for the last layer, h * w * c_out).
MemoryFootprint memory_footprint(const std::vector<LayerChoice>& cfg, const Network& net);

struct SearchOptions {
    unsigned beam_width = 32;
    // auto: exhaustive for <= 6 layers x <= 4 candidates, else beam.
    enum class Mode { automatic, exhaustive, beam } mode = Mode::automatic;
    CostParams params;
};

// Scalarized discrete search over the per-layer candidate grid:
// minimizes sum(delta) + lambda * sum(compute cost) subject to the
// memory constraints. Deterministic: ties broken by lower total
// bitwidth, then lexicographic layer order. Throws Infeasible when no
// assignment meets the constraints, IncompleteTable when the table
// lacks a layer.
QuantConfig search(const Network& net, const SensitivityTable& table, double lambda,
                   const SearchConstraints& constraints, const SearchOptions& options = {});

// JSON document loaders; schemas documented in the README.
Network load_network(const std::string& json_text);
SensitivityTable load_sensitivity(const std::string& json_text, const Network& net);
std::string quant_config_to_json(const QuantConfig& cfg, const Network& net);

}  // namespace mixq
