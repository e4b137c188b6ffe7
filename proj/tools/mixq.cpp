// mixq: sub-byte SIMD convolution engine and mixed-precision planner.
//
// Subcommands: conv, plan, bench, calibrate, search. Exit codes:
// 0 success, 1 verification failure, 2 infeasible or bad input.
// Machine output (--json) is line-delimited JSON; set MIXQ_LOG=debug for
// progress notes on stderr. Both output forms are rendered from the same
// in-memory report.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mixq/bench.hpp"
#include "mixq/conv.hpp"
#include "mixq/cost.hpp"
#include "mixq/rng.hpp"
#include "mixq/search.hpp"

using json = nlohmann::ordered_json;
using namespace mixq;

namespace {

constexpr const char* kVersion = "0.1.0";

bool g_json = false;
bool g_debug = false;

void debug_log(const std::string& msg) {
    if (g_debug) std::fprintf(stderr, "[mixq] %s\n", msg.c_str());
}

// FNV-1a over the canonical input echo, so reports are self-describing
// and re-emittable byte-identically from the same inputs.
std::string digest(const std::string& canonical) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json report_head(const std::string& command, const std::string& canonical_inputs) {
    json r;
    r["tool"] = "mixq";
    r["version"] = kVersion;
    r["command"] = command;
    r["config_digest"] = digest(canonical_inputs);
    return r;
}

json counts_json(const InstrCounts& c) {
    json j;
    j["sisd_arith"] = c.sisd_arith;
    j["simd_mul"] = c.simd_mul;
    j["simd_addsub"] = c.simd_addsub;
    j["bit_ops"] = c.bit_ops;
    j["loads_stores"] = c.loads_stores;
    j["seg_ops"] = c.seg_ops;
    return j;
}

json plan_json(const PackingPlan& p) {
    json j;
    j["shape"] = std::to_string(p.shape.register_bits) + "x" + std::to_string(p.shape.lane_bits);
    j["seq_bits"] = p.seq_bits;
    j["ker_bits"] = p.ker_bits;
    j["elems_per_lane_seq"] = p.elems_per_lane_seq;
    j["elems_per_lane_ker"] = p.elems_per_lane_ker;
    j["slot_bits"] = p.slot_bits;
    j["accum_rounds"] = p.accum_rounds;
    j["macs_per_simd_mul"] = p.macs_per_simd_mul();
    return j;
}

json params_json(const CostParams& p) {
    json j;
    j["alpha"] = p.alpha;
    j["beta"] = p.beta;
    j["calibrated"] = p.calibrated;
    return j;
}

void print_counts_table(const InstrCounts& c) {
    std::printf("  %-14s %12llu\n", "sisd_arith", (unsigned long long)c.sisd_arith);
    std::printf("  %-14s %12llu\n", "simd_mul", (unsigned long long)c.simd_mul);
    std::printf("  %-14s %12llu\n", "simd_addsub", (unsigned long long)c.simd_addsub);
    std::printf("  %-14s %12llu\n", "bit_ops", (unsigned long long)c.bit_ops);
    std::printf("  %-14s %12llu\n", "loads_stores", (unsigned long long)c.loads_stores);
    std::printf("  %-14s %12llu\n", "seg_ops", (unsigned long long)c.seg_ops);
}

void emit(const json& report) {
    if (g_json) std::printf("%s\n", report.dump().c_str());
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

SimdShape parse_shape(const std::string& text) {
    const size_t x = text.find('x');
    if (x == std::string::npos) throw Error("shape must look like 32x8");
    return make_shape(static_cast<unsigned>(std::stoul(text.substr(0, x))),
                      static_cast<unsigned>(std::stoul(text.substr(x + 1))));
}

std::vector<unsigned> parse_bits(const std::string& text) {
    std::vector<unsigned> out;
    const size_t dash = text.find('-');
    if (dash != std::string::npos) {
        const unsigned lo = static_cast<unsigned>(std::stoul(text.substr(0, dash)));
        const unsigned hi = static_cast<unsigned>(std::stoul(text.substr(dash + 1)));
        for (unsigned b = lo; b <= hi; ++b) out.push_back(b);
    } else {
        std::stringstream ss(text);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            out.push_back(static_cast<unsigned>(std::stoul(cell)));
        }
    }
    for (unsigned b : out) {
        if (b < 2 || b > 8) throw Error("bitwidths must lie in [2, 8]");
    }
    if (out.empty()) throw Error("empty bitwidth list");
    return out;
}

Variant parse_variant(const std::string& v) {
    if (v == "naive") return Variant::naive;
    if (v == "reordered") return Variant::reordered;
    throw Error("variant must be naive or reordered");
}

struct ConvArgs {
    unsigned seq_bits = 2, ker_bits = 2;
    size_t len = 64, kernel_len = 2;
    std::string variant = "reordered";
    std::string shape = "auto";
    uint64_t seed = 1;
    bool validate = false;
    std::string input_file;
};

int cmd_conv(const ConvArgs& a) {
    const Variant variant = parse_variant(a.variant);
    QuantizedTensor s, k;
    std::string input_echo;
    if (!a.input_file.empty()) {
        const std::string text = read_file(a.input_file);
        json doc = json::parse(text);
        s = make_tensor(doc.at("sequence").get<std::vector<uint64_t>>(),
                        doc.at("seq_bits").get<unsigned>());
        k = make_tensor(doc.at("kernel").get<std::vector<uint64_t>>(),
                        doc.at("ker_bits").get<unsigned>());
        input_echo = "file:" + text;
    } else {
        SplitMix64 rng(a.seed);
        std::vector<uint64_t> sv(a.len), kv(a.kernel_len);
        for (auto& v : sv) v = rng.bounded(1ull << a.seq_bits);
        for (auto& v : kv) v = rng.bounded(1ull << a.ker_bits);
        s = make_tensor(std::move(sv), a.seq_bits);
        k = make_tensor(std::move(kv), a.ker_bits);
        input_echo = "seed:" + std::to_string(a.seed) + ":" + std::to_string(a.seq_bits) + ":" +
                     std::to_string(a.ker_bits) + ":" + std::to_string(a.len) + ":" +
                     std::to_string(a.kernel_len);
    }

    PackingPlan plan;
    if (a.shape == "auto") {
        plan = select_plan(s.bits, k.bits, k.values.size(), s.values.size(), CostParams{},
                           variant)
                   .plan;
    } else {
        const SimdShape shape = parse_shape(a.shape);
        const unsigned accum = variant == Variant::reordered ? shape.lane_count() : 1;
        plan = derive_plan(s.bits, k.bits, shape, accum,
                           static_cast<unsigned>(k.values.size()));
    }
    debug_log("plan " + std::to_string(plan.elems_per_lane_seq) + "x" +
              std::to_string(plan.elems_per_lane_ker) + " slot " +
              std::to_string(plan.slot_bits));

    SimdCtx ctx;
    ConvResult res = run_kernel(variant, ConvProblem{s, k, plan}, ctx,
                                KernelOptions{.validate = a.validate, .check_plan = true});
    const bool pass = res.outputs == reference_conv(s, k);

    json r = report_head("conv", input_echo + ":" + a.variant + ":" + a.shape);
    r["variant"] = a.variant;
    r["plan"] = plan_json(plan);
    r["outputs"] = res.outputs;
    r["counts"] = counts_json(res.counts);
    r["verdict"] = pass ? "PASS" : "FAIL";
    emit(r);
    if (!g_json) {
        std::printf("variant:  %s\n", a.variant.c_str());
        std::printf("plan:     %ux%u lanes, N_s=%u N_k=%u slot=%u\n",
                    plan.shape.register_bits, plan.shape.lane_bits, plan.elems_per_lane_seq,
                    plan.elems_per_lane_ker, plan.slot_bits);
        std::printf("outputs (%zu):", res.outputs.size());
        for (size_t i = 0; i < res.outputs.size(); ++i) {
            std::printf("%s%llu", i % 16 == 0 ? "\n  " : " ",
                        (unsigned long long)res.outputs[i]);
        }
        std::printf("\n");
        print_counts_table(res.counts);
        std::printf("%s\n", pass ? "PASS" : "FAIL");
    }
    return pass ? 0 : 1;
}

struct PlanArgs {
    unsigned seq_bits = 2, ker_bits = 2;
    size_t len = 64, kernel_len = 2;
    std::string variant = "reordered";
    std::string shape = "auto";
};

int cmd_plan(const PlanArgs& a) {
    const Variant variant = parse_variant(a.variant);
    const CostParams params;
    PackingPlan plan;
    if (a.shape == "auto") {
        plan = select_plan(a.seq_bits, a.ker_bits, a.kernel_len, a.len, params, variant).plan;
    } else {
        const SimdShape shape = parse_shape(a.shape);
        const unsigned accum = variant == Variant::reordered ? shape.lane_count() : 1;
        plan = derive_plan(a.seq_bits, a.ker_bits, shape, accum,
                           static_cast<unsigned>(a.kernel_len));
    }
    const InstrCounts predicted = predict_counts(plan, a.len, a.kernel_len, variant);

    json r = report_head("plan", std::to_string(a.seq_bits) + ":" + std::to_string(a.ker_bits) +
                                     ":" + std::to_string(a.kernel_len) + ":" +
                                     std::to_string(a.len) + ":" + a.variant + ":" + a.shape);
    r["variant"] = a.variant;
    r["plan"] = plan_json(plan);
    r["predicted_counts"] = counts_json(predicted);
    r["score"] = score(predicted, params);
    r["cost_params"] = params_json(params);
    emit(r);
    if (!g_json) {
        std::printf("shape:    %ux%u (%u lanes)\n", plan.shape.register_bits,
                    plan.shape.lane_bits, plan.shape.lane_count());
        std::printf("N_s=%u N_k=%u slot=%u accum=%u  macs/mul=%llu\n", plan.elems_per_lane_seq,
                    plan.elems_per_lane_ker, plan.slot_bits, plan.accum_rounds,
                    (unsigned long long)plan.macs_per_simd_mul());
        std::printf("predicted counts for len=%zu kernel=%zu (%s):\n", a.len, a.kernel_len,
                    a.variant.c_str());
        print_counts_table(predicted);
        std::printf("score: %.6g  (alpha=%g beta=%g%s)\n", score(predicted, params),
                    params.alpha, params.beta, params.calibrated ? "" : ", uncalibrated");
    }
    return 0;
}

struct BenchArgs {
    std::string bits = "2-8";
    std::string variants = "naive,reordered";
    std::string shapes = "all";
    size_t seq_len = 512;
    size_t kernel_len = 2;
    uint64_t seed = 1;
    std::string out;
};

int cmd_bench(const BenchArgs& a) {
    BenchRequest req;
    req.bit_grid = parse_bits(a.bits);
    req.variants.clear();
    {
        std::stringstream ss(a.variants);
        std::string cell;
        while (std::getline(ss, cell, ',')) req.variants.push_back(parse_variant(cell));
    }
    if (req.variants.empty()) throw Error("empty variant list");
    if (a.shapes != "all") {
        std::stringstream ss(a.shapes);
        std::string cell;
        while (std::getline(ss, cell, ',')) req.shapes.push_back(parse_shape(cell));
    }
    req.seq_len = a.seq_len;
    req.kernel_len = a.kernel_len;
    req.seed = a.seed;

    const auto cells = run_bench(req);
    const std::string csv = bench_to_csv(cells);
    if (!a.out.empty()) {
        std::ofstream out(a.out, std::ios::binary);
        if (!out) throw Error("cannot write " + a.out);
        out << csv;
        debug_log("wrote " + a.out);
    }

    const std::string canonical = a.bits + ":" + a.variants + ":" + a.shapes + ":" +
                                  std::to_string(a.seq_len) + ":" + std::to_string(a.kernel_len) +
                                  ":" + std::to_string(a.seed);
    if (g_json) {
        for (const BenchCell& c : cells) {
            json r = report_head("bench", canonical);
            r["s_bits"] = c.s_bits;
            r["k_bits"] = c.k_bits;
            r["variant"] = variant_name(c.variant);
            r["kernel_len"] = c.kernel_len;
            r["plan"] = plan_json(c.plan);
            r["counts"] = counts_json(c.counts);
            r["score"] = c.score;
            r["macs_per_simd_mul"] = c.density;
            r["speedup_scalar"] = c.speedup_scalar;
            r["speedup_lane"] = c.speedup_lane;
            r["speedup_cmix"] = c.speedup_cmix;
            emit(r);
        }
    } else {
        std::printf("%2s %2s %-9s %-7s %10s %10s %10s %10s %8s %8s %8s\n", "sb", "kb", "variant",
                    "shape", "simd_mul", "bit_ops", "sisd", "score", "vs_scal", "vs_lane",
                    "vs_cmix");
        for (const BenchCell& c : cells) {
            std::printf("%2u %2u %-9s %3ux%-4u %10llu %10llu %10llu %10.4g %8.3g %8.3g %8.3g\n",
                        c.s_bits, c.k_bits, variant_name(c.variant), c.plan.shape.register_bits,
                        c.plan.shape.lane_bits, (unsigned long long)c.counts.simd_mul,
                        (unsigned long long)c.counts.bit_ops,
                        (unsigned long long)c.counts.sisd_arith, c.score, c.speedup_scalar,
                        c.speedup_lane, c.speedup_cmix);
        }
    }
    return 0;
}

int cmd_calibrate(const std::string& csv_path) {
    const std::string text = read_file(csv_path);
    const auto rows = parse_calibration_csv(text);
    const CalibrationResult res = calibrate(rows);

    json r = report_head("calibrate", text);
    r["rows"] = rows.size();
    r["params"] = params_json(res.params);
    r["rms_residual"] = res.rms_residual;
    emit(r);
    if (!g_json) {
        std::printf("rows:         %zu\n", rows.size());
        std::printf("alpha:        %.12g\n", res.params.alpha);
        std::printf("beta:         %.12g\n", res.params.beta);
        std::printf("rms residual: %.6g\n", res.rms_residual);
    }
    return 0;
}

struct SearchArgs {
    std::string net_file, table_file;
    double lambda = 1e-6;
    uint64_t flash_limit = UINT64_MAX;
    uint64_t peak_limit = UINT64_MAX;
    unsigned beam_width = 32;
    std::string mode = "auto";
};

int cmd_search(const SearchArgs& a) {
    const std::string net_text = read_file(a.net_file);
    const std::string table_text = read_file(a.table_file);
    const Network net = load_network(net_text);
    const SensitivityTable table = load_sensitivity(table_text, net);

    SearchOptions opts;
    opts.beam_width = a.beam_width;
    if (a.mode == "exhaustive") opts.mode = SearchOptions::Mode::exhaustive;
    else if (a.mode == "beam") opts.mode = SearchOptions::Mode::beam;
    else if (a.mode != "auto") throw Error("mode must be auto, exhaustive or beam");

    SearchConstraints cons;
    cons.flash_bytes = a.flash_limit;
    cons.peak_bytes = a.peak_limit;

    const QuantConfig cfg = search(net, table, a.lambda, cons, opts);

    json r = report_head("search", net_text + table_text + std::to_string(a.lambda) + ":" +
                                       std::to_string(a.flash_limit) + ":" +
                                       std::to_string(a.peak_limit) + ":" + a.mode);
    r["result"] = json::parse(quant_config_to_json(cfg, net));
    r["cost_params"] = params_json(opts.params);
    emit(r);
    if (!g_json) {
        std::printf("mode: %s   objective: %.10g\n", cfg.mode.c_str(), cfg.objective);
        std::printf("acc_total: %.10g   comp_total: %.10g   lambda: %g\n", cfg.acc_total,
                    cfg.comp_total, cfg.lambda);
        std::printf("flash: %llu bytes   peak: %llu bytes\n",
                    (unsigned long long)cfg.flash_bytes, (unsigned long long)cfg.peak_bytes);
        for (size_t l = 0; l < cfg.per_layer.size(); ++l) {
            std::printf("  %-12s w=%u a=%u\n", net.layers[l].name.c_str(),
                        cfg.per_layer[l].w_bits, cfg.per_layer[l].a_bits);
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sub-byte SIMD convolution engine and mixed-precision planner"};
    app.require_subcommand(1);
    app.add_flag("--json", g_json, "emit line-delimited JSON instead of tables");
    if (const char* log = std::getenv("MIXQ_LOG")) {
        g_debug = std::string(log) == "debug" || std::string(log) == "1";
    }

    ConvArgs conv_args;
    CLI::App* conv = app.add_subcommand("conv", "run one SLBC convolution and verify it");
    conv->add_option("--seq-bits", conv_args.seq_bits)->check(CLI::Range(2, 8));
    conv->add_option("--ker-bits", conv_args.ker_bits)->check(CLI::Range(2, 8));
    conv->add_option("--len", conv_args.len);
    conv->add_option("--kernel-len", conv_args.kernel_len);
    conv->add_option("--variant", conv_args.variant);
    conv->add_option("--shape", conv_args.shape, "WxL register shape, or auto");
    conv->add_option("--seed", conv_args.seed);
    conv->add_flag("--validate", conv_args.validate, "shadow-check every packed product");
    conv->add_option("--input", conv_args.input_file, "JSON file with explicit operands");

    PlanArgs plan_args;
    CLI::App* plan = app.add_subcommand("plan", "derive a packing plan and predict its counts");
    plan->add_option("--seq-bits", plan_args.seq_bits)->check(CLI::Range(2, 8));
    plan->add_option("--ker-bits", plan_args.ker_bits)->check(CLI::Range(2, 8));
    plan->add_option("--len", plan_args.len);
    plan->add_option("--kernel-len", plan_args.kernel_len);
    plan->add_option("--variant", plan_args.variant);
    plan->add_option("--shape", plan_args.shape);

    BenchArgs bench_args;
    CLI::App* bench = app.add_subcommand("bench", "bitwidth-grid counter and speedup table");
    bench->add_option("--bits", bench_args.bits, "range 2-8 or list 2,4,8");
    bench->add_option("--variants", bench_args.variants);
    bench->add_option("--shapes", bench_args.shapes, "comma list of WxL, or all");
    bench->add_option("--seq-len", bench_args.seq_len);
    bench->add_option("--kernel-len", bench_args.kernel_len);
    bench->add_option("--seed", bench_args.seed);
    bench->add_option("--out", bench_args.out, "CSV output path");

    std::string calib_csv;
    CLI::App* calib = app.add_subcommand("calibrate", "least-squares fit of alpha and beta");
    calib->add_option("--csv", calib_csv, "measurement CSV")->required();

    SearchArgs search_args;
    CLI::App* srch = app.add_subcommand("search", "mixed-precision bitwidth search");
    srch->add_option("--net", search_args.net_file, "network JSON")->required();
    srch->add_option("--table", search_args.table_file, "sensitivity JSON")->required();
    srch->add_option("--lambda", search_args.lambda);
    srch->add_option("--flash-limit", search_args.flash_limit, "flash budget in bytes");
    srch->add_option("--peak-limit", search_args.peak_limit, "peak activation budget in bytes");
    srch->add_option("--beam-width", search_args.beam_width);
    srch->add_option("--mode", search_args.mode, "auto, exhaustive or beam");

    CLI11_PARSE(app, argc, argv);

    try {
        if (conv->parsed()) return cmd_conv(conv_args);
        if (plan->parsed()) return cmd_plan(plan_args);
        if (bench->parsed()) return cmd_bench(bench_args);
        if (calib->parsed()) return cmd_calibrate(calib_csv);
        if (srch->parsed()) return cmd_search(search_args);
    } catch (const Error& e) {
        std::fprintf(stderr, "mixq: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "mixq: %s\n", e.what());
        return 2;
    }
    return 0;
}
