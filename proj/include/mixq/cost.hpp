#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mixq/packing.hpp"
#include "mixq/simd.hpp"

namespace mixq {

enum class Variant { naive, reordered };

const char* variant_name(Variant v);

// Weights of the complexity score C = C_SISD + alpha*C_SIMD + beta*C_bit.
// The defaults are deliberately round placeholders; reports using them
// must carry the uncalibrated flag, and comparative results should also
// be given in raw counts.
struct CostParams {
    double alpha = 4.0;
    double beta = 1.0;
    bool calibrated = false;
};

struct CostReport {
    uint64_t c_sisd = 0;
    uint64_t c_simd = 0;
    uint64_t c_bit = 0;
    double total = 0.0;
};

// Mapping from emulator counters to the three score classes:
//   c_sisd = sisd_arith + loads_stores   (scalar ALU work and memory ops)
//   c_simd = simd_mul                    (the multiply is the unit alpha prices)
//   c_bit  = bit_ops + simd_addsub       (single-cycle shift/mask/add class)
CostReport make_report(const InstrCounts& counts, const CostParams& params);

// The weighted sum; linear in each count.
double score(const InstrCounts& counts, const CostParams& params);

// Closed-form prediction of the emulator counters for one kernel run.
// Derived from the loop structure of the kernels, not by executing them;
// must equal measured InstrCounts exactly on group-aligned sizes, and
// does on all sizes by construction of the padding rules.
InstrCounts predict_counts(const PackingPlan& plan, size_t seq_len, size_t ker_len,
                           Variant variant);

// One calibration measurement: counter classes plus the externally
// measured cost (e.g. cycles from a hardware run).
struct CalibrationRow {
    double c_sisd = 0;
    double c_simd = 0;
    double c_bit = 0;
    double cost = 0;
};

struct CalibrationResult {
    CostParams params;   // calibrated = true
    double rms_residual = 0.0;
};

// Least-squares fit of (alpha, beta) minimizing
// sum (cost - c_sisd - alpha*c_simd - beta*c_bit)^2, solved by normal
// equations with a pivoted 2x2 elimination. Throws DegenerateSystem when
// fewer than two rows are given or the (c_simd, c_bit) columns are
// collinear.
CalibrationResult calibrate(std::span<const CalibrationRow> rows);

// Calibration CSV schema: header `c_sisd,c_simd,c_bit,cost`, one row per
// measurement, UTF-8, comma separated, decimal point.
std::vector<CalibrationRow> parse_calibration_csv(const std::string& text);

}  // namespace mixq
