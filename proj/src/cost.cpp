#include "mixq/cost.hpp"

#include <cmath>
#include <sstream>

namespace mixq {

const char* variant_name(Variant v) { return v == Variant::naive ? "naive" : "reordered"; }

CostReport make_report(const InstrCounts& counts, const CostParams& params) {
    CostReport r;
    r.c_sisd = counts.sisd_arith + counts.loads_stores;
    r.c_simd = counts.simd_mul;
    r.c_bit = counts.bit_ops + counts.simd_addsub;
    r.total = static_cast<double>(r.c_sisd) + params.alpha * static_cast<double>(r.c_simd) +
              params.beta * static_cast<double>(r.c_bit);
    return r;
}

double score(const InstrCounts& counts, const CostParams& params) {
    return make_report(counts, params).total;
}

namespace {

// Shared per-group arithmetic for the naive path; also the tail of the
// reordered path. groups = ceil(span / (N_s * N_l)), the final group
// zero-padded.
InstrCounts naive_span_counts(const PackingPlan& plan, size_t span, size_t ker_len) {
    const uint64_t n = plan.elems_per_lane_seq;
    const uint64_t lanes = plan.shape.lane_count();
    const uint64_t fields = n + ker_len - 1;
    const uint64_t groups = (span + n * lanes - 1) / (n * lanes);
    InstrCounts c;
    c.sisd_arith = groups * lanes * fields;
    c.simd_mul = groups;
    c.loads_stores = span + groups * (1 + 2 * lanes * fields);
    c.bit_ops = span + groups * fields * (2 + lanes);
    c.seg_ops = groups * (ker_len - 1) * (2 + lanes);
    return c;
}

InstrCounts setup_counts(size_t ker_len) {
    InstrCounts c;
    c.loads_stores = ker_len;  // kernel element loads
    c.bit_ops = ker_len + 2;   // kernel packing placements + two vdups
    return c;
}

}  // namespace

InstrCounts predict_counts(const PackingPlan& plan, size_t seq_len, size_t ker_len,
                           Variant variant) {
    validate_plan(plan);
    if (ker_len < 1 || seq_len < ker_len) {
        throw InfeasiblePlan("predict_counts needs 1 <= ker_len <= seq_len");
    }
    if (ker_len > plan.elems_per_lane_ker) {
        throw InfeasiblePlan("kernel longer than the plan packs per lane");
    }
    const uint64_t n = plan.elems_per_lane_seq;
    const uint64_t lanes = plan.shape.lane_count();

    InstrCounts c = setup_counts(ker_len);
    const bool degenerate = ker_len < 2 || lanes < 2 || n * lanes == 1;
    if (variant == Variant::naive || degenerate) {
        c += naive_span_counts(plan, seq_len, ker_len);
        return c;
    }

    const uint64_t chain_groups = chain_group_factor(plan, ker_len);
    const uint64_t chain_elems = chain_groups * n * lanes * lanes;
    const uint64_t rounds = chain_groups * lanes;
    const uint64_t chains = seq_len / chain_elems;
    const uint64_t tail = seq_len - chains * chain_elems;

    c.simd_mul += chains * rounds;
    c.simd_addsub += chains * rounds;
    c.sisd_arith += chains * (rounds * n * lanes + lanes * (ker_len - 1));
    c.loads_stores +=
        chains * (chain_elems + rounds * (1 + 2 * n * lanes) + 2 * lanes * (ker_len - 1));
    c.bit_ops += chains * (chain_elems + 1 + rounds * (n * (2 + lanes) + 1) +
                           (ker_len - 1) * (2 + lanes));
    c.seg_ops += chains * (ker_len - 1) * (2 + lanes);
    if (tail > 0) c += naive_span_counts(plan, tail, ker_len);
    return c;
}

CalibrationResult calibrate(std::span<const CalibrationRow> rows) {
    if (rows.size() < 2) throw DegenerateSystem("calibration needs at least two rows");
    double sxx = 0, sxy = 0, syy = 0, sxr = 0, syr = 0;
    for (const auto& row : rows) {
        const double r = row.cost - row.c_sisd;
        sxx += row.c_simd * row.c_simd;
        sxy += row.c_simd * row.c_bit;
        syy += row.c_bit * row.c_bit;
        sxr += row.c_simd * r;
        syr += row.c_bit * r;
    }
    const double det = sxx * syy - sxy * sxy;
    if (sxx == 0.0 || syy == 0.0 || std::abs(det) <= 1e-12 * sxx * syy) {
        throw DegenerateSystem("(c_simd, c_bit) columns are collinear");
    }

    // Pivoted 2x2 elimination on [sxx sxy; sxy syy] [alpha beta]' = [sxr syr]'.
    double a11 = sxx, a12 = sxy, b1 = sxr;
    double a21 = sxy, a22 = syy, b2 = syr;
    if (std::abs(a21) > std::abs(a11)) {
        std::swap(a11, a21);
        std::swap(a12, a22);
        std::swap(b1, b2);
    }
    const double m = a21 / a11;
    const double beta = (b2 - m * b1) / (a22 - m * a12);
    const double alpha = (b1 - a12 * beta) / a11;
    if (!(alpha > 0.0) || !(beta > 0.0)) {
        throw DegenerateSystem("fit produced non-positive coefficients");
    }

    double sse = 0;
    for (const auto& row : rows) {
        const double e = row.cost - row.c_sisd - alpha * row.c_simd - beta * row.c_bit;
        sse += e * e;
    }
    return CalibrationResult{CostParams{alpha, beta, true},
                             std::sqrt(sse / static_cast<double>(rows.size()))};
}

std::vector<CalibrationRow> parse_calibration_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error("empty calibration CSV");
    // tolerate trailing \r from CRLF files
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "c_sisd,c_simd,c_bit,cost") {
        throw Error("calibration CSV must start with header c_sisd,c_simd,c_bit,cost");
    }
    std::vector<CalibrationRow> rows;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        CalibrationRow row;
        double* fields[4] = {&row.c_sisd, &row.c_simd, &row.c_bit, &row.cost};
        size_t pos = 0;
        for (int f = 0; f < 4; ++f) {
            const size_t comma = line.find(',', pos);
            const std::string cell = line.substr(pos, comma == std::string::npos
                                                          ? std::string::npos
                                                          : comma - pos);
            try {
                *fields[f] = std::stod(cell);
            } catch (const std::exception&) {
                throw Error("bad number in calibration CSV line " + std::to_string(lineno));
            }
            if (f < 3) {
                if (comma == std::string::npos) {
                    throw Error("calibration CSV line " + std::to_string(lineno) +
                                " has fewer than 4 fields");
                }
                pos = comma + 1;
            }
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace mixq
