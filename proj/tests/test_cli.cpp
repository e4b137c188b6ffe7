// End-to-end checks of the mixq binary: exit codes, verdicts, and
// byte-identical machine output across repeated seeded runs. The binary
// path arrives through the MIXQ_BIN environment variable set by CTest.
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;
};

std::string binary() {
    const char* bin = std::getenv("MIXQ_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "MIXQ_BIN must point at the mixq binary");
    return bin;
}

RunResult run(const std::string& args) {
    const std::string cmd = binary() + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult res;
    std::array<char, 4096> buf;
    size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) {
        res.output.append(buf.data(), got);
    }
    const int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

}  // namespace

TEST_CASE("conv verifies against the reference and exits 0") {
    RunResult r = run("conv --seq-bits 2 --ker-bits 2 --len 64 --kernel-len 3 "
                      "--variant reordered --seed 7");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("PASS") != std::string::npos);
    CHECK(r.output.find("simd_mul") != std::string::npos);
}

TEST_CASE("infeasible plans exit 2") {
    RunResult r = run("conv --seq-bits 8 --ker-bits 8 --shape 32x8");
    CHECK(r.exit_code == 2);
}

TEST_CASE("identity kernel echoes the input") {
    const char* path = "/tmp/mixq_cli_identity.json";
    {
        std::ofstream out(path);
        out << R"({"sequence":[5,0,9,13,2],"seq_bits":4,"kernel":[1],"ker_bits":2})";
    }
    RunResult r = run(std::string("--json conv --input ") + path + " --variant naive");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"outputs\":[5,0,9,13,2]") != std::string::npos);
    CHECK(r.output.find("\"verdict\":\"PASS\"") != std::string::npos);
}

TEST_CASE("seeded machine output is byte-identical across runs") {
    const std::string cmd =
        "--json conv --seq-bits 3 --ker-bits 4 --len 96 --kernel-len 2 --seed 42";
    RunResult first = run(cmd);
    CHECK(first.exit_code == 0);
    for (int i = 0; i < 3; ++i) {
        RunResult again = run(cmd);
        CHECK(again.output == first.output);
    }

    RunResult bench1 = run("--json bench --bits 2,4 --seq-len 64 --seed 9");
    RunResult bench2 = run("--json bench --bits 2,4 --seq-len 64 --seed 9");
    CHECK(bench1.exit_code == 0);
    CHECK(bench1.output == bench2.output);
}

TEST_CASE("plan prints the chosen geometry") {
    RunResult r = run("plan --seq-bits 2 --ker-bits 2 --kernel-len 2 --len 64");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("N_s=") != std::string::npos);
    CHECK(r.output.find("uncalibrated") != std::string::npos);
}

TEST_CASE("calibrate recovers parameters from a noiseless CSV") {
    const char* path = "/tmp/mixq_cli_cal.csv";
    {
        std::ofstream out(path);
        out << "c_sisd,c_simd,c_bit,cost\n";
        // cost = sisd + 2*simd + 0.5*bit
        out << "100,50,20,210\n200,10,80,260\n50,80,10,215\n10,5,40,40\n";
    }
    RunResult r = run(std::string("calibrate --csv ") + path);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("alpha:        2\n") != std::string::npos);
    CHECK(r.output.find("beta:         0.5\n") != std::string::npos);
}

TEST_CASE("search on the bundled example net is deterministic") {
    const std::string cmd = "--json search --net " + std::string(MIXQ_DATA_DIR) +
                            "/example_net.json --table " + MIXQ_DATA_DIR +
                            "/example_sensitivity.json --lambda 1e-7";
    RunResult first = run(cmd);
    CHECK(first.exit_code == 0);
    CHECK(first.output.find("\"mode\":\"exhaustive\"") != std::string::npos);
    RunResult again = run(cmd);
    CHECK(again.output == first.output);
}

TEST_CASE("bench writes the documented CSV") {
    const char* path = "/tmp/mixq_cli_bench.csv";
    RunResult r = run(std::string("bench --bits 2,8 --seq-len 64 --out ") + path);
    CHECK(r.exit_code == 0);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "s_bits,k_bits,variant,shape,simd_mul,bit_ops,sisd,score,"
          "speedup_scalar,speedup_lane,speedup_cmix");
}
