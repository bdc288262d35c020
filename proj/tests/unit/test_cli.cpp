// End-to-end tests against the installed binary (REQSIM_CLI_PATH). Each run
// spawns a fresh process, so these double as determinism checks: same flags,
// same bytes, regardless of worker count or repetition.

#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

namespace fs = std::filesystem;

TEST_SUITE_BEGIN("cli");

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr interleaved
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(REQSIM_CLI_PATH) + " " + args + " 2>&1";
    std::array<char, 4096> buf{};
    RunResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe))
        r.output.append(buf.data(), n);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("reqsim_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const char* name) const { return (path / name).string(); }
    static inline int counter = 0;
};

std::string src(const char* rel) {
    return std::string(REQSIM_SOURCE_DIR) + "/" + rel;
}

}  // namespace

TEST_CASE("help and materials listing exit cleanly") {
    CHECK(run_cli("--help").exit_code == 0);
    CHECK(run_cli("simulate --help").exit_code == 0);

    auto r = run_cli("materials");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("eu_y2sio5") != std::string::npos);
    CHECK(r.output.find("tm_yag") != std::string::npos);

    auto one = run_cli("materials --name tm_yag");
    CHECK(one.exit_code == 0);
    CHECK(one.output.find("\"name\": \"tm_yag\"") != std::string::npos);
}

TEST_CASE("bad invocations exit 1 and leave no artifact") {
    TempDir tmp;
    const std::string out = tmp.file("x.json");

    CHECK(run_cli("").exit_code == 1);                       // no subcommand
    CHECK(run_cli("frobnicate").exit_code == 1);             // unknown verb
    CHECK(run_cli("dipole --no-such-flag 1").exit_code == 1);
    CHECK(run_cli("materials --name not_a_material").exit_code == 1);

    // stochastic commands refuse to run without a seed
    auto r = run_cli("dipole --material builtin:tm_yag --bandwidth 50 "
                     "--trials 100 --out " + out);
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("--seed") != std::string::npos);
    CHECK_FALSE(fs::exists(out));

    // invalid numbers are rejected before any work happens
    CHECK(run_cli("dipole --material builtin:tm_yag --bandwidth 50 "
                  "--trials 2.5 --seed 1 --out " + out).exit_code == 1);
    CHECK(run_cli("dipole --material builtin:tm_yag --bandwidth 50kHz "
                  "--trials 100 --seed 1 --out " + out).exit_code == 1);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("sequence parse errors carry file, line and column") {
    TempDir tmp;
    auto r = run_cli("simulate --sequence " +
                     src("tests/data/seq/malformed/bad_unit.seq") +
                     " --out " + tmp.file("t.csv"));
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("bad_unit.seq:2:31:") != std::string::npos);
    CHECK(r.output.find("expected") != std::string::npos);
    CHECK_FALSE(fs::exists(tmp.file("t.csv")));
}

TEST_CASE("simulate emits a deterministic readout table") {
    TempDir tmp;
    const std::string seq = src("data/sequences/holeburn_yalo3.seq");
    auto r1 = run_cli("simulate --sequence " + seq + " --out " +
                      tmp.file("a.csv"));
    auto r2 = run_cli("simulate --sequence " + seq + " --out " +
                      tmp.file("b.csv"));
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);
    const std::string a = slurp(tmp.file("a.csv"));
    CHECK(a == slurp(tmp.file("b.csv")));
    CHECK(a.rfind("readout,freq_mhz,alpha\n", 0) == 0);
    CHECK(a.find("\n0,") != std::string::npos);

    // a material override must change the trace
    auto r3 = run_cli("simulate --sequence " + seq +
                      " --material builtin:tm_yag --out " + tmp.file("c.csv"));
    REQUIRE(r3.exit_code == 0);
    CHECK(slurp(tmp.file("c.csv")) != a);
}

TEST_CASE("dipole output is byte-identical across runs and worker counts") {
    TempDir tmp;
    const std::string base =
        "dipole --material builtin:eu_yalo3_153 --bandwidth 100MHz "
        "--trials 4000 --seed 42 --out ";
    REQUIRE(run_cli(base + tmp.file("w1.json") + " --workers 1").exit_code == 0);
    REQUIRE(run_cli(base + tmp.file("w4.json") + " --workers 4").exit_code == 0);
    REQUIRE(run_cli(base + tmp.file("w1b.json") + " --workers 1").exit_code == 0);
    const std::string w1 = slurp(tmp.file("w1.json"));
    CHECK(w1 == slurp(tmp.file("w4.json")));
    CHECK(w1 == slurp(tmp.file("w1b.json")));
    CHECK(w1.find("\"seed\": 42") != std::string::npos);

    // different seed, different histogram
    REQUIRE(run_cli("dipole --material builtin:eu_yalo3_153 --bandwidth "
                    "100MHz --trials 4000 --seed 43 --out " +
                    tmp.file("s43.json")).exit_code == 0);
    CHECK(slurp(tmp.file("s43.json")) != w1);
}

TEST_CASE("broaden and distill are reproducible through the CLI") {
    TempDir tmp;
    const std::string br =
        "broaden --material builtin:eu_yalo3_153 --bandwidths 20,60MHz "
        "--trials 3000 --seed 5 --out ";
    REQUIRE(run_cli(br + tmp.file("b1.csv") + " --workers 3").exit_code == 0);
    REQUIRE(run_cli(br + tmp.file("b2.csv")).exit_code == 0);
    const std::string b = slurp(tmp.file("b1.csv"));
    CHECK(b == slurp(tmp.file("b2.csv")));
    CHECK(b.rfind("bandwidth_mhz,fwhm_mhz\n", 0) == 0);

    const std::string di =
        "distill --material builtin:eu_yalo3_153 --bandwidth 1 --threshold "
        "5MHz --ions 3000 --seed 9 ";
    REQUIRE(run_cli(di + "--out " + tmp.file("d1.json") + " --ions-csv " +
                    tmp.file("i1.csv") + " --workers 2").exit_code == 0);
    REQUIRE(run_cli(di + "--out " + tmp.file("d2.json") + " --ions-csv " +
                    tmp.file("i2.csv")).exit_code == 0);
    CHECK(slurp(tmp.file("d1.json")) == slurp(tmp.file("d2.json")));
    const std::string ions = slurp(tmp.file("i1.csv"));
    CHECK(ions == slurp(tmp.file("i2.csv")));
    CHECK(ions.rfind("id,shift_mhz,retained,level\n", 0) == 0);
}

TEST_CASE("feasibility defaults the separation to the qubit splitting") {
    TempDir tmp;
    REQUIRE(run_cli("feasibility --material builtin:eu_y2sio5_153 --width "
                    "11.9 --out " + tmp.file("f.json")).exit_code == 0);
    const std::string f = slurp(tmp.file("f.json"));
    CHECK(f.find("\"separation_mhz\": 76.4") != std::string::npos);
    CHECK(f.find("\"feasible\": true") != std::string::npos);

    // explicit separation overrides; matches the defaulted run otherwise
    REQUIRE(run_cli("feasibility --material builtin:eu_y2sio5_153 --width "
                    "11.9 --separation 76.4MHz --out " +
                    tmp.file("g.json")).exit_code == 0);
    CHECK(slurp(tmp.file("g.json")) == f);

    // no hyperfine structure -> no default separation
    CHECK(run_cli("feasibility --material builtin:tm_yag --width 1 --out " +
                  tmp.file("h.json")).exit_code == 1);
}

TEST_CASE("config file supplies defaults, flags win") {
    TempDir tmp;
    {
        std::ofstream cfg(tmp.file("cfg.json"));
        cfg << R"({"command": "dipole", "material": "builtin:eu_yalo3_153",
                   "bandwidth": "100MHz", "trials": 2000, "seed": 7})";
    }
    REQUIRE(run_cli("dipole --config " + tmp.file("cfg.json") + " --out " +
                    tmp.file("a.json")).exit_code == 0);
    const std::string a = slurp(tmp.file("a.json"));
    CHECK(a.find("\"seed\": 7") != std::string::npos);

    // flag beats config
    REQUIRE(run_cli("dipole --config " + tmp.file("cfg.json") +
                    " --seed 8 --out " + tmp.file("b.json")).exit_code == 0);
    CHECK(slurp(tmp.file("b.json")).find("\"seed\": 8") != std::string::npos);

    // config equivalent to flags, byte for byte
    REQUIRE(run_cli("dipole --material builtin:eu_yalo3_153 --bandwidth "
                    "100MHz --trials 2000 --seed 7 --out " +
                    tmp.file("c.json")).exit_code == 0);
    CHECK(slurp(tmp.file("c.json")) == a);

    // wrong command in config is an error
    CHECK(run_cli("broaden --config " + tmp.file("cfg.json") + " --out " +
                  tmp.file("x.csv")).exit_code == 1);

    // unknown keys are rejected
    {
        std::ofstream cfg(tmp.file("bad.json"));
        cfg << R"({"materail": "builtin:tm_yag"})";
    }
    auto r = run_cli("materials --config " + tmp.file("bad.json"));
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("materail") != std::string::npos);
}

TEST_SUITE_END();
