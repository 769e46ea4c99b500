#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "doctest.h"
#include "fhelab/config.hpp"
#include "fhelab/report.hpp"

using namespace fhelab;
namespace fs = std::filesystem;

namespace {

std::string cli() {
    const char* p = std::getenv("FHELAB_CLI");
    return p ? p : "fhelab";
}

fs::path scratch(const std::string& name) {
    auto d = fs::temp_directory_path() / ("fhelab_cli_test_" + name);
    fs::remove_all(d);
    return d;
}

int run(const std::string& args) {
    std::string cmd = cli() + " " + args + " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("presets match the bootstrapping parameter rows") {
    auto names = preset_names();
    CHECK(std::find(names.begin(), names.end(), "baseline") != names.end());
    CHECK(std::find(names.begin(), names.end(), "best-case") != names.end());
    auto b = load_preset("baseline");
    CHECK(b.model.log_n == 17);
    CHECK(b.model.L == 35);
    CHECK(b.model.dnum == 3);
    CHECK(b.model.fft_iters == 3);
    CHECK(b.opts.describe() == OptimizationSet{}.describe());
    auto o = load_preset("best-case");
    CHECK(o.model.L == 40);
    CHECK(o.model.dnum == 2);
    CHECK(o.model.fft_iters == 6);
    CHECK(o.opts.describe() == OptimizationSet::all().describe());
    CHECK(o.hw.dram_bandwidth == 900e9);
    CHECK_THROWS_AS(load_preset("nope"), std::invalid_argument);
}

TEST_CASE("plans parse and the toy plan is the documented preset") {
    auto p = load_bootstrap_plan();
    auto toy = BootstrapParams::toy();
    CHECK(p.bs.radices == toy.radices);
    CHECK(p.bs.sine_degree == toy.sine_degree);
    CHECK(p.bs.doublings == toy.doublings);
    CHECK(p.bs.K == toy.K);
    CHECK(p.ckks.delta == 0x1p50);
    CHECK(p.ckks.L == 18);
    CHECK(p.max_error == 0x1p-8);
    auto lr = load_lr_plan();
    CHECK(lr.lr.iterations == 6);
    CHECK(lr.ckks.L == 30);
    CHECK(lr.bs.radices == toy.radices);
    CHECK_THROWS(load_bootstrap_plan("missing"));
}

TEST_CASE("targets file is complete and well formed") {
    const auto& t = targets();
    CHECK(t.cost_tol == 0.05);
    CHECK(t.dram_tol == 0.20);
    CHECK(t.cost_tables.size() == 5);
    CHECK(t.row("fhe_api", "Mult").cells.at("gop") == 1.8333);
    CHECK(t.row("applications", "Bootstrap").cells.at("gb") == 207.982);
    CHECK_FALSE(t.row("lr_performance", "PolyEval3").gated);
    CHECK(t.throughput.size() == 4);
    CHECK(t.dram.size() == 4);
    CHECK(t.search_L == 40);
    CHECK_THROWS(t.table("missing"));
}

TEST_CASE("config errors name the problem") {
    auto dir = scratch("cfg");
    fs::create_directories(dir);
    std::ofstream(dir / "bad.yaml") << "presets:\n  x:\n    L: forty\n";
    CHECK_THROWS_WITH_AS(load_preset("x", (dir / "bad.yaml").string()), doctest::Contains("not a number"),
                         std::invalid_argument);
    std::ofstream(dir / "flags.yaml") << "presets:\n  y:\n    flags: [beta]\n";
    CHECK_THROWS(load_preset("y", (dir / "flags.yaml").string()));  // beta needs fusion
    CHECK_THROWS(config_text("no-such-file.yaml"));
}

TEST_CASE("table rendering") {
    Table t;
    t.columns = {"name", "x", "n"};
    t.add({std::string("a,b"), 0.1 + 0.2, std::int64_t(3)});
    t.add({std::string("q\"t"), -0.0, std::int64_t(-1)});
    CHECK(t.csv() == "name,x,n\n\"a,b\",0.3,3\n\"q\"\"t\",0,-1\n");
    auto j = nlohmann::json::parse(t.json());
    CHECK(j.size() == 2);
    CHECK(j[0]["x"].get<double>() == 0.3);
    CHECK(j[1]["n"].get<int>() == -1);
    CHECK_THROWS(t.add({std::string("short")}));
    CHECK_THROWS(t.render("xml"));
    auto svg = svg_bar_chart("t", "y", {"a", "b"}, {{"s", {1, 2}}, {"u", {3, 0}}});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK_THROWS(svg_bar_chart("t", "y", {"a"}, {{"s", {1, 2}}}));
}

TEST_CASE("tables: baseline writes four tables and a deviation report, deterministically") {
    auto out = scratch("tables") / "nested" / "dir";
    REQUIRE(run("tables --preset baseline --out " + out.string()) == 0);
    for (auto f : {"aux_subroutines.csv", "fhe_api.csv", "applications.csv", "bootstrapping.csv", "deviation.csv"})
        CHECK(fs::exists(out / f));
    auto dev = slurp(out / "deviation.csv");
    CHECK(dev.find("FAIL") == std::string::npos);
    CHECK(dev.find("fhe_api,Mult,gop") != std::string::npos);
    auto first = slurp(out / "bootstrapping.csv");
    REQUIRE(run("tables --preset baseline --out " + out.string()) == 0);
    CHECK(slurp(out / "bootstrapping.csv") == first);
    CHECK(slurp(out / "deviation.csv") == dev);
}

TEST_CASE("tables: best-case writes the LR performance table") {
    auto out = scratch("best");
    REQUIRE(run("--preset best-case tables --out " + out.string()) == 0);
    auto lr = slurp(out / "lr_performance.csv");
    CHECK(lr.find("Full LR Iteration") != std::string::npos);
    CHECK(fs::exists(out / "bootstrapping_comparison.csv"));
    CHECK_FALSE(fs::exists(out / "aux_subroutines.csv"));
}

TEST_CASE("json format") {
    auto out = scratch("json");
    REQUIRE(run("tables --preset baseline --format json --out " + out.string()) == 0);
    auto j = nlohmann::json::parse(slurp(out / "fhe_api.json"));
    REQUIRE(j.size() == 7);
    CHECK(j[0]["name"] == "PtAdd");
    CHECK(j[3]["total_gop"].get<double>() > 1.7);
}

TEST_CASE("usage errors and gate failures exit nonzero") {
    auto out = scratch("err");
    CHECK(run("tables --preset nope --out " + out.string()) != 0);
    CHECK(run("--format xml tables --out " + out.string()) != 0);
    CHECK(run("") != 0);
    // a slower device misses the published transfer times
    fs::create_directories(out);
    auto cfg = config_text("dram.yaml");
    auto pos = cfg.find("clock_hz: 1.2e9");
    REQUIRE(pos != std::string::npos);
    cfg.replace(pos, 15, "clock_hz: 0.6e9");
    std::ofstream(out / "slow.yaml") << cfg;
    CHECK(run("dram --config " + (out / "slow.yaml").string() + " --out " + out.string()) == 1);
    CHECK(run("dram --out " + out.string()) == 0);
}

TEST_CASE("sweep, search and dram outputs") {
    auto out = scratch("misc");
    REQUIRE(run("sweep --out " + out.string()) == 0);
    auto sw = slurp(out / "sweep.csv");
    CHECK(sw.find("keycomp") != std::string::npos);
    CHECK(slurp(out / "sweep.svg").find("<rect") != std::string::npos);
    REQUIRE(run("search --top 3 --out " + out.string()) == 0);
    auto se = slurp(out / "search.csv");
    CHECK(se.find("\n1,40,2,6,") != std::string::npos);
    CHECK(std::count(se.begin(), se.end(), '\n') == 4);
    REQUIRE(run("dram --out " + out.string()) == 0);
    CHECK(slurp(out / "dram.csv").find("optimized,slot-wise") != std::string::npos);
}

TEST_CASE("selftest quick") {
    auto out = scratch("self");
    REQUIRE(run("selftest --quick --out " + out.string()) == 0);
    auto s = slurp(out / "selftest.csv");
    CHECK(s.find("FAIL") == std::string::npos);
    CHECK(s.find("keycomp_bits,pass") != std::string::npos);
}

TEST_CASE("lr-demo on a CSV that needs padding") {
    auto out = scratch("lr");
    fs::create_directories(out);
    // 5 samples, 3 features: padded to 8 x 4 inside the ciphertext
    std::ofstream(out / "data.csv") << "bias,f1,f2,y\n1,0.6,0.4,1\n1,-0.5,-0.3,0\n1,0.4,0.7,1\n1,-0.6,-0.2,0\n"
                                       "1,0.2,-0.4,1\n";
    REQUIRE(run("lr-demo --iterations 2 --label y --data " + (out / "data.csv").string() + " --out " + out.string()) ==
            0);
    auto s = slurp(out / "lr_loss.csv");
    std::istringstream in(s);
    std::string line;
    std::vector<double> loss;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ',')) f.push_back(c);
        REQUIRE(f.size() == 6);
        loss.push_back(std::stod(f[3]));
        CHECK(std::stod(f[5]) < 0x1p-6);
    }
    REQUIRE(loss.size() == 3);
    CHECK(loss[1] < loss[0]);
    CHECK(loss[2] < loss[1]);
    CHECK(run("lr-demo --data " + (out / "missing.csv").string() + " --out " + out.string()) != 0);
}
