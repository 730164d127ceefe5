#include <doctest.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int exit_code;
    std::string out;
};

std::string cli_bin() {
    const char* bin = std::getenv("STABFIT_BIN");
    REQUIRE(bin != nullptr);
    return bin;
}

RunResult run(const std::string& args) {
    const std::string cmd = cli_bin() + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    std::array<char, 4096> buf{};
    std::size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), got);
    const int status = pclose(pipe);
    return {WEXITSTATUS(status), out};
}

fs::path work_dir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "stabfit-cli-test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<double> read_numbers(const fs::path& p) {
    std::ifstream in(p);
    std::vector<double> out;
    double v;
    while (in >> v) out.push_back(v);
    return out;
}

void write_lines(const fs::path& p, const std::vector<double>& xs) {
    std::ofstream out(p);
    out.precision(17);
    for (const double v : xs) out << v << "\n";
}

} // namespace

TEST_CASE("simulate writes a deterministic file with a manifest") {
    const auto d = work_dir();
    const auto f1 = d / "sim_a.txt";
    const auto f2 = d / "sim_b.txt";
    CHECK(run("simulate --alpha 2 --n 1000 --seed 5 --out " + f1.string()).exit_code == 0);
    CHECK(run("simulate --alpha 2 --n 1000 --seed 5 --out " + f2.string()).exit_code == 0);
    CHECK(slurp(f1) == slurp(f2));
    CHECK(fs::exists(f1.string() + ".manifest.json"));

    const auto xs = read_numbers(f1);
    REQUIRE(xs.size() == 1000);
    double mean = 0, var = 0;
    for (double v : xs) mean += v;
    mean /= 1000;
    for (double v : xs) var += (v - mean) * (v - mean);
    var /= 1000;
    CHECK(var == doctest::Approx(2.0).epsilon(0.25));
}

TEST_CASE("skewed simulation pulls the mean off the median consistently") {
    const auto d = work_dir();
    for (const std::uint64_t seed : {71u, 72u, 73u}) {
        const auto f = d / ("skew" + std::to_string(seed) + ".txt");
        REQUIRE(run("simulate --alpha 1.5 --beta 0.5 --n 4000 --seed " +
                    std::to_string(seed) + " --out " + f.string()).exit_code == 0);
        auto xs = read_numbers(f);
        double mean = 0;
        for (double v : xs) mean += v;
        mean /= static_cast<double>(xs.size());
        std::sort(xs.begin(), xs.end());
        const double median = xs[xs.size() / 2];
        CHECK(mean > median); // right skew: the heavy tail sits on the right
    }
}

TEST_CASE("estimate recovers alpha on simulated near-Gaussian data") {
    const auto d = work_dir();
    const auto f = d / "sim19.txt";
    REQUIRE(run("simulate --alpha 1.9 --n 2000 --seed 42 --out " + f.string()).exit_code == 0);

    const auto r = run("estimate --input " + f.string() + " --method n2");
    REQUIRE(r.exit_code == 0);
    const json j = json::parse(r.out);
    CHECK(j["method"] == "n2");
    CHECK(j["n"] == 2000);
    const double alpha_hat = j["alpha_hat"].get<double>();
    CHECK(alpha_hat >= 1.85);
    CHECK(alpha_hat <= 1.95);

    const auto g = d / "simgauss.txt";
    REQUIRE(run("simulate --alpha 2 --n 2000 --seed 43 --out " + g.string()).exit_code == 0);
    const auto rg = run("estimate --input " + g.string() + " --method n1");
    REQUIRE(rg.exit_code == 0);
    const json jg = json::parse(rg.out);
    CHECK(jg["alpha_hat"].get<double>() >= 1.9);
    CHECK(jg["alpha_hat"].get<double>() <= 2.0);
    CHECK(jg.contains("clamped"));
}

TEST_CASE("estimate with bootstrap emits an interval") {
    const auto d = work_dir();
    const auto f = d / "simboot.txt";
    REQUIRE(run("simulate --alpha 2 --n 2000 --seed 44 --out " + f.string()).exit_code == 0);
    const auto r = run("estimate --input " + f.string() +
                       " --method n2 --bootstrap 400 --seed 9");
    REQUIRE(r.exit_code == 0);
    const json j = json::parse(r.out);
    REQUIRE(j.contains("ci"));
    CHECK(j["ci"]["B"] == 400);
    CHECK(j["ci"]["level"] == 0.95);
    CHECK(j["ci"]["low"].get<double>() <= j["ci"]["high"].get<double>());
    CHECK(j["ci"]["high"].get<double>() == 2.0);
    CHECK(j["seed"] == 9);
}

TEST_CASE("usage, data and numeric failures map to exit codes") {
    const auto d = work_dir();
    CHECK(run("estimate --no-such-flag").exit_code == 2);
    CHECK(run("nonsense").exit_code == 2);

    const auto tiny = d / "tiny.txt";
    write_lines(tiny, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    const auto r = run("estimate --input " + tiny.string() + " --method n1");
    CHECK(r.exit_code == 3);
    CHECK(json::parse(r.out)["error"]["type"] == "data");

    const auto bad = d / "badspec.csv";
    const auto rb =
        run("table --split 0.3,0.4,0.2 --lo 0.62 --hi 0.8 --out " + bad.string());
    CHECK(rb.exit_code == 4);
    CHECK(json::parse(rb.out)["error"]["type"] == "numeric");
}

TEST_CASE("data files with junk entries are rejected with line numbers") {
    const auto d = work_dir();
    const auto f = d / "junk.txt";
    std::ofstream out(f);
    for (int i = 0; i < 60; ++i) out << (i == 41 ? std::string("oops") : std::to_string(i)) << "\n";
    out.close();
    const auto r = run("estimate --input " + f.string() + " --method n1 --format plain");
    CHECK(r.exit_code == 3);
    const std::string msg = json::parse(r.out)["error"]["message"].get<std::string>();
    CHECK(msg.find("line 42") != std::string::npos);
}

TEST_CASE("csv input with a named column") {
    const auto d = work_dir();
    const auto f = d / "wide.csv";
    const auto raw = d / "raw.txt";
    REQUIRE(run("simulate --alpha 1.5 --n 500 --seed 45 --out " + raw.string()).exit_code == 0);
    const auto xs = read_numbers(raw);
    {
        std::ofstream out(f);
        out.precision(17);
        out << "label,value\n";
        for (std::size_t i = 0; i < xs.size(); ++i) out << "row" << i << "," << xs[i] << "\n";
    }
    const auto by_name = run("estimate --input " + f.string() + " --method n1 --column value");
    REQUIRE(by_name.exit_code == 0);
    const auto by_auto = run("estimate --input " + f.string() + " --method n1");
    REQUIRE(by_auto.exit_code == 0);
    CHECK(json::parse(by_name.out)["alpha_hat"] == json::parse(by_auto.out)["alpha_hat"]);

    const auto r = run("estimate --input " + f.string() + " --method n1 --column missing");
    CHECK(r.exit_code == 3);
}

TEST_CASE("estimates are invariant under affine rescaling of the input file") {
    const auto d = work_dir();
    const auto f = d / "base.txt";
    REQUIRE(run("simulate --alpha 1.6 --n 2000 --seed 46 --out " + f.string()).exit_code == 0);
    const auto xs = read_numbers(f);

    std::vector<double> dyadic(xs), affine(xs);
    for (auto& v : dyadic) v *= 4.0;
    for (auto& v : affine) v = 1.7 * v - 3.2;
    const auto fd = d / "dyadic.txt";
    const auto fa = d / "affine.txt";
    write_lines(fd, dyadic);
    write_lines(fa, affine);

    for (const std::string method : {"n1", "n2", "mch"}) {
        const auto r0 = run("estimate --input " + f.string() + " --method " + method);
        const auto r1 = run("estimate --input " + fd.string() + " --method " + method);
        const auto r2 = run("estimate --input " + fa.string() + " --method " + method);
        REQUIRE(r0.exit_code == 0);
        const double e0 = json::parse(r0.out)["alpha_hat"].get<double>();
        const double e1 = json::parse(r1.out)["alpha_hat"].get<double>();
        const double e2 = json::parse(r2.out)["alpha_hat"].get<double>();
        CHECK(e0 == e1); // dyadic rescaling is exact in binary floating point
        CHECK(e0 == doctest::Approx(e2).epsilon(1e-9));
    }
    const auto rr0 = run("estimate --input " + f.string() + " --method reg");
    const auto rr2 = run("estimate --input " + fa.string() + " --method reg");
    CHECK(json::parse(rr0.out)["alpha_hat"].get<double>() ==
          doctest::Approx(json::parse(rr2.out)["alpha_hat"].get<double>()).epsilon(1e-6));
}

TEST_CASE("table files rebuild byte-identically") {
    const auto d = work_dir();
    const auto t1 = d / "t1.csv";
    const auto t2 = d / "t2.csv";
    REQUIRE(run("table --spec n1 --lo 1.45 --hi 1.55 --out " + t1.string()).exit_code == 0);
    REQUIRE(run("table --spec n1 --lo 1.45 --hi 1.55 --out " + t2.string()).exit_code == 0);
    CHECK(slurp(t1) == slurp(t2));
    const std::string head = slurp(t1).substr(0, 1);
    CHECK(head == "#");
}

TEST_CASE("evaluate and robustness smoke runs are deterministic") {
    const auto d = work_dir();
    const auto e1 = d / "eval1.csv";
    const auto e2 = d / "eval2.csv";
    const std::string base =
        " --methods n1,reg --alphas 1.5 --ns 250 -k 10 --seed 31 --out ";
    REQUIRE(run("evaluate" + base + e1.string()).exit_code == 0);
    REQUIRE(run("evaluate" + base + e2.string()).exit_code == 0);
    CHECK(slurp(e1) == slurp(e2));
    CHECK(slurp(e1).find("alpha,beta,n,method,metric,value,failures") == 0);
    CHECK(fs::exists(d / "eval1.json"));
    CHECK(fs::exists(e1.string() + ".manifest.json"));

    const auto r1 = d / "rob.csv";
    REQUIRE(run("robustness --methods n1 --alphas 1.5 --betas 0,1 --n 250 -k 10 --seed 32 --out " +
                r1.string()).exit_code == 0);
    const std::string text = slurp(r1);
    CHECK(text.find("mean_alpha_hat") != std::string::npos);
    CHECK(text.find("abs_diff_vs_symmetric") != std::string::npos);
    // the beta = 0 difference column is exactly zero
    std::istringstream lines(text);
    std::string line;
    bool found_zero = false;
    while (std::getline(lines, line))
        if (line.find("abs_diff_vs_symmetric,0,") != std::string::npos) found_zero = true;
    CHECK(found_zero);
}
