// stabfit: tail-index estimation for symmetric alpha-stable data.
// Subcommands: table, estimate, simulate, evaluate, robustness.

#include "qcv/errors.hpp"
#include "qcv/evaluation.hpp"
#include "qcv/table_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t ensure_seed(std::optional<std::uint64_t> seed) {
    if (seed) return *seed;
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::vector<double> parse_csv_numbers(const std::string& cell_sep_line,
                                      std::vector<std::string>& out) {
    out.clear();
    std::stringstream ss(cell_sep_line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return {};
}

// one value per line, or a CSV with a header row and a named/auto column
std::vector<double> load_data(const std::string& path, const std::string& column,
                              const std::string& format) {
    std::ifstream in(path);
    if (!in) throw qcv::DataError("cannot open data file " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw qcv::DataError("data file is empty: " + path);

    bool csv = format == "csv";
    if (format == "auto") {
        char* end = nullptr;
        std::strtod(lines[0].c_str(), &end);
        const bool first_numeric = end && end != lines[0].c_str();
        csv = !column.empty() || lines[0].find(',') != std::string::npos || !first_numeric;
        if (!first_numeric && lines[0].find(',') == std::string::npos && column.empty())
            csv = true; // single named column
    }

    std::vector<double> values;
    if (!csv) {
        for (std::size_t i = 0; i < lines.size(); ++i) {
            if (lines[i].empty()) continue;
            char* end = nullptr;
            const double v = std::strtod(lines[i].c_str(), &end);
            if (end == lines[i].c_str() || !std::isfinite(v))
                throw qcv::DataError("line " + std::to_string(i + 1) +
                                     ": not a finite number: '" + lines[i] + "'");
            values.push_back(v);
        }
    } else {
        std::vector<std::string> header;
        parse_csv_numbers(lines[0], header);
        std::size_t col = header.size();
        if (!column.empty()) {
            for (std::size_t c = 0; c < header.size(); ++c)
                if (header[c] == column) col = c;
            if (col == header.size())
                throw qcv::DataError("column '" + column + "' not found in " + path);
        } else if (lines.size() > 1) {
            // first column whose first data cell parses as a number
            std::vector<std::string> first;
            parse_csv_numbers(lines[1], first);
            for (std::size_t c = 0; c < first.size(); ++c) {
                char* end = nullptr;
                std::strtod(first[c].c_str(), &end);
                if (end && end != first[c].c_str()) { col = c; break; }
            }
            if (col == header.size())
                throw qcv::DataError("no numeric column found in " + path);
        }
        std::vector<std::string> cells;
        for (std::size_t i = 1; i < lines.size(); ++i) {
            if (lines[i].empty()) continue;
            parse_csv_numbers(lines[i], cells);
            if (col >= cells.size())
                throw qcv::DataError("line " + std::to_string(i + 1) + ": missing column");
            char* end = nullptr;
            const double v = std::strtod(cells[col].c_str(), &end);
            if (end == cells[col].c_str() || !std::isfinite(v))
                throw qcv::DataError("line " + std::to_string(i + 1) +
                                     ": not a finite number: '" + cells[col] + "'");
            values.push_back(v);
        }
    }
    if (values.size() < 50)
        throw qcv::DataError("data file holds " + std::to_string(values.size()) +
                             " values; at least 50 required");
    return values;
}

void write_manifest(const fs::path& out_path, const json& manifest) {
    qcv::write_text_file(out_path, manifest.dump(2) + "\n");
}

json base_manifest(const std::string& command, std::uint64_t seed) {
    json m;
    m["tool"] = "stabfit";
    m["version"] = kVersion;
    m["command"] = command;
    m["seed"] = seed;
    return m;
}

std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::strtod(tok.c_str(), nullptr));
    if (out.empty()) throw qcv::InvalidParams("empty list: '" + csv + "'");
    return out;
}

std::vector<std::string> parse_names(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    if (out.empty()) throw qcv::InvalidParams("empty list: '" + csv + "'");
    return out;
}

struct CommonOpts {
    std::string table_dir;
    int threads = 0;
};

qcv::RatioSpec resolve_spec(const std::string& name, const std::string& triple) {
    if (!triple.empty()) {
        const auto v = parse_list(triple);
        if (v.size() != 3) throw qcv::InvalidParams("--split needs a,b,d");
        return qcv::RatioSpec{qcv::QuantileSplit(v[0], v[1]), v[2], "custom"};
    }
    if (name == "n1") return qcv::n1_spec();
    if (name == "n2") return qcv::n2_spec();
    throw qcv::InvalidParams("unknown spec '" + name + "' (use n1, n2 or --split)");
}

// build only the tables the requested method needs
qcv::eval::EstimatorSuite suite_for(const std::string& method, qcv::TableStore& store,
                                    double lo, double hi, int threads) {
    qcv::eval::EstimatorSuite suite;
    const qcv::stable::IntegrationConfig cfg;
    if (method == "n1" || method == "m1")
        suite.n1 = std::make_shared<const qcv::RatioTable>(
            store.ratio_table(qcv::n1_spec(), lo, hi, 0.0025, cfg, threads));
    if (method == "n2" || method == "m2")
        suite.n2 = std::make_shared<const qcv::RatioTable>(
            store.ratio_table(qcv::n2_spec(), lo, hi, 0.0025, cfg, threads));
    if (method == "mch")
        suite.nu = std::make_shared<const qcv::bench::NuTable>(
            store.nu_table(0.5, 2.0, 0.0025, cfg, threads));
    if (method == "mle") suite.pdf = qcv::bench::PdfTable::get(cfg);
    return suite;
}

json table_digests(const qcv::eval::EstimatorSuite& suite) {
    json t = json::object();
    if (suite.n1) t["n1"] = suite.n1->cfg_digest;
    if (suite.n2) t["n2"] = suite.n2->cfg_digest;
    if (suite.nu) t["mcculloch"] = suite.nu->cfg_digest;
    return t;
}

int run(int argc, char** argv) {
    CLI::App app{"tail-index estimation for symmetric alpha-stable data"};
    app.require_subcommand(1);
    CommonOpts common;
    app.add_option("--table-dir", common.table_dir,
                   "table cache directory (default $STABFIT_TABLE_DIR or ./.stabfit-tables)");
    app.add_option("--threads", common.threads, "cap worker threads (0 = all cores)");

    // ---- table ----
    auto* cmd_table = app.add_subcommand("table", "precompute a ratio table");
    std::string t_spec = "n1", t_split, t_out;
    double t_lo = 0.6, t_hi = 2.0, t_step = 0.0025;
    cmd_table->add_option("--spec", t_spec, "built-in spec: n1 or n2");
    cmd_table->add_option("--split", t_split, "custom spec as a,b,d");
    cmd_table->add_option("--lo", t_lo, "lower alpha bound");
    cmd_table->add_option("--hi", t_hi, "upper alpha bound");
    cmd_table->add_option("--step", t_step, "grid spacing (<= 0.0025)");
    cmd_table->add_option("--out", t_out, "write the table here instead of the cache dir");

    // ---- estimate ----
    auto* cmd_est = app.add_subcommand("estimate", "estimate alpha from a data file");
    std::string e_input, e_method = "n1", e_column, e_format = "auto";
    int e_bootstrap = 0;
    double e_level = 0.95, e_tlo = 0.6, e_thi = 2.0;
    bool e_no_standardize = false;
    std::optional<std::uint64_t> e_seed;
    cmd_est->add_option("--input", e_input, "data file")->required();
    cmd_est->add_option("--method", e_method, "n1|n2|mch|reg|mle|m1|m2");
    cmd_est->add_option("--column", e_column, "CSV column name (default: first numeric)");
    cmd_est->add_option("--format", e_format, "plain|csv|auto");
    cmd_est->add_option("--bootstrap", e_bootstrap, "bootstrap resamples B (0 = off)");
    cmd_est->add_option("--level", e_level, "confidence level");
    cmd_est->add_option("--seed", e_seed, "bootstrap seed");
    cmd_est->add_option("--table-lo", e_tlo, "ratio table lower bound");
    cmd_est->add_option("--table-hi", e_thi, "ratio table upper bound");
    cmd_est->add_flag("--no-standardize", e_no_standardize,
                      "skip median/IQR normalization before the likelihood method");

    // ---- simulate ----
    auto* cmd_sim = app.add_subcommand("simulate", "write a simulated sample");
    double s_alpha = 1.5, s_beta = 0.0, s_scale = 1.0, s_location = 0.0;
    std::size_t s_n = 1000;
    std::string s_out;
    std::optional<std::uint64_t> s_seed;
    cmd_sim->add_option("--alpha", s_alpha)->required();
    cmd_sim->add_option("--beta", s_beta);
    cmd_sim->add_option("--scale", s_scale);
    cmd_sim->add_option("--location", s_location);
    cmd_sim->add_option("--n", s_n)->required();
    cmd_sim->add_option("--seed", s_seed);
    cmd_sim->add_option("--out", s_out)->required();

    // ---- evaluate ----
    auto* cmd_eval = app.add_subcommand("evaluate", "Monte Carlo RMSE report");
    std::string v_methods = "n1,n2,mch,reg", v_alphas = "1,1.1,1.2,1.3,1.4,1.5,1.6,1.7,1.8,1.9,2",
                v_ns = "250,500,1000", v_out;
    int v_k = 1000;
    std::optional<std::uint64_t> v_seed;
    cmd_eval->add_option("--methods", v_methods, "comma list of methods");
    cmd_eval->add_option("--alphas", v_alphas, "comma list of true alphas");
    cmd_eval->add_option("--ns", v_ns, "comma list of sample sizes");
    cmd_eval->add_option("-k,--replications", v_k,
                         "Monte Carlo replications per cell (headline tables use 100000)");
    cmd_eval->add_option("--seed", v_seed, "master seed");
    cmd_eval->add_option("--out", v_out, "output CSV path")->required();

    // ---- robustness ----
    auto* cmd_rob = app.add_subcommand("robustness", "skewness robustness grids");
    std::string r_alphas = "1.1,1.2,1.3,1.4,1.5,1.6,1.7,1.8,1.9,2",
                r_betas = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1", r_methods = "n1,n2", r_out;
    int r_n = 1000, r_k = 1000;
    std::optional<std::uint64_t> r_seed;
    cmd_rob->add_option("--alphas", r_alphas);
    cmd_rob->add_option("--betas", r_betas);
    cmd_rob->add_option("--methods", r_methods);
    cmd_rob->add_option("--n", r_n, "sample size");
    cmd_rob->add_option("-k,--replications", r_k);
    cmd_rob->add_option("--seed", r_seed, "master seed");
    cmd_rob->add_option("--out", r_out, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2; // usage errors exit 2
    }
    qcv::TableStore store(common.table_dir);

    if (cmd_table->parsed()) {
        const auto spec = resolve_spec(t_spec, t_split);
        const qcv::stable::IntegrationConfig cfg;
        if (t_out.empty()) {
            store.ratio_table(spec, t_lo, t_hi, t_step, cfg, common.threads);
            std::cout << store.ratio_path(spec, t_lo, t_hi, t_step, cfg).string() << "\n";
        } else {
            const auto table = qcv::build_table(spec, t_lo, t_hi, t_step, cfg, common.threads);
            qcv::write_text_file(t_out, qcv::table_to_csv(table));
            json manifest = base_manifest("table", 0);
            manifest["config"] = {{"spec", spec.name}, {"a", spec.tail.a}, {"b", spec.tail.b},
                                  {"d", spec.central_d}, {"lo", t_lo}, {"hi", t_hi},
                                  {"step", t_step}, {"cfg_digest", cfg.digest()}};
            write_manifest(t_out + ".manifest.json", manifest);
            std::cout << t_out << "\n";
        }
        return 0;
    }

    if (cmd_est->parsed()) {
        if (!qcv::eval::EstimatorSuite::known_method(e_method))
            throw qcv::InvalidParams("unknown method '" + e_method + "'");
        const auto data = load_data(e_input, e_column, e_format);
        auto suite = suite_for(e_method, store, e_tlo, e_thi, common.threads);
        suite.mle.standardize = !e_no_standardize;
        const std::uint64_t seed = ensure_seed(e_seed);

        json out;
        out["method"] = e_method;
        out["n"] = data.size();
        out["seed"] = seed;
        if (e_bootstrap > 0) {
            const auto ci = qcv::eval::bootstrap_ci(data, e_method, suite, e_bootstrap,
                                                    e_level, seed, common.threads);
            out["alpha_hat"] = ci.point_estimate;
            out["clamped"] = suite.estimate(e_method, data).clamped;
            out["ci"] = {{"low", ci.ci_low}, {"high", ci.ci_high}, {"level", ci.level},
                         {"B", ci.resamples}};
            out["failures"] = ci.failures;
        } else {
            const auto est = suite.estimate(e_method, data);
            out["alpha_hat"] = est.alpha_hat;
            out["clamped"] = est.clamped;
        }
        std::cout << out.dump() << "\n";

        json manifest = base_manifest("estimate", seed);
        manifest["config"] = {{"input", e_input}, {"method", e_method},
                              {"column", e_column}, {"format", e_format},
                              {"bootstrap", e_bootstrap}, {"level", e_level},
                              {"table_lo", e_tlo}, {"table_hi", e_thi},
                              {"standardize", !e_no_standardize},
                              {"table_dir", store.dir().string()}};
        manifest["tables"] = table_digests(suite);
        std::cerr << manifest.dump() << "\n";
        return 0;
    }

    if (cmd_sim->parsed()) {
        const std::uint64_t seed = ensure_seed(s_seed);
        const auto xs =
            qcv::stable::sample(qcv::stable::StableParams(s_alpha, s_beta, s_scale, s_location),
                                s_n, seed);
        std::ostringstream body;
        for (const double v : xs) body << fmt17(v) << "\n";
        qcv::write_text_file(s_out, body.str());
        json manifest = base_manifest("simulate", seed);
        manifest["config"] = {{"alpha", s_alpha}, {"beta", s_beta}, {"scale", s_scale},
                              {"location", s_location}, {"n", s_n}, {"out", s_out}};
        write_manifest(s_out + ".manifest.json", manifest);
        std::cout << s_out << "\n";
        return 0;
    }

    if (cmd_eval->parsed()) {
        qcv::eval::MonteCarloConfig cfg;
        cfg.methods = parse_names(v_methods);
        cfg.alphas = parse_list(v_alphas);
        const auto ns = parse_list(v_ns);
        cfg.sample_sizes.clear();
        for (const double n : ns) cfg.sample_sizes.push_back(static_cast<int>(n));
        cfg.replications = v_k;
        cfg.master_seed = ensure_seed(v_seed);
        cfg.threads = common.threads;

        const auto suite = qcv::eval::make_suite(store, 0.6, 2.0, 0.0025, {}, common.threads);
        const auto report = qcv::eval::run_rmse_experiment(cfg, suite);
        qcv::write_text_file(v_out, report.to_csv());
        qcv::write_text_file(fs::path(v_out).replace_extension(".json"), report.to_json());

        json manifest = base_manifest("evaluate", cfg.master_seed);
        manifest["config"] = {{"methods", cfg.methods}, {"alphas", cfg.alphas},
                              {"ns", cfg.sample_sizes}, {"k", cfg.replications},
                              {"table_dir", store.dir().string()}};
        manifest["tables"] = table_digests(suite);
        write_manifest(v_out + ".manifest.json", manifest);
        std::cout << v_out << "\n";
        return 0;
    }

    if (cmd_rob->parsed()) {
        qcv::eval::MonteCarloConfig cfg;
        cfg.methods = parse_names(r_methods);
        cfg.alphas = parse_list(r_alphas);
        cfg.betas = parse_list(r_betas);
        cfg.sample_sizes = {r_n};
        cfg.replications = r_k;
        cfg.master_seed = ensure_seed(r_seed);
        cfg.threads = common.threads;

        const auto suite = qcv::eval::make_suite(store, 0.6, 2.0, 0.0025, {}, common.threads);
        const auto grid = qcv::eval::run_bias_grid(cfg, suite);
        const auto report = qcv::eval::bias_grid_report(grid);
        qcv::write_text_file(r_out, report.to_csv());
        qcv::write_text_file(fs::path(r_out).replace_extension(".json"), report.to_json());

        json manifest = base_manifest("robustness", cfg.master_seed);
        manifest["config"] = {{"methods", cfg.methods}, {"alphas", cfg.alphas},
                              {"betas", cfg.betas}, {"n", r_n}, {"k", cfg.replications},
                              {"table_dir", store.dir().string()}};
        manifest["tables"] = table_digests(suite);
        write_manifest(r_out + ".manifest.json", manifest);
        std::cout << r_out << "\n";
        return 0;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const qcv::InvalidParams& e) {
        std::cout << json{{"error", {{"type", "usage"}, {"message", e.what()}}}}.dump() << "\n";
        return 2;
    } catch (const qcv::DataError& e) {
        std::cout << json{{"error", {{"type", "data"}, {"message", e.what()}}}}.dump() << "\n";
        return 3;
    } catch (const qcv::Error& e) {
        std::cout << json{{"error", {{"type", "numeric"}, {"message", e.what()}}}}.dump() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cout << json{{"error", {{"type", "internal"}, {"message", e.what()}}}}.dump()
                  << "\n";
        return 4;
    }
}
