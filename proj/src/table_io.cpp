#include "qcv/table_io.hpp"

#include "qcv/benchmarks.hpp"
#include "qcv/errors.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace qcv {

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// "key=value key=value ..." from the metadata line (after '#')
std::map<std::string, std::string> parse_meta(const std::string& line) {
    std::map<std::string, std::string> kv;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) {
        const auto eq = tok.find('=');
        if (eq != std::string::npos) kv[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return kv;
}

double meta_num(const std::map<std::string, std::string>& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw DataError("table file missing metadata field '" + key + "'");
    return std::strtod(it->second.c_str(), nullptr);
}

void parse_rows(std::istream& in, std::vector<double>& alphas, std::vector<double>& values) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("alpha,N", 0) != 0)
        throw DataError("table file missing 'alpha,N' header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw DataError("malformed table row: " + line);
        alphas.push_back(std::strtod(line.substr(0, comma).c_str(), nullptr));
        values.push_back(std::strtod(line.substr(comma + 1).c_str(), nullptr));
    }
    if (alphas.size() < 2) throw DataError("table file has fewer than two rows");
    for (std::size_t i = 0; i + 1 < alphas.size(); ++i)
        if (!(alphas[i] < alphas[i + 1]))
            throw DataError("table file rows are not in increasing alpha order");
}

} // namespace

std::string table_to_csv(const RatioTable& table) {
    std::ostringstream out;
    out << "# qcv-ratio-table spec=" << table.spec.name << " a=" << fmt17(table.spec.tail.a)
        << " b=" << fmt17(table.spec.tail.b) << " d=" << fmt17(table.spec.central_d)
        << " lo=" << fmt17(table.alphas.front()) << " hi=" << fmt17(table.alphas.back())
        << " step=" << fmt17(table.step) << " cfg=" << table.cfg_digest
        << " direction=" << (table.decreasing ? "decreasing" : "increasing") << "\n";
    out << "alpha,N\n";
    for (std::size_t i = 0; i < table.alphas.size(); ++i)
        out << fmt17(table.alphas[i]) << ',' << fmt17(table.values[i]) << "\n";
    return out.str();
}

RatioTable table_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string meta;
    if (!std::getline(in, meta) || meta.empty() || meta[0] != '#')
        throw DataError("table file missing '#' metadata line");
    const auto kv = parse_meta(meta.substr(1));
    if (kv.find("spec") == kv.end()) throw DataError("table file missing spec name");

    RatioSpec spec{QuantileSplit(meta_num(kv, "a"), meta_num(kv, "b")), meta_num(kv, "d"),
                   kv.at("spec")};
    RatioTable table{spec, {}, {}, true, meta_num(kv, "step"),
                     kv.count("cfg") ? kv.at("cfg") : ""};
    parse_rows(in, table.alphas, table.values);
    auto dir = kv.find("direction");
    table.decreasing = dir == kv.end() || dir->second == "decreasing";
    return table;
}

std::string nu_table_to_csv(const bench::NuTable& table) {
    std::ostringstream out;
    out << "# qcv-ratio-table estimator=mcculloch lo=" << fmt17(table.alphas.front())
        << " hi=" << fmt17(table.alphas.back()) << " step=" << fmt17(table.step)
        << " cfg=" << table.cfg_digest << " direction=decreasing\n";
    out << "alpha,N\n";
    for (std::size_t i = 0; i < table.alphas.size(); ++i)
        out << fmt17(table.alphas[i]) << ',' << fmt17(table.nus[i]) << "\n";
    return out.str();
}

bench::NuTable nu_table_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string meta;
    if (!std::getline(in, meta) || meta.empty() || meta[0] != '#')
        throw DataError("table file missing '#' metadata line");
    const auto kv = parse_meta(meta.substr(1));
    if (kv.find("estimator") == kv.end() || kv.at("estimator") != "mcculloch")
        throw DataError("not a mcculloch table file");
    bench::NuTable table;
    table.step = meta_num(kv, "step");
    table.cfg_digest = kv.count("cfg") ? kv.at("cfg") : "";
    parse_rows(in, table.alphas, table.nus);
    return table;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp.string());
        out << text;
    }
    fs::rename(tmp, path);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

TableStore::TableStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (dir_.empty()) {
        if (const char* env = std::getenv("STABFIT_TABLE_DIR"); env && *env)
            dir_ = env;
        else
            dir_ = ".stabfit-tables";
    }
}

std::filesystem::path TableStore::ratio_path(const RatioSpec& spec, double lo, double hi,
                                             double step,
                                             const stable::IntegrationConfig& cfg) const {
    std::ostringstream name;
    name << "ratio_" << spec.name << '_' << fmt17(spec.tail.a) << '_' << fmt17(spec.tail.b)
         << '_' << fmt17(spec.central_d) << '_' << fmt17(lo) << '_' << fmt17(hi) << '_'
         << fmt17(step) << '_' << cfg.digest() << ".csv";
    return dir_ / name.str();
}

std::filesystem::path TableStore::nu_path(double lo, double hi, double step,
                                          const stable::IntegrationConfig& cfg) const {
    std::ostringstream name;
    name << "nu_mcculloch_" << fmt17(lo) << '_' << fmt17(hi) << '_' << fmt17(step) << '_'
         << cfg.digest() << ".csv";
    return dir_ / name.str();
}

RatioTable TableStore::ratio_table(const RatioSpec& spec, double lo, double hi, double step,
                                   const stable::IntegrationConfig& cfg, int threads) {
    const auto path = ratio_path(spec, lo, hi, step, cfg);
    if (std::filesystem::exists(path)) {
        try {
            RatioTable t = table_from_csv(read_text_file(path));
            if (t.cfg_digest == cfg.digest() && t.alphas.size() >= 2) return t;
        } catch (const Error&) {
            // fall through and rebuild
        }
    }
    RatioTable t = build_table(spec, lo, hi, step, cfg, threads);
    write_text_file(path, table_to_csv(t));
    return t;
}

bench::NuTable TableStore::nu_table(double lo, double hi, double step,
                                    const stable::IntegrationConfig& cfg, int threads) {
    const auto path = nu_path(lo, hi, step, cfg);
    if (std::filesystem::exists(path)) {
        try {
            bench::NuTable t = nu_table_from_csv(read_text_file(path));
            if (t.cfg_digest == cfg.digest() && t.alphas.size() >= 2) return t;
        } catch (const Error&) {
        }
    }
    bench::NuTable t = bench::build_nu_table(lo, hi, step, cfg, threads);
    write_text_file(path, nu_table_to_csv(t));
    return t;
}

} // namespace qcv
