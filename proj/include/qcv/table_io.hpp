#pragma once

#include "qcv/qcv.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace qcv::bench {
struct NuTable; // from benchmarks.hpp
}

namespace qcv {

/// Serialize a ratio table in the cache CSV format: one '#' metadata line,
/// an "alpha,N" header, then rows in increasing alpha with 17 significant
/// digits so values round-trip bit-exactly.
std::string table_to_csv(const RatioTable& table);
RatioTable table_from_csv(const std::string& text);

std::string nu_table_to_csv(const bench::NuTable& table);
bench::NuTable nu_table_from_csv(const std::string& text);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

/// Directory-backed cache of ratio and nu tables keyed by spec, range, step
/// and integration-config digest. Tables are rebuilt when a cache entry is
/// missing or carries a different digest.
class TableStore {
public:
    /// dir empty: use $STABFIT_TABLE_DIR, else ".stabfit-tables".
    explicit TableStore(std::filesystem::path dir = {});

    const std::filesystem::path& dir() const { return dir_; }

    std::filesystem::path ratio_path(const RatioSpec& spec, double lo, double hi,
                                     double step, const stable::IntegrationConfig& cfg) const;
    std::filesystem::path nu_path(double lo, double hi, double step,
                                  const stable::IntegrationConfig& cfg) const;

    RatioTable ratio_table(const RatioSpec& spec, double lo, double hi,
                           double step = 0.0025,
                           const stable::IntegrationConfig& cfg = {}, int threads = 0);
    bench::NuTable nu_table(double lo, double hi, double step = 0.0025,
                            const stable::IntegrationConfig& cfg = {}, int threads = 0);

private:
    std::filesystem::path dir_;
};

} // namespace qcv
