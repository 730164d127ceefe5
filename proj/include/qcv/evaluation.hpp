#pragma once

#include "qcv/benchmarks.hpp"
#include "qcv/qcv.hpp"
#include "qcv/types.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace qcv {
class TableStore;
}

namespace qcv::eval {

/// Estimators wired to their prebuilt tables; the single dispatch point used
/// by the Monte Carlo harness, the bootstrap and the CLI.
struct EstimatorSuite {
    std::shared_ptr<const RatioTable> n1;
    std::shared_ptr<const RatioTable> n2;
    std::shared_ptr<const bench::NuTable> nu;
    std::shared_ptr<const bench::PdfTable> pdf;
    bench::RegConfig reg = bench::RegConfig::defaults();
    bench::MleConfig mle = {};

    EstimateResult estimate(const std::string& method, std::span<const double> data) const;
    static bool known_method(const std::string& method);
};

struct MonteCarloConfig {
    int replications = 1000;                       // k
    std::vector<int> sample_sizes = {1000};        // n
    std::vector<double> alphas;
    std::vector<double> betas = {0.0};
    std::vector<std::string> methods;
    std::uint64_t master_seed = 0;
    int threads = 0;

    void validate() const;
};

/// Root mean squared deviation of the estimates from the true value.
double rmse(double alpha_true, std::span<const double> estimates);

/// One emitted report row; column order is fixed by the CSV contract.
struct ReportRow {
    double alpha = 0;
    double beta = 0;
    int n = 0;
    std::string method;
    std::string metric;
    double value = 0;
    long failures = 0;
};

struct Report {
    std::vector<ReportRow> rows;
    std::string to_csv() const;
    std::string to_json() const;
};

/// RMSE per (alpha, n, method) on symmetric samples. Replication j of a cell
/// draws with a seed derived from (master_seed, alpha, beta, n, j), so any
/// worker count produces identical reports.
Report run_rmse_experiment(const MonteCarloConfig& cfg, const EstimatorSuite& suite);

/// Mean estimate per (alpha, beta) cell for each requested method.
struct BiasGrid {
    std::vector<double> alphas;
    std::vector<double> betas;
    std::vector<std::string> methods;
    int sample_size = 0;
    int replications = 0;
    // mean[m][ia*betas.size()+ib], count/failures alike
    std::vector<std::vector<double>> mean;
    std::vector<std::vector<long>> count;
    std::vector<std::vector<long>> failures;

    double cell_mean(std::size_t m, std::size_t ia, std::size_t ib) const {
        return mean[m][ia * betas.size() + ib];
    }
};

BiasGrid run_bias_grid(const MonteCarloConfig& cfg, const EstimatorSuite& suite);

/// |mean(alpha,beta) - mean(alpha,0)| per cell and method; requires the
/// beta = 0 column.
std::vector<std::vector<double>> robustness_diff(const BiasGrid& grid);

/// Rows for both the means and the absolute differences of a bias grid.
Report bias_grid_report(const BiasGrid& grid);

/// Percentile bootstrap for one estimator on user data. Resamples whose
/// estimate fails are excluded; more than 5% exclusions aborts.
BootstrapResult bootstrap_ci(std::span<const double> data, const std::string& method,
                             const EstimatorSuite& suite, int resamples = 10000,
                             double level = 0.95, std::uint64_t seed = 1,
                             int threads = 0);

/// Seed for replication j of a Monte Carlo cell.
std::uint64_t replication_seed(std::uint64_t master, double alpha, double beta, int n,
                               int j);

/// Build (or load from the store) every table a suite needs. The ratio
/// tables span [ratio_lo, ratio_hi]; the nu table always spans [0.5, 2].
EstimatorSuite make_suite(TableStore& store, double ratio_lo = 0.6,
                          double ratio_hi = 2.0, double step = 0.0025,
                          const stable::IntegrationConfig& cfg = {}, int threads = 0);

} // namespace qcv::eval
