#include "qcv/evaluation.hpp"

#include "qcv/detail/parallel.hpp"
#include "qcv/detail/rng.hpp"
#include "qcv/errors.hpp"
#include "qcv/table_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace qcv::eval {

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const std::vector<std::string>& method_names() {
    static const std::vector<std::string> names = {"n1", "n2", "mch", "reg", "mle", "m1", "m2"};
    return names;
}

} // namespace

bool EstimatorSuite::known_method(const std::string& method) {
    const auto& names = method_names();
    return std::find(names.begin(), names.end(), method) != names.end();
}

EstimateResult EstimatorSuite::estimate(const std::string& method,
                                        std::span<const double> data) const {
    if (method == "n1") {
        if (!n1) throw InvalidParams("estimator suite has no n1 table");
        return estimate_alpha(data, n1->spec, *n1);
    }
    if (method == "n2") {
        if (!n2) throw InvalidParams("estimator suite has no n2 table");
        return estimate_alpha(data, n2->spec, *n2);
    }
    if (method == "mch") {
        if (!nu) throw InvalidParams("estimator suite has no nu table");
        return bench::mcculloch_estimate(data, *nu);
    }
    if (method == "reg") return bench::reg_estimate(data, reg);
    if (method == "mle") return bench::mle_estimate(data, mle, pdf.get());
    if (method == "m1") {
        if (!n1) throw InvalidParams("estimator suite has no n1 table");
        return bench::ensemble_estimate(data, bench::Ensemble::M1, *n1, reg);
    }
    if (method == "m2") {
        if (!n2) throw InvalidParams("estimator suite has no n2 table");
        return bench::ensemble_estimate(data, bench::Ensemble::M2, *n2, reg);
    }
    throw InvalidParams("unknown estimation method '" + method + "'");
}

void MonteCarloConfig::validate() const {
    if (replications < 1) throw InvalidParams("monte carlo needs k >= 1");
    if (sample_sizes.empty()) throw InvalidParams("monte carlo needs sample sizes");
    for (int n : sample_sizes)
        if (n < 50) throw InvalidParams("monte carlo sample sizes must be >= 50");
    if (alphas.empty()) throw InvalidParams("monte carlo needs alphas");
    if (betas.empty()) throw InvalidParams("monte carlo needs betas");
    if (methods.empty()) throw InvalidParams("monte carlo needs methods");
    for (const auto& m : methods)
        if (!EstimatorSuite::known_method(m))
            throw InvalidParams("unknown estimation method '" + m + "'");
}

double rmse(double alpha_true, std::span<const double> estimates) {
    if (estimates.empty()) throw InvalidParams("rmse of an empty estimate set");
    double ss = 0.0;
    for (const double e : estimates) {
        const double d = e - alpha_true;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(estimates.size()));
}

std::uint64_t replication_seed(std::uint64_t master, double alpha, double beta, int n,
                               int j) {
    using qcv::detail::bits_of;
    using qcv::detail::seed_mix;
    std::uint64_t s = seed_mix(master, bits_of(alpha));
    s = seed_mix(s, bits_of(beta));
    s = seed_mix(s, static_cast<std::uint64_t>(n));
    return seed_mix(s, static_cast<std::uint64_t>(j));
}

std::string Report::to_csv() const {
    std::ostringstream out;
    out << "alpha,beta,n,method,metric,value,failures\n";
    for (const auto& r : rows)
        out << fmt17(r.alpha) << ',' << fmt17(r.beta) << ',' << r.n << ',' << r.method << ','
            << r.metric << ',' << fmt17(r.value) << ',' << r.failures << "\n";
    return out.str();
}

std::string Report::to_json() const {
    std::ostringstream out;
    out << "[";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        out << (i ? ",\n " : "\n ") << "{\"alpha\":" << fmt17(r.alpha)
            << ",\"beta\":" << fmt17(r.beta) << ",\"n\":" << r.n << ",\"method\":\""
            << r.method << "\",\"metric\":\"" << r.metric << "\",\"value\":"
            << (std::isfinite(r.value) ? fmt17(r.value) : "null")
            << ",\"failures\":" << r.failures << "}";
    }
    out << "\n]\n";
    return out.str();
}

Report run_rmse_experiment(const MonteCarloConfig& cfg, const EstimatorSuite& suite) {
    cfg.validate();
    const std::size_t k = static_cast<std::size_t>(cfg.replications);
    const std::size_t n_methods = cfg.methods.size();

    Report report;
    for (const double alpha : cfg.alphas) {
        for (const int n : cfg.sample_sizes) {
            // estimates[j * n_methods + m]; NaN marks a failed estimate
            std::vector<double> est(k * n_methods,
                                    std::numeric_limits<double>::quiet_NaN());
            qcv::detail::parallel_for(
                k,
                [&](std::size_t j) {
                    const std::uint64_t seed =
                        replication_seed(cfg.master_seed, alpha, 0.0, n, static_cast<int>(j));
                    const std::vector<double> xs = stable::sample(
                        stable::StableParams(alpha, 0.0, 1.0, 0.0),
                        static_cast<std::size_t>(n), seed);
                    for (std::size_t m = 0; m < n_methods; ++m) {
                        try {
                            est[j * n_methods + m] =
                                suite.estimate(cfg.methods[m], xs).alpha_hat;
                        } catch (const Error&) {
                            // counted below
                        }
                    }
                },
                cfg.threads);

            for (std::size_t m = 0; m < n_methods; ++m) {
                std::vector<double> good;
                good.reserve(k);
                long failures = 0;
                for (std::size_t j = 0; j < k; ++j) {
                    const double v = est[j * n_methods + m];
                    if (std::isnan(v)) ++failures; else good.push_back(v);
                }
                ReportRow row;
                row.alpha = alpha;
                row.beta = 0.0;
                row.n = n;
                row.method = cfg.methods[m];
                row.metric = "rmse";
                row.value = good.empty() ? std::numeric_limits<double>::quiet_NaN()
                                         : rmse(alpha, good);
                row.failures = failures;
                report.rows.push_back(std::move(row));
            }
        }
    }
    return report;
}

BiasGrid run_bias_grid(const MonteCarloConfig& cfg, const EstimatorSuite& suite) {
    cfg.validate();
    if (cfg.sample_sizes.size() != 1)
        throw InvalidParams("bias grid runs with a single sample size");
    const int n = cfg.sample_sizes.front();
    const std::size_t k = static_cast<std::size_t>(cfg.replications);
    const std::size_t n_methods = cfg.methods.size();
    const std::size_t na = cfg.alphas.size(), nb = cfg.betas.size();

    BiasGrid grid;
    grid.alphas = cfg.alphas;
    grid.betas = cfg.betas;
    grid.methods = cfg.methods;
    grid.sample_size = n;
    grid.replications = cfg.replications;
    grid.mean.assign(n_methods, std::vector<double>(na * nb, 0.0));
    grid.count.assign(n_methods, std::vector<long>(na * nb, 0));
    grid.failures.assign(n_methods, std::vector<long>(na * nb, 0));

    const std::size_t cells = na * nb;
    std::vector<double> est(cells * k * n_methods,
                            std::numeric_limits<double>::quiet_NaN());
    qcv::detail::parallel_for(
        cells * k,
        [&](std::size_t task) {
            const std::size_t cell = task / k;
            const std::size_t j = task % k;
            const double alpha = cfg.alphas[cell / nb];
            const double beta = cfg.betas[cell % nb];
            const std::uint64_t seed =
                replication_seed(cfg.master_seed, alpha, beta, n, static_cast<int>(j));
            const std::vector<double> xs =
                stable::sample(stable::StableParams(alpha, beta, 1.0, 0.0),
                               static_cast<std::size_t>(n), seed);
            for (std::size_t m = 0; m < n_methods; ++m) {
                try {
                    est[(cell * k + j) * n_methods + m] =
                        suite.estimate(cfg.methods[m], xs).alpha_hat;
                } catch (const Error&) {
                }
            }
        },
        cfg.threads);

    for (std::size_t cell = 0; cell < cells; ++cell) {
        for (std::size_t m = 0; m < n_methods; ++m) {
            double sum = 0.0;
            long count = 0, failures = 0;
            for (std::size_t j = 0; j < k; ++j) {
                const double v = est[(cell * k + j) * n_methods + m];
                if (std::isnan(v)) ++failures;
                else { sum += v; ++count; }
            }
            grid.mean[m][cell] = count ? sum / static_cast<double>(count)
                                       : std::numeric_limits<double>::quiet_NaN();
            grid.count[m][cell] = count;
            grid.failures[m][cell] = failures;
        }
    }
    return grid;
}

std::vector<std::vector<double>> robustness_diff(const BiasGrid& grid) {
    std::size_t ib0 = grid.betas.size();
    for (std::size_t ib = 0; ib < grid.betas.size(); ++ib)
        if (grid.betas[ib] == 0.0) ib0 = ib;
    if (ib0 == grid.betas.size())
        throw InvalidParams("robustness difference needs the beta = 0 column");

    std::vector<std::vector<double>> diff(grid.methods.size(),
                                          std::vector<double>(grid.alphas.size() *
                                                              grid.betas.size(), 0.0));
    for (std::size_t m = 0; m < grid.methods.size(); ++m)
        for (std::size_t ia = 0; ia < grid.alphas.size(); ++ia) {
            const double base = grid.cell_mean(m, ia, ib0);
            for (std::size_t ib = 0; ib < grid.betas.size(); ++ib)
                diff[m][ia * grid.betas.size() + ib] =
                    std::fabs(grid.cell_mean(m, ia, ib) - base);
        }
    return diff;
}

Report bias_grid_report(const BiasGrid& grid) {
    Report report;
    const auto diff = robustness_diff(grid);
    for (std::size_t m = 0; m < grid.methods.size(); ++m)
        for (std::size_t ia = 0; ia < grid.alphas.size(); ++ia)
            for (std::size_t ib = 0; ib < grid.betas.size(); ++ib) {
                const std::size_t cell = ia * grid.betas.size() + ib;
                ReportRow row;
                row.alpha = grid.alphas[ia];
                row.beta = grid.betas[ib];
                row.n = grid.sample_size;
                row.method = grid.methods[m];
                row.metric = "mean_alpha_hat";
                row.value = grid.mean[m][cell];
                row.failures = grid.failures[m][cell];
                report.rows.push_back(row);
                row.metric = "abs_diff_vs_symmetric";
                row.value = diff[m][cell];
                report.rows.push_back(row);
            }
    return report;
}

EstimatorSuite make_suite(TableStore& store, double ratio_lo, double ratio_hi, double step,
                          const stable::IntegrationConfig& cfg, int threads) {
    EstimatorSuite suite;
    suite.n1 = std::make_shared<const RatioTable>(
        store.ratio_table(n1_spec(), ratio_lo, ratio_hi, step, cfg, threads));
    suite.n2 = std::make_shared<const RatioTable>(
        store.ratio_table(n2_spec(), ratio_lo, ratio_hi, step, cfg, threads));
    suite.nu = std::make_shared<const bench::NuTable>(
        store.nu_table(0.5, 2.0, step, cfg, threads));
    suite.pdf = bench::PdfTable::get(cfg);
    suite.mle.pdf_cfg = cfg;
    // the reference tables were produced by the plain origin fit on raw
    // unit-scale samples
    suite.reg = bench::RegConfig::plain_fit();
    return suite;
}

BootstrapResult bootstrap_ci(std::span<const double> data, const std::string& method,
                             const EstimatorSuite& suite, int resamples, double level,
                             std::uint64_t seed, int threads) {
    if (resamples < 100) throw InvalidParams("bootstrap needs at least 100 resamples");
    if (!(level > 0.0) || !(level < 1.0)) throw InvalidParams("bootstrap level in (0,1)");
    if (data.empty()) throw DataError("bootstrap of an empty sample");

    BootstrapResult result;
    result.level = level;
    result.resamples = resamples;
    result.point_estimate = suite.estimate(method, data).alpha_hat;

    const std::size_t n = data.size();
    const auto B = static_cast<std::size_t>(resamples);
    std::vector<double> est(B, std::numeric_limits<double>::quiet_NaN());
    qcv::detail::parallel_for(
        B,
        [&](std::size_t b) {
            qcv::detail::Rng rng(qcv::detail::seed_mix(seed, b));
            std::vector<double> resample(n);
            for (auto& v : resample) v = data[rng.uniform_below(n)];
            try {
                est[b] = suite.estimate(method, resample).alpha_hat;
            } catch (const Error&) {
            }
        },
        threads);

    std::vector<double> good;
    good.reserve(B);
    for (const double v : est)
        if (!std::isnan(v)) good.push_back(v);
    result.failures = static_cast<int>(B - good.size());
    if (static_cast<double>(result.failures) > 0.05 * static_cast<double>(B))
        throw NumericError("bootstrap aborted: more than 5% of resamples failed");
    std::sort(good.begin(), good.end());
    result.ci_low = bench::sample_quantile(good, (1.0 - level) / 2.0);
    result.ci_high = bench::sample_quantile(good, 1.0 - (1.0 - level) / 2.0);
    return result;
}

} // namespace qcv::eval
