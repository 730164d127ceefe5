#pragma once

#include "qcv/qcv.hpp"
#include "qcv/stable.hpp"
#include "qcv/types.hpp"

#include <complex>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace qcv::bench {

/// Tabulated quantile-spread statistic nu(alpha), strictly decreasing.
struct NuTable {
    std::vector<double> alphas;
    std::vector<double> nus;
    double step = 0;
    std::string cfg_digest;
};

/// nu(alpha) = (Q(0.95) - Q(0.05)) / (Q(0.75) - Q(0.25)).
double mcculloch_nu(double alpha, const stable::IntegrationConfig& cfg = {});

NuTable build_nu_table(double alpha_lo = 0.5, double alpha_hi = 2.0,
                       double step = 0.0025,
                       const stable::IntegrationConfig& cfg = {}, int threads = 0);

/// Quantile-spread estimate: sample nu inverted through the table with the
/// same interpolation and clamping contract as the ratio tables.
EstimateResult mcculloch_estimate(std::span<const double> data, const NuTable& table);

/// Linear-interpolated sample quantile at position 1 + (n-1)p.
double sample_quantile(std::span<const double> sorted, double p);

/// (1/n) sum exp(i u X_j).
std::complex<double> sample_char_function(std::span<const double> data, double u);

struct RegConfig {
    std::vector<double> u_grid;   // positive, distinct
    bool fit_intercept = true;
    bool standardize = true;      // median/IQR normalization before the fit

    /// u_i = i pi / 25, i = 1..10, with intercept and standardization: the
    /// scale- and location-invariant mode for measured data.
    static RegConfig defaults();
    /// Pure log(-log) fit through the origin on the raw sample, the form the
    /// reference RMSE tables were generated with. Sensitive to the scale.
    static RegConfig plain_fit();
    void validate() const;
};

/// Log-log regression of the empirical characteristic-function modulus.
/// The slope is the tail-index estimate; values outside (0,2] are flagged,
/// not truncated.
EstimateResult reg_estimate(std::span<const double> data,
                            const RegConfig& cfg = RegConfig::defaults());

/// Slope/intercept of log(-log r_i) against log u_i; exposed so exact
/// characteristic-function values can be fed straight through in tests.
struct RegFit {
    double slope;
    double intercept;
};
RegFit reg_fit(std::span<const double> cf_modulus, std::span<const double> u_grid,
               bool fit_intercept);

/// Density table over an (alpha, x) lattice backing the likelihood search.
/// Columns build lazily and memoize; lookups interpolate cubically in both
/// coordinates.
class PdfTable {
public:
    explicit PdfTable(stable::IntegrationConfig cfg = {});

    double pdf(double alpha, double x) const;
    double alpha_lo() const { return alpha_lo_; }
    double alpha_hi() const { return alpha_hi_; }

    static std::shared_ptr<const PdfTable> get(const stable::IntegrationConfig& cfg = {});

private:
    void ensure_column(std::size_t idx) const;
    double column_value(std::size_t col, double ax) const;

    stable::IntegrationConfig cfg_;
    double alpha_lo_ = 0.5, alpha_hi_ = 2.0, alpha_step_ = 0.005;
    std::vector<double> xs_;
    std::size_t core_count_ = 0;
    double core_step_ = 0;
    mutable std::vector<std::vector<double>> cols_;
    mutable std::vector<std::unique_ptr<std::once_flag>> built_;
};

struct MleConfig {
    double alpha_lo = 0.5;
    double alpha_hi = 2.0;
    double tolerance = 1e-4;
    stable::IntegrationConfig pdf_cfg = {};
    /// Median/IQR affine normalization before the likelihood; keep off for
    /// unit-scale simulated data, on for raw measured data.
    bool standardize = false;

    void validate() const;
};

/// Golden-section maximizer in alpha of the scale-profiled log-likelihood
/// max_c sum_j log( f_alpha(X_j / c) / c ).
EstimateResult mle_estimate(std::span<const double> data, const MleConfig& cfg = {},
                            const PdfTable* table = nullptr);

/// Unit-scale log-likelihood at one alpha; exposed for dominance checks.
double log_likelihood(std::span<const double> data, double alpha, const PdfTable& table);

/// Log-likelihood at one alpha with the scale profiled out.
double profile_log_likelihood(std::span<const double> data, double alpha,
                              const PdfTable& table);

enum class Ensemble { M1, M2 };

/// Arithmetic mean of the ratio-statistic estimate (N1 for M1, N2 for M2)
/// and the regression estimate.
EstimateResult ensemble_estimate(std::span<const double> data, Ensemble which,
                                 const RatioTable& ratio_table,
                                 const RegConfig& reg_cfg = RegConfig::defaults());

/// Half the IQR reference used by the affine standardization, equal to
/// 2 Q(0.75) of the standardized symmetric law with alpha = 1.5.
inline constexpr double kIqrRefAlpha15 = 1.9378663541069443;

} // namespace qcv::bench
