#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace qcv::stable {

/// Parameters of an alpha-stable law in the continuous ("0") parametrization:
/// stability index alpha in (0,2], skewness beta in [-1,1], scale c > 0 and
/// location mu. alpha = 2 is Gaussian with variance 2 c^2 (beta inert);
/// alpha = 1, beta = 0 is Cauchy.
struct StableParams {
    double alpha;
    double beta;
    double scale;
    double location;

    StableParams(double alpha_, double beta_ = 0.0, double scale_ = 1.0,
                 double location_ = 0.0);
};

/// Knobs of the numeric engine behind pdf/cdf/quantile for the symmetric law.
struct IntegrationConfig {
    /// Trapezoid spacing, used both for the Fourier t-integral and for
    /// quantile-domain p-integrals.
    double step = 1e-3;
    /// Hard cap on the upper limit of the t-integral. The effective limit is
    /// the point where the exp(-t^alpha) envelope falls below 1e-12; the cap
    /// exists so pathological alpha fails loudly instead of looping.
    double truncation = 2000.0;
    /// Quantile level beyond which quantile() returns the closed-form tail
    /// asymptote instead of inverting the CDF.
    double tail_switch_p = 0.9995;

    void validate() const;
    /// Hex digest of the three fields, used to key cached tables.
    std::string digest() const;
};

/// Power-tail constants of the symmetric law with alpha in (0,2):
/// P[X > x] ~ c_alpha x^-alpha and Q(p) ~ c_bar_alpha (1-p)^(-1/alpha).
struct TailConstants {
    double c_alpha;
    double c_bar_alpha; // = c_alpha^(1/alpha)
};

TailConstants tail_constants(double alpha);

/// Leading-order upper quantile, valid for alpha in (0,2) and p in (0.5,1).
double tail_quantile_approx(double alpha, double p);

/// Characteristic function, both the generic and the alpha = 1 branch.
std::complex<double> char_function(const StableParams& params, double u);

/// Density, CDF and quantile of the standardized symmetric law S(alpha,0,1,0).
/// Closed forms for alpha in {1,2}; numeric profile otherwise.
double pdf(double alpha, double x, const IntegrationConfig& cfg = {});
double cdf(double alpha, double x, const IntegrationConfig& cfg = {});
double quantile(double alpha, double p, const IntegrationConfig& cfg = {});

/// i.i.d. draws via the Chambers-Mallows-Stuck transform, shifted to the
/// 0-parametrization. Deterministic in (params, n, seed).
std::vector<double> sample(const StableParams& params, std::size_t n,
                           std::uint64_t seed);

/// Standard normal helpers shared across the project.
double std_normal_pdf(double z);
double std_normal_cdf(double z);
double std_normal_quantile(double p);

/// Two-term power-tail expansions of density and survival for x far in the
/// tail (alpha in (0,2)).
double tail_pdf_series(double alpha, double x);
double tail_sf_series(double alpha, double x);

namespace detail {
/// Density of the standardized symmetric law on a batch of nonnegative
/// abscissae by shared-envelope trapezoid with step h; the envelope is cut
/// where exp(-t^alpha) < exp(-env_log_cut), capped at t <= trunc_cap.
std::vector<double> pdf_quadrature_grid(double alpha, const std::vector<double>& xs,
                                        double h, double env_log_cut, double trunc_cap);
/// Abscissa where the trapezoid's aliasing error and the two-term tail
/// series error cross; the cheapest switch point between the two methods.
double series_handoff(double alpha, double h);
} // namespace detail

/// Evaluated distribution functions for one (alpha, cfg) pair. Immutable
/// after construction and shared between callers; obtain through get().
class SymmetricStable {
public:
    SymmetricStable(double alpha, const IntegrationConfig& cfg);

    double alpha() const { return alpha_; }
    double pdf(double x) const;
    double cdf(double x) const;
    double quantile(double p) const;

    /// Process-wide cache keyed by (alpha, cfg).
    static std::shared_ptr<const SymmetricStable> get(double alpha,
                                                      const IntegrationConfig& cfg);

private:
    void build_profile(const IntegrationConfig& cfg);
    double pdf_abs(double x) const;      // x >= 0
    double cdf_abs(double x) const;      // x >= 0
    double grid_pdf_interp(double x) const;
    double grid_cdf_interp(double x) const;

    double alpha_ = 0;
    double tail_switch_p_ = 0;
    int kind_ = 0;                       // 0 generic, 1 cauchy, 2 gaussian
    double x_series_ = 0;                // series handoff abscissa
    std::vector<double> x_, f_, F_;      // profile grid (generic kind only)
    std::size_t core_count_ = 0;         // nodes in the uniform core section
    double core_step_ = 0;
};

} // namespace qcv::stable
