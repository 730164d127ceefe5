#pragma once

#include "qcv/stable.hpp"
#include "qcv/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace qcv {

/// Quantile window 0 < a < b < 1.
struct QuantileSplit {
    double a;
    double b;
    QuantileSplit(double a_, double b_);
};

/// Conditional variance value together with the window it was taken on.
struct QcvValue {
    double value;
    QuantileSplit window;
};

/// A ratio statistic is defined by the tail window (a,b) and the central
/// window (d, 1-d); the mirrored tail (1-b, 1-a) is implied.
struct RatioSpec {
    QuantileSplit tail;
    double central_d;
    std::string name;

    RatioSpec(QuantileSplit tail_, double central_d_, std::string name_ = "custom");
};

/// The two shipped ratio statistics.
const RatioSpec& n1_spec(); // (0.015, 0.25, 0.25), general-purpose
const RatioSpec& n2_spec(); // (0.01, 0.17, 0.1), near-Gaussian

/// Variance of the sorted sample restricted to order statistics
/// floor(n a)+1 .. floor(n b) (1-based), divisor = window size.
QcvValue sample_qcv(std::span<const double> data, double a, double b);

/// Conditional variance of S(alpha,0,1,0) between its a- and b-quantiles,
/// computed from the quantile representation by endpoint-corrected trapezoid
/// with spacing cfg.step.
QcvValue theoretical_qcv(double alpha, const QuantileSplit& split,
                         const stable::IntegrationConfig& cfg = {});

/// Closed forms for the two analytic cases (standard symmetric laws with
/// alpha = 2 and alpha = 1; the alpha = 2 law has variance 2).
QcvValue gaussian_qcv_closed(const QuantileSplit& split);
QcvValue cauchy_qcv_closed(const QuantileSplit& split);

/// Ratio 2 sigma^2(a,b) / sigma^2(d,1-d) of theoretical conditional variances.
double ratio_value(double alpha, const RatioSpec& spec,
                   const stable::IntegrationConfig& cfg = {});

/// Sample ratio (sigma^2(a,b) + sigma^2(1-b,1-a)) / sigma^2(d,1-d) on one
/// shared sort of the data. Location and scale invariant.
double sample_ratio(std::span<const double> data, const RatioSpec& spec);

/// Precomputed strictly monotone map alpha -> ratio value, used to invert
/// sample ratios into tail-index estimates.
struct RatioTable {
    RatioSpec spec;
    std::vector<double> alphas;   // strictly increasing
    std::vector<double> values;   // strictly monotone, direction recorded
    bool decreasing = true;
    double step = 0;
    std::string cfg_digest;
};

/// Evaluate the ratio on a uniform alpha grid. Throws NumericError if the
/// resulting grid is not strictly monotone. Grid points evaluate in parallel
/// (threads <= 0 means hardware concurrency).
RatioTable build_table(const RatioSpec& spec, double alpha_lo, double alpha_hi,
                       double step = 0.0025,
                       const stable::IntegrationConfig& cfg = {},
                       int threads = 0);

/// Piecewise-linear inversion of the table at a sample ratio value. Values
/// outside the table range clamp to the nearest endpoint with the flag set.
EstimateResult invert(const RatioTable& table, double n_hat);

/// sample_ratio then invert.
EstimateResult estimate_alpha(std::span<const double> data, const RatioSpec& spec,
                              const RatioTable& table);

namespace detail {
/// Window variance on already sorted data; shared by sample_qcv/sample_ratio.
double sorted_window_variance(std::span<const double> sorted, double a, double b);
/// floor(n p) with a tiny nudge so decimal-entered fractions hit the
/// mathematically intended integer.
std::size_t window_floor(std::size_t n, double p);
} // namespace detail

} // namespace qcv
