#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace qcv {

/// Percentile bootstrap confidence interval for one estimate.
struct BootstrapResult {
    double point_estimate = 0;
    double ci_low = 0;
    double ci_high = 0;
    double level = 0.95;
    int resamples = 0;      // B
    int failures = 0;       // resamples excluded because the estimator failed
};

/// One tail-index estimate. clamped marks that the plug-in inversion hit a
/// table boundary (typically the alpha = 2 end).
struct EstimateResult {
    double alpha_hat = 0;
    std::string method;
    bool clamped = false;
    std::optional<BootstrapResult> ci;
};

} // namespace qcv
