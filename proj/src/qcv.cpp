#include "qcv/qcv.hpp"

#include "qcv/detail/parallel.hpp"
#include "qcv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qcv {

namespace {
constexpr double kPi = std::numbers::pi;
}

QuantileSplit::QuantileSplit(double a_, double b_) : a(a_), b(b_) {
    if (!(0.0 < a) || !(a < b) || !(b < 1.0))
        throw InvalidParams("quantile split needs 0 < a < b < 1");
}

RatioSpec::RatioSpec(QuantileSplit tail_, double central_d_, std::string name_)
    : tail(tail_), central_d(central_d_), name(std::move(name_)) {
    if (!(0.0 < central_d) || !(central_d < 0.5))
        throw InvalidParams("ratio spec needs 0 < d < 0.5");
}

const RatioSpec& n1_spec() {
    static const RatioSpec spec{QuantileSplit(0.015, 0.25), 0.25, "n1"};
    return spec;
}

const RatioSpec& n2_spec() {
    static const RatioSpec spec{QuantileSplit(0.01, 0.17), 0.1, "n2"};
    return spec;
}

namespace detail {

std::size_t window_floor(std::size_t n, double p) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * p + 1e-9));
}

double sorted_window_variance(std::span<const double> sorted, double a, double b) {
    const std::size_t n = sorted.size();
    const std::size_t i0 = window_floor(n, a);
    const std::size_t i1 = window_floor(n, b);
    if (i1 < i0 + 2)
        throw EstimationError("quantile window holds fewer than two order statistics");
    const std::size_t m = i1 - i0;
    double mean = 0.0;
    for (std::size_t i = i0; i < i1; ++i) mean += sorted[i];
    mean /= static_cast<double>(m);
    double ss = 0.0;
    for (std::size_t i = i0; i < i1; ++i) {
        const double d = sorted[i] - mean;
        ss += d * d;
    }
    return ss / static_cast<double>(m);
}

} // namespace detail

QcvValue sample_qcv(std::span<const double> data, double a, double b) {
    QuantileSplit split(a, b);
    if (data.size() < 2) throw DataError("sample_qcv needs at least two observations");
    std::vector<double> sorted(data.begin(), data.end());
    std::sort(sorted.begin(), sorted.end());
    return {detail::sorted_window_variance(sorted, a, b), split};
}

QcvValue theoretical_qcv(double alpha, const QuantileSplit& split,
                         const stable::IntegrationConfig& cfg) {
    cfg.validate();
    auto dist = stable::SymmetricStable::get(alpha, cfg);
    const double a = split.a, b = split.b;
    const std::size_t n = std::max<std::size_t>(
        8, static_cast<std::size_t>(std::ceil((b - a) / cfg.step)));
    const double h = (b - a) / static_cast<double>(n);

    double s1 = 0.0, s2 = 0.0;
    double qa = 0.0, qb = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        const double p = i == n ? b : a + h * static_cast<double>(i);
        const double q = dist->quantile(p);
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        s1 += w * q;
        s2 += w * q * q;
        if (i == 0) qa = q;
        if (i == n) qb = q;
    }
    double i1 = s1 * h, i2 = s2 * h;
    // Euler-Maclaurin endpoint correction; dQ/dp = 1/f(Q) can be enormous on
    // tail windows and the plain trapezoid would lose three digits there.
    const double fa = dist->pdf(qa), fb = dist->pdf(qb);
    if (fa > 1e-300 && fb > 1e-300) {
        i1 -= h * h / 12.0 * (1.0 / fb - 1.0 / fa);
        i2 -= h * h / 12.0 * (2.0 * qb / fb - 2.0 * qa / fa);
    }
    const double m1 = i1 / (b - a), m2 = i2 / (b - a);
    return {m2 - m1 * m1, split};
}

QcvValue gaussian_qcv_closed(const QuantileSplit& split) {
    // truncated variance of the variance-2 Gaussian on the quantile window
    const double za = stable::std_normal_quantile(split.a);
    const double zb = stable::std_normal_quantile(split.b);
    const double pa = stable::std_normal_pdf(za);
    const double pb = stable::std_normal_pdf(zb);
    const double w = split.b - split.a;
    const double v = 1.0 + (za * pa - zb * pb) / w - ((pa - pb) / w) * ((pa - pb) / w);
    return {2.0 * v, split};
}

QcvValue cauchy_qcv_closed(const QuantileSplit& split) {
    const double qa = std::tan(kPi * (split.a - 0.5));
    const double qb = std::tan(kPi * (split.b - 0.5));
    const double D = std::atan(qb) - std::atan(qa); // = pi (b - a)
    const double m2 = (qb - qa) / D - 1.0;
    const double lg = std::log((1.0 + qb * qb) / (1.0 + qa * qa));
    return {m2 - lg * lg / (4.0 * D * D), split};
}

double ratio_value(double alpha, const RatioSpec& spec,
                   const stable::IntegrationConfig& cfg) {
    const double num = theoretical_qcv(alpha, spec.tail, cfg).value;
    const double den =
        theoretical_qcv(alpha, QuantileSplit(spec.central_d, 1.0 - spec.central_d), cfg).value;
    if (!(den > 0.0)) throw EstimationError("central window variance is zero");
    return 2.0 * num / den;
}

double sample_ratio(std::span<const double> data, const RatioSpec& spec) {
    if (data.size() < 2) throw DataError("sample_ratio needs at least two observations");
    std::vector<double> sorted(data.begin(), data.end());
    std::sort(sorted.begin(), sorted.end());
    const double a = spec.tail.a, b = spec.tail.b, d = spec.central_d;
    const double t1 = detail::sorted_window_variance(sorted, a, b);
    const double t2 = detail::sorted_window_variance(sorted, 1.0 - b, 1.0 - a);
    const double c = detail::sorted_window_variance(sorted, d, 1.0 - d);
    if (!(c > 0.0)) throw EstimationError("central window variance is zero");
    return (t1 + t2) / c;
}

RatioTable build_table(const RatioSpec& spec, double alpha_lo, double alpha_hi,
                       double step, const stable::IntegrationConfig& cfg, int threads) {
    if (!(0.0 < alpha_lo) || !(alpha_lo < alpha_hi) || !(alpha_hi <= 2.0))
        throw InvalidParams("table range needs 0 < lo < hi <= 2");
    if (!(step > 0.0) || step > 0.0025 + 1e-12)
        throw InvalidParams("table grid spacing must be positive and <= 0.0025");
    cfg.validate();

    const auto count = static_cast<std::size_t>(std::llround((alpha_hi - alpha_lo) / step));
    if (count < 2) throw InvalidParams("table range shorter than two grid steps");

    RatioTable table{spec, {}, {}, true, step, cfg.digest()};
    table.alphas.resize(count + 1);
    table.values.resize(count + 1);
    for (std::size_t i = 0; i <= count; ++i)
        table.alphas[i] =
            i == count ? alpha_hi : alpha_lo + step * static_cast<double>(i);

    qcv::detail::parallel_for(
        count + 1,
        [&](std::size_t i) { table.values[i] = ratio_value(table.alphas[i], spec, cfg); },
        threads);

    const bool decreasing = table.values.front() > table.values.back();
    for (std::size_t i = 0; i + 1 <= count; ++i) {
        const bool ok = decreasing ? table.values[i] > table.values[i + 1]
                                   : table.values[i] < table.values[i + 1];
        if (!ok)
            throw NumericError("ratio table for spec '" + spec.name +
                               "' is not strictly monotone near alpha = " +
                               std::to_string(table.alphas[i]));
    }
    table.decreasing = decreasing;
    return table;
}

EstimateResult invert(const RatioTable& table, double n_hat) {
    if (table.alphas.size() < 2) throw InvalidParams("ratio table has fewer than two rows");
    if (!std::isfinite(n_hat)) throw EstimationError("sample ratio is not finite");
    const auto& v = table.values;
    const auto& al = table.alphas;
    EstimateResult r;
    r.method = table.spec.name;

    const double top = table.decreasing ? v.front() : v.back();
    const double bot = table.decreasing ? v.back() : v.front();
    if (n_hat >= top) {
        r.alpha_hat = table.decreasing ? al.front() : al.back();
        r.clamped = true;
        return r;
    }
    if (n_hat <= bot) {
        r.alpha_hat = table.decreasing ? al.back() : al.front();
        r.clamped = true;
        return r;
    }

    std::size_t lo = 0, hi = v.size() - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        const bool go_right = table.decreasing ? v[mid] > n_hat : v[mid] < n_hat;
        if (go_right) lo = mid; else hi = mid;
    }
    const double t = (n_hat - v[lo]) / (v[hi] - v[lo]);
    r.alpha_hat = al[lo] + t * (al[hi] - al[lo]);
    r.clamped = false;
    return r;
}

EstimateResult estimate_alpha(std::span<const double> data, const RatioSpec& spec,
                              const RatioTable& table) {
    return invert(table, sample_ratio(data, spec));
}

} // namespace qcv
