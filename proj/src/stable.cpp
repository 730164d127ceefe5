#include "qcv/stable.hpp"

#include "qcv/detail/rng.hpp"
#include "qcv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

namespace qcv::stable {

namespace {

constexpr double kPi = std::numbers::pi;
// -ln(1e-12): the t-integral stops once exp(-t^alpha) falls below 1e-12.
constexpr double kEnvelopeLog = 27.631021115928547;
constexpr double kQuantileTolP = 1e-8;

bool near(double a, double b, double tol = 1e-9) { return std::fabs(a - b) <= tol; }

// zeta(-a) for a in (0,1) via the functional equation; std::riemann_zeta is
// only needed on (1,2) where every implementation behaves.
double zeta_neg(double a) {
    return -std::pow(2.0, -a) * std::pow(kPi, -a - 1.0) * std::sin(kPi * a / 2.0) *
           std::tgamma(1.0 + a) * std::riemann_zeta(1.0 + a);
}

// k-th coefficient of the tail series: f(x) = sum_k (-1)^{k+1} b_k x^{-k a - 1}
double series_b(double a, int k) {
    double kf = 1.0;
    for (int i = 2; i <= k; ++i) kf *= i;
    return std::tgamma(k * a + 1.0) / kf * std::sin(k * kPi * a / 2.0) / kPi;
}

} // namespace

// ---------------------------------------------------------------------------
// parameters & config

StableParams::StableParams(double alpha_, double beta_, double scale_, double location_)
    : alpha(alpha_), beta(beta_), scale(scale_), location(location_) {
    if (!(alpha > 0.0) || !(alpha <= 2.0) || !std::isfinite(alpha))
        throw InvalidParams("stable alpha must lie in (0,2]");
    if (!(beta >= -1.0) || !(beta <= 1.0) || !std::isfinite(beta))
        throw InvalidParams("stable beta must lie in [-1,1]");
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw InvalidParams("stable scale must be positive");
    if (!std::isfinite(location))
        throw InvalidParams("stable location must be finite");
}

void IntegrationConfig::validate() const {
    if (!(step > 0.0) || !std::isfinite(step))
        throw InvalidParams("integration step must be positive");
    if (!(truncation > 0.0) || !std::isfinite(truncation))
        throw InvalidParams("integration truncation must be positive");
    if (!(tail_switch_p > 0.5) || !(tail_switch_p < 1.0))
        throw InvalidParams("tail_switch_p must lie in (0.5,1)");
}

std::string IntegrationConfig::digest() const {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.17g|%.17g|%.17g", step, truncation, tail_switch_p);
    std::uint64_t h = 1469598103934665603ULL; // FNV-1a
    for (const char* p = buf; *p; ++p) {
        h ^= static_cast<unsigned char>(*p);
        h *= 1099511628211ULL;
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

// ---------------------------------------------------------------------------
// normal helpers

double std_normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi); }

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double std_normal_quantile(double p) {
    if (!(p > 0.0) || !(p < 1.0)) throw InvalidParams("normal quantile needs p in (0,1)");
    // Acklam's rational approximation ...
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double q, r, z;
    if (p < plow) {
        q = std::sqrt(-2.0 * std::log(p));
        z = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        q = p - 0.5;
        r = q * q;
        z = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        z = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // one Halley step against erfc brings the result to full double precision
    double e = std_normal_cdf(z) - p;
    double u = e / std_normal_pdf(z);
    z -= u / (1.0 + 0.5 * z * u);
    return z;
}

// ---------------------------------------------------------------------------
// tail constants & series

TailConstants tail_constants(double alpha) {
    if (!(alpha > 0.0) || !(alpha < 2.0))
        throw InvalidParams("tail constants defined for alpha in (0,2)");
    TailConstants tc;
    tc.c_alpha = std::sin(kPi * alpha / 2.0) * std::tgamma(alpha) / kPi;
    tc.c_bar_alpha = std::pow(tc.c_alpha, 1.0 / alpha);
    return tc;
}

double tail_quantile_approx(double alpha, double p) {
    if (!(p > 0.5) || !(p < 1.0))
        throw InvalidParams("tail quantile approximation needs p in (0.5,1)");
    const TailConstants tc = tail_constants(alpha);
    return tc.c_bar_alpha * std::pow(1.0 - p, -1.0 / alpha);
}

double tail_pdf_series(double alpha, double x) {
    const double b1 = series_b(alpha, 1);
    const double b2 = series_b(alpha, 2);
    return b1 * std::pow(x, -alpha - 1.0) - b2 * std::pow(x, -2.0 * alpha - 1.0);
}

double tail_sf_series(double alpha, double x) {
    const double s1 = std::tgamma(alpha) * std::sin(kPi * alpha / 2.0) / kPi;
    const double s2 = std::tgamma(2.0 * alpha) / 2.0 * std::sin(kPi * alpha) / kPi;
    return s1 * std::pow(x, -alpha) - s2 * std::pow(x, -2.0 * alpha);
}

// ---------------------------------------------------------------------------
// characteristic function

std::complex<double> char_function(const StableParams& params, double u) {
    if (!std::isfinite(u)) throw InvalidParams("char_function needs finite u");
    const double a = params.alpha, b = params.beta, c = params.scale, mu = params.location;
    if (u == 0.0) return {1.0, 0.0};
    const double au = std::fabs(u);
    const double sgn = u > 0.0 ? 1.0 : -1.0;
    std::complex<double> expo;
    if (near(a, 1.0, 1e-12)) {
        expo = std::complex<double>(-c * au,
                                    -c * au * b * (2.0 / kPi) * sgn * std::log(c * au)) +
               std::complex<double>(0.0, mu * u);
    } else {
        const double tana = std::tan(kPi * a / 2.0);
        const double shape = std::pow(c * au, 1.0 - a) - 1.0;
        const double mod = std::pow(c, a) * std::pow(au, a);
        expo = std::complex<double>(-mod, -mod * b * sgn * tana * shape) +
               std::complex<double>(0.0, mu * u);
    }
    return std::exp(expo);
}

// ---------------------------------------------------------------------------
// shared quadrature internals

namespace detail {

double series_handoff(double alpha, double h) {
    const double A = 2.0 * kPi / h;
    const double b1 = std::fabs(series_b(alpha, 1));
    const double b3 = std::fabs(series_b(alpha, 3));
    const double b4 = std::fabs(series_b(alpha, 4));
    double best_x = 10.0, best_e = 1e300;
    const double lo = 9.0, hi = 0.35 * A;
    for (int i = 0; i <= 160; ++i) {
        const double x = lo * std::pow(hi / lo, i / 160.0);
        const double f1 = b1 * std::pow(x, -alpha - 1.0);
        const double alias = (b1 * std::pow(A - x, -alpha - 1.0) +
                              b1 * std::pow(A + x, -alpha - 1.0)) / f1;
        const double ser = (b3 * std::pow(x, -3.0 * alpha - 1.0) +
                            b4 * std::pow(x, -4.0 * alpha - 1.0)) / f1;
        const double e = alias + ser;
        if (e < best_e) { best_e = e; best_x = x; }
    }
    return best_x;
}

std::vector<double> pdf_quadrature_grid(double alpha, const std::vector<double>& xs,
                                        double h, double env_log_cut, double trunc_cap) {
    const double a = alpha;
    const double t_env = std::pow(env_log_cut, 1.0 / a);
    const double T = std::min(t_env, trunc_cap);
    const double tail_bound = std::exp(-std::pow(T, a)) * std::pow(T, 1.0 - a) / a * 1.1;
    if (!(tail_bound < 1e-8))
        throw NumericError("t-integral truncation error above tolerance; raise "
                           "IntegrationConfig::truncation");

    const std::size_t nt = static_cast<std::size_t>(std::ceil(T / h));
    std::vector<double> env(nt + 1);
    for (std::size_t j = 0; j <= nt; ++j) env[j] = std::exp(-std::pow(j * h, a));
    env[0] *= 0.5;
    env[nt] *= 0.5;
    // cusp of exp(-t^alpha) at t = 0 for alpha < 1: first Navot correction
    const double navot = a < 1.0 ? zeta_neg(a) * std::pow(h, 1.0 + a) : 0.0;

    std::vector<double> out(xs.size());
    constexpr std::size_t kRefresh = 1u << 15;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double x = xs[i];
        // cos(x t_j) by three-term recurrence, refreshed to cap rounding drift
        const double two_c = 2.0 * std::cos(x * h);
        double acc = 0.0;
        std::size_t j = 0;
        while (j <= nt) {
            const std::size_t jend = std::min(nt, j + kRefresh - 1);
            double cm = std::cos(x * (static_cast<double>(j) * h));
            double cp = std::cos(x * (static_cast<double>(j + 1) * h));
            acc += env[j] * cm;
            for (std::size_t k = j + 1; k <= jend; ++k) {
                acc += env[k] * cp;
                const double cn = two_c * cp - cm;
                cm = cp;
                cp = cn;
            }
            j = jend + 1;
        }
        out[i] = (acc * h + navot) / kPi;
    }
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// per-alpha profile

SymmetricStable::SymmetricStable(double alpha, const IntegrationConfig& cfg) {
    cfg.validate();
    if (!(alpha > 0.0) || !(alpha <= 2.0))
        throw InvalidParams("symmetric stable alpha must lie in (0,2]");
    alpha_ = alpha;
    tail_switch_p_ = cfg.tail_switch_p;
    if (near(alpha, 1.0, 1e-9)) {
        kind_ = 1;
    } else if (near(alpha, 2.0, 1e-9)) {
        kind_ = 2;
    } else {
        kind_ = 0;
        build_profile(cfg);
    }
}

void SymmetricStable::build_profile(const IntegrationConfig& cfg) {
    const double a = alpha_;
    const double h = cfg.step;

    x_series_ = detail::series_handoff(a, h);

    // x-grid: uniform core, then geometric tail out to the handoff point with
    // an even interval count in each section (cumulative Simpson pairs).
    core_step_ = 0.02;
    const double core_end = 8.0;
    core_count_ = static_cast<std::size_t>(std::llround(core_end / core_step_));
    if (core_count_ % 2) ++core_count_;
    x_.clear();
    for (std::size_t i = 0; i <= core_count_; ++i) x_.push_back(i * core_step_);
    const double ratio = 1.03;
    x_series_ = std::max(x_series_, core_end * ratio * ratio);
    {
        double x = core_end;
        std::size_t tail_n = 0;
        while (x < x_series_ || tail_n % 2) {
            x *= ratio;
            x_.push_back(x);
            ++tail_n;
        }
        x_series_ = x;
    }

    f_ = detail::pdf_quadrature_grid(a, x_, h, kEnvelopeLog, cfg.truncation);

    // Cumulative CDF: Simpson on the uniform core, Simpson in log x on the
    // tail (x f(x) integrated against d log x).
    F_.resize(x_.size());
    F_[0] = 0.5;
    for (std::size_t i = 0; i + 2 <= core_count_; i += 2) {
        F_[i + 1] = F_[i] + core_step_ / 12.0 * (5.0 * f_[i] + 8.0 * f_[i + 1] - f_[i + 2]);
        F_[i + 2] = F_[i] + core_step_ / 3.0 * (f_[i] + 4.0 * f_[i + 1] + f_[i + 2]);
    }
    const double du = std::log(ratio);
    for (std::size_t i = core_count_; i + 2 < x_.size(); i += 2) {
        const double g0 = f_[i] * x_[i], g1 = f_[i + 1] * x_[i + 1], g2 = f_[i + 2] * x_[i + 2];
        F_[i + 1] = F_[i] + du / 12.0 * (5.0 * g0 + 8.0 * g1 - g2);
        F_[i + 2] = F_[i] + 2.0 * du / 6.0 * (g0 + 4.0 * g1 + g2);
    }
}

double SymmetricStable::grid_pdf_interp(double x) const {
    // 4-point Lagrange on the profile nodes
    std::size_t i;
    if (x < x_[core_count_]) {
        i = static_cast<std::size_t>(x / core_step_);
    } else {
        i = static_cast<std::size_t>(std::upper_bound(x_.begin() + core_count_, x_.end(), x) -
                                     x_.begin()) - 1;
    }
    if (i + 1 >= x_.size()) i = x_.size() - 2;
    std::size_t s = i == 0 ? 0 : i - 1;
    if (s + 3 >= x_.size()) s = x_.size() - 4;
    double r = 0.0;
    for (std::size_t m = s; m < s + 4; ++m) {
        double lm = 1.0;
        for (std::size_t k = s; k < s + 4; ++k)
            if (k != m) lm *= (x - x_[k]) / (x_[m] - x_[k]);
        r += f_[m] * lm;
    }
    return std::max(r, 0.0);
}

double SymmetricStable::grid_cdf_interp(double x) const {
    std::size_t i;
    if (x < x_[core_count_]) {
        i = static_cast<std::size_t>(x / core_step_);
    } else {
        i = static_cast<std::size_t>(std::upper_bound(x_.begin() + core_count_, x_.end(), x) -
                                     x_.begin()) - 1;
    }
    if (i + 1 >= x_.size()) i = x_.size() - 2;
    const double x0 = x_[i], x1 = x_[i + 1], dx = x1 - x0;
    const double t = (x - x0) / dx;
    const double h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
    const double h10 = t * (1.0 - t) * (1.0 - t);
    const double h01 = t * t * (3.0 - 2.0 * t);
    const double h11 = t * t * (t - 1.0);
    return F_[i] * h00 + dx * f_[i] * h10 + F_[i + 1] * h01 + dx * f_[i + 1] * h11;
}

double SymmetricStable::pdf_abs(double x) const {
    if (x > x_.back()) return tail_pdf_series(alpha_, x);
    return grid_pdf_interp(x);
}

double SymmetricStable::cdf_abs(double x) const {
    if (x > x_.back()) {
        const double v = 1.0 - tail_sf_series(alpha_, x);
        return std::clamp(v, F_.back(), 1.0);
    }
    return std::min(grid_cdf_interp(x), 1.0);
}

double SymmetricStable::pdf(double x) const {
    if (!std::isfinite(x)) throw InvalidParams("pdf needs finite x");
    const double ax = std::fabs(x);
    switch (kind_) {
    case 1: return 1.0 / (kPi * (1.0 + ax * ax));
    case 2: return std::exp(-ax * ax / 4.0) / (2.0 * std::sqrt(kPi));
    default: return pdf_abs(ax);
    }
}

double SymmetricStable::cdf(double x) const {
    if (!std::isfinite(x)) throw InvalidParams("cdf needs finite x");
    switch (kind_) {
    case 1: return 0.5 + std::atan(x) / kPi;
    case 2: return std_normal_cdf(x / std::numbers::sqrt2);
    default: break;
    }
    if (x >= 0.0) return cdf_abs(x);
    return 1.0 - cdf_abs(-x);
}

double SymmetricStable::quantile(double p) const {
    if (!(p > 0.0) || !(p < 1.0)) throw InvalidParams("quantile needs p in (0,1)");
    switch (kind_) {
    case 1: return std::tan(kPi * (p - 0.5));
    case 2: return std::numbers::sqrt2 * std_normal_quantile(p);
    default: break;
    }
    if (p == 0.5) return 0.0;
    if (p < 0.5) return -quantile(1.0 - p);
    if (p > tail_switch_p_) return tail_quantile_approx(alpha_, p);

    if (p >= F_.back()) {
        // invert the two-term survival series by safeguarded Newton
        double x = tail_quantile_approx(alpha_, p);
        double lo = x_.back(), hi = std::max(4.0 * x, 2.0 * lo);
        while (1.0 - tail_sf_series(alpha_, hi) < p) {
            hi *= 2.0;
            if (!(hi < 1e300)) throw NumericError("quantile bracketing failed in the tail");
        }
        x = std::clamp(x, lo, hi);
        for (int it = 0; it < 200; ++it) {
            const double g = (1.0 - tail_sf_series(alpha_, x)) - p;
            if (std::fabs(g) <= kQuantileTolP) return x;
            if (g > 0.0) hi = x; else lo = x;
            const double d = tail_pdf_series(alpha_, x);
            double xn = d > 0.0 ? x - g / d : 0.5 * (lo + hi);
            if (!(xn > lo) || !(xn < hi)) xn = 0.5 * (lo + hi);
            x = xn;
        }
        throw NumericError("quantile iteration did not converge (tail branch)");
    }

    // bracket on the grid, then Newton with bisection fallback
    std::size_t lo_i = 0, hi_i = x_.size() - 1;
    while (hi_i - lo_i > 1) {
        const std::size_t mid = (lo_i + hi_i) / 2;
        if (F_[mid] < p) lo_i = mid; else hi_i = mid;
    }
    double lo = x_[lo_i], hi = x_[hi_i];
    double x = lo + (hi - lo) * (p - F_[lo_i]) /
                        std::max(F_[hi_i] - F_[lo_i], 1e-300);
    for (int it = 0; it < 200; ++it) {
        const double g = cdf_abs(x) - p;
        if (std::fabs(g) <= kQuantileTolP) return x;
        if (g > 0.0) hi = x; else lo = x;
        const double d = pdf_abs(x);
        double xn = d > 0.0 ? x - g / d : 0.5 * (lo + hi);
        if (!(xn > lo) || !(xn < hi)) xn = 0.5 * (lo + hi);
        x = xn;
    }
    throw NumericError("quantile iteration did not converge");
}

std::shared_ptr<const SymmetricStable> SymmetricStable::get(double alpha,
                                                            const IntegrationConfig& cfg) {
    struct Key {
        std::uint64_t a, s, t, p;
        bool operator<(const Key& o) const {
            return std::tie(a, s, t, p) < std::tie(o.a, o.s, o.t, o.p);
        }
    };
    static std::map<Key, std::shared_ptr<const SymmetricStable>> cache;
    static std::mutex mtx;
    const Key key{qcv::detail::bits_of(alpha), qcv::detail::bits_of(cfg.step),
                  qcv::detail::bits_of(cfg.truncation), qcv::detail::bits_of(cfg.tail_switch_p)};
    {
        std::lock_guard<std::mutex> lock(mtx);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    auto made = std::make_shared<const SymmetricStable>(alpha, cfg);
    std::lock_guard<std::mutex> lock(mtx);
    auto [it, inserted] = cache.emplace(key, made);
    return it->second;
}

double pdf(double alpha, double x, const IntegrationConfig& cfg) {
    return SymmetricStable::get(alpha, cfg)->pdf(x);
}

double cdf(double alpha, double x, const IntegrationConfig& cfg) {
    return SymmetricStable::get(alpha, cfg)->cdf(x);
}

double quantile(double alpha, double p, const IntegrationConfig& cfg) {
    return SymmetricStable::get(alpha, cfg)->quantile(p);
}

// ---------------------------------------------------------------------------
// sampling

std::vector<double> sample(const StableParams& params, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw InvalidParams("sample needs n >= 1");
    qcv::detail::Rng rng(seed);
    std::vector<double> out(n);
    const double a = params.alpha, b = params.beta, c = params.scale, mu = params.location;

    if (std::fabs(a - 2.0) <= 1e-4) {
        // Gaussian branch: variance 2 c^2, beta inert
        for (auto& v : out)
            v = mu + c * std::numbers::sqrt2 * std_normal_quantile(rng.uniform01());
        return out;
    }
    if (std::fabs(a - 1.0) <= 1e-4) {
        // alpha = 1 branch of the CMS transform; scaling by c already matches
        // the 0-parametrization's log term
        for (auto& v : out) {
            const double V = kPi * (rng.uniform01() - 0.5);
            const double W = rng.exponential();
            double x;
            if (b == 0.0) {
                x = std::tan(V);
            } else {
                const double half_pi = kPi / 2.0;
                x = (2.0 / kPi) * ((half_pi + b * V) * std::tan(V) -
                                   b * std::log((half_pi * W * std::cos(V)) / (half_pi + b * V)));
            }
            v = c * x + mu;
        }
        return out;
    }

    // generic Chambers-Mallows-Stuck in the 1-parametrization, then the
    // deterministic shift -beta c tan(pi alpha / 2) into the 0-parametrization
    const double tana = std::tan(kPi * a / 2.0);
    const double B = std::atan(b * tana) / a;
    const double S = std::pow(1.0 + b * b * tana * tana, 1.0 / (2.0 * a));
    const double shift = mu - b * c * tana;
    const double inv_a = 1.0 / a;
    const double expo = (1.0 - a) / a;
    for (auto& v : out) {
        const double V = kPi * (rng.uniform01() - 0.5);
        const double W = rng.exponential();
        const double x = S * std::sin(a * (V + B)) / std::pow(std::cos(V), inv_a) *
                         std::pow(std::cos(V - a * (V + B)) / W, expo);
        v = c * x + shift;
    }
    return out;
}

} // namespace qcv::stable
