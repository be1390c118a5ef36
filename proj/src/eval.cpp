#include "macknet/eval.hpp"
#include "macknet/errors.hpp"

#include <algorithm>
#include <cmath>

namespace macknet {

namespace {

constexpr double kSqrtPi = 1.7724538509055160272981674833411;

void check_outcomes(const std::vector<CompanyOutcome>& outcomes) {
    if (outcomes.empty()) throw DataError("metrics: empty outcome list");
    for (const auto& o : outcomes)
        if (!(o.actual_ultimate > 0.0))
            throw DataError("metrics: non-positive actual ultimate for company '" +
                            o.company_code + "'");
}

/// erf(x) Maclaurin series, for 0 <= x < 2.
double erf_series(double x) {
    const double x2 = x * x;
    double term = x;
    double sum = x;
    for (int n = 1; n < 200; ++n) {
        term *= -x2 / static_cast<double>(n);
        const double contrib = term / static_cast<double>(2 * n + 1);
        sum += contrib;
        if (std::abs(contrib) < 1e-18 * std::abs(sum)) break;
    }
    return 2.0 / kSqrtPi * sum;
}

/// Continued fraction sqrt(pi) e^{x^2} erfc(x) = 1/(x+ (1/2)/(x+ 1/(x+
/// (3/2)/(x+ ...)))), evaluated with the modified Lentz algorithm. For
/// x >= 2.
double erfc_cf(double x) {
    constexpr double tiny = 1e-300;
    double f = x != 0.0 ? x : tiny;
    double c = f;
    double d = 0.0;
    for (int n = 1; n < 300; ++n) {
        const double a = static_cast<double>(n) / 2.0;
        d = x + a * d;
        if (d == 0.0) d = tiny;
        c = x + a / c;
        if (c == 0.0) c = tiny;
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x * x) / (kSqrtPi * f);
}

} // namespace

double erfc_series_cf(double x) {
    if (x < 0.0) return 2.0 - erfc_series_cf(-x);
    if (x < 2.0) return 1.0 - erf_series(x);
    if (x > 27.0) return 0.0; // below double underflow of exp(-x^2)
    return erfc_cf(x);
}

double chi_square_1df_sf(double x) {
    if (x < 0.0) throw DataError("chi_square_1df_sf: negative statistic");
    return erfc_series_cf(std::sqrt(x / 2.0));
}

double rmse_pct(const std::vector<CompanyOutcome>& outcomes) {
    check_outcomes(outcomes);
    double sum = 0.0;
    for (const auto& o : outcomes) {
        const double rel = (o.predicted_ultimate - o.actual_ultimate) / o.actual_ultimate;
        sum += rel * rel;
    }
    return std::sqrt(sum / static_cast<double>(outcomes.size())) * 100.0;
}

double mae_pct(const std::vector<CompanyOutcome>& outcomes) {
    check_outcomes(outcomes);
    double sum = 0.0;
    for (const auto& o : outcomes)
        sum += std::abs((o.predicted_ultimate - o.actual_ultimate) / o.actual_ultimate);
    return sum / static_cast<double>(outcomes.size()) * 100.0;
}

double quantile(std::vector<double> values, double alpha) {
    if (values.empty()) throw DataError("quantile: empty sample");
    if (!(alpha > 0.0 && alpha < 1.0) && alpha != 1.0 && alpha != 0.0)
        throw DataError("quantile: alpha outside [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = static_cast<double>(values.size() - 1) * alpha;
    const auto k = static_cast<std::size_t>(h);
    if (k + 1 >= values.size()) return values.back();
    return values[k] + (h - static_cast<double>(k)) * (values[k + 1] - values[k]);
}

double var_quantile(const ReserveDistribution& dist, double alpha) {
    if (dist.n_sims() == 0) throw DataError("var_quantile: empty distribution");
    std::vector<double> totals(dist.n_sims());
    for (std::size_t b = 0; b < dist.n_sims(); ++b) totals[b] = dist.total_ultimate(b);
    return quantile(std::move(totals), alpha);
}

double coefficient_of_variation(const ReserveDistribution& dist) {
    if (dist.n_sims() == 0) throw DataError("coefficient_of_variation: empty distribution");
    double mean = 0.0;
    for (std::size_t b = 0; b < dist.n_sims(); ++b) mean += dist.total_ultimate(b);
    mean /= static_cast<double>(dist.n_sims());
    if (mean == 0.0) throw NumericalError("coefficient_of_variation: zero mean");
    double var = 0.0;
    for (std::size_t b = 0; b < dist.n_sims(); ++b) {
        const double d = dist.total_ultimate(b) - mean;
        var += d * d;
    }
    var /= static_cast<double>(dist.n_sims());
    return std::sqrt(var) / mean;
}

BacktestResult kupiec_test(const std::vector<CompanyOutcome>& outcomes, double alpha,
                           KupiecWeighting weighting) {
    check_outcomes(outcomes);
    if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("kupiec_test: alpha outside (0, 1)");

    const std::size_t K = outcomes.size();
    std::vector<double> weights(K, 1.0 / static_cast<double>(K));
    if (weighting == KupiecWeighting::SdWeighted) {
        double total_sd = 0.0;
        for (const auto& o : outcomes) total_sd += o.sim_sd;
        if (!(total_sd > 0.0))
            throw DataError("kupiec_test: sd weighting requires positive simulated sds");
        for (std::size_t k = 0; k < K; ++k) weights[k] = outcomes[k].sim_sd / total_sd;
    }

    double breach_rate = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const auto& o = outcomes[k];
        if (o.distribution == nullptr)
            throw DataError("kupiec_test: company '" + o.company_code + "' has no distribution");
        const double var = var_quantile(*o.distribution, alpha);
        if (o.actual_ultimate > var) breach_rate += weights[k];
    }

    const double n = static_cast<double>(K);
    const double x = breach_rate * n;
    const double pi = 1.0 - alpha;
    const auto xlogy = [](double a, double y) { return a == 0.0 ? 0.0 : a * std::log(y); };
    const double log_null = xlogy(n - x, 1.0 - pi) + xlogy(x, pi);
    const double log_alt = xlogy(n - x, 1.0 - breach_rate) + xlogy(x, breach_rate);
    const double lr = std::max(0.0, -2.0 * (log_null - log_alt));

    BacktestResult result;
    result.weighted_breach_rate = breach_rate;
    result.effective_n = n;
    result.lr_statistic = lr;
    result.p_value = chi_square_1df_sf(lr);
    result.alpha = alpha;
    return result;
}

} // namespace macknet
