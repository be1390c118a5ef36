#ifndef MACKNET_EVAL_HPP
#define MACKNET_EVAL_HPP

#include "macknet/mack.hpp"

#include <string>
#include <vector>

namespace macknet {

/// One company's predicted vs. realized ultimate, with the simulated
/// distribution backing the risk measures.
struct CompanyOutcome {
    std::string company_code;
    double predicted_ultimate = 0.0; // central scenario of the model
    double actual_ultimate = 0.0;    // realized ultimate from the developed square
    const ReserveDistribution* distribution = nullptr;
    double sim_sd = 0.0; // sample sd of simulated total ultimates
};

enum class KupiecWeighting { Uniform, SdWeighted };

struct BacktestResult {
    double weighted_breach_rate = 0.0;
    double effective_n = 0.0;
    double lr_statistic = 0.0;
    double p_value = 1.0;
    double alpha = 0.995;
};

/// Root mean squared relative error of the predicted ultimates, in percent.
double rmse_pct(const std::vector<CompanyOutcome>& outcomes);

/// Mean absolute relative error of the predicted ultimates, in percent.
double mae_pct(const std::vector<CompanyOutcome>& outcomes);

/// Empirical quantile of the simulated total ultimates. Linear
/// interpolation between order statistics (the (n-1)*alpha convention);
/// alpha -> 1 gives the sample maximum.
double var_quantile(const ReserveDistribution& dist, double alpha);

/// Quantile of a raw sample, same convention as var_quantile.
double quantile(std::vector<double> values, double alpha);

/// sd/mean of the simulated total ultimates. Population (1/n) sd: the
/// two-point convention {90, 110} -> 0.1.
double coefficient_of_variation(const ReserveDistribution& dist);

/// Kupiec proportion-of-failures test at VaR level alpha. A breach is an
/// actual ultimate strictly above the alpha-quantile of the simulated
/// ultimates. Company weights are uniform or proportional to each
/// company's simulated sd; the weighted breach rate enters the LR
/// statistic through its continuous extension (x = rate * n need not be
/// an integer, 0*log 0 = 0).
BacktestResult kupiec_test(const std::vector<CompanyOutcome>& outcomes, double alpha,
                           KupiecWeighting weighting);

/// Survival function of chi-square with 1 degree of freedom,
/// erfc(sqrt(x/2)). Self-contained erfc: Maclaurin series below 2,
/// Lentz-evaluated continued fraction above; absolute error < 1e-10.
double chi_square_1df_sf(double x);

/// Complementary error function used by chi_square_1df_sf.
double erfc_series_cf(double x);

} // namespace macknet

#endif
