#include "macknet/macknet.hpp"
#include "macknet/errors.hpp"
#include "macknet/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace macknet {

MackNetParameters macknet_parameters(const CompletedSquare& dbar, const MackNetOptions& options) {
    const std::size_t I = dbar.size();
    if (I < 3) throw NumericalError("macknet_parameters: need at least 3 origin years");

    MackNetParameters p;
    p.dev_factors_p.resize(I - 1);
    p.sigma2_p.resize(I - 1);
    p.fbar.resize(I - 1);

    for (std::size_t j = 2; j <= I; ++j) {
        // Predicted-row sums: the rows whose column-j cell lies below the
        // observed diagonal, i = I-j+2 .. I. For j=2 this is a single row.
        double num_p = 0.0, den_p = 0.0;
        const std::size_t first_row = options.predicted_row_sums ? I - j + 2 : 1;
        for (std::size_t i = first_row; i <= I; ++i) {
            num_p += dbar.at(i, j);
            den_p += dbar.at(i, j - 1);
        }
        if (den_p == 0.0)
            throw NumericalError("macknet_parameters: zero denominator in predicted rows of "
                                 "column " + std::to_string(j));
        p.dev_factors_p[j - 2] = num_p / den_p;

        double num_f = 0.0, den_f = 0.0;
        for (std::size_t i = 1; i <= I; ++i) {
            num_f += dbar.at(i, j);
            den_f += dbar.at(i, j - 1);
        }
        if (den_f == 0.0)
            throw NumericalError("macknet_parameters: zero denominator in column " +
                                 std::to_string(j));
        p.fbar[j - 2] = num_f / den_f;
    }

    for (std::size_t j = 2; j < I; ++j) {
        double sum = 0.0;
        for (std::size_t i = 1; i <= I; ++i) {
            const double prev = dbar.at(i, j - 1);
            if (prev == 0.0)
                throw NumericalError("macknet_parameters: zero cell at origin " +
                                     std::to_string(i) + ", dev " + std::to_string(j - 1));
            const double dev = dbar.at(i, j) / prev - p.fbar[j - 2];
            sum += prev * dev * dev;
        }
        const double divisor =
            std::max<double>(static_cast<double>(I) - static_cast<double>(j) - 1.0, 1.0);
        p.sigma2_p[j - 2] = sum / divisor;
    }
    // Last column: same log-linear fallback as the classic estimator.
    {
        const double s2_prev = p.sigma2_p[I - 3];
        if (I >= 4) {
            const double s2_prev2 = p.sigma2_p[I - 4];
            const double extrapolated = s2_prev2 > 0.0 ? (s2_prev * s2_prev) / s2_prev2
                                                       : std::numeric_limits<double>::infinity();
            p.sigma2_p[I - 2] = std::min({extrapolated, s2_prev, s2_prev2});
        } else {
            p.sigma2_p[I - 2] = s2_prev;
        }
    }
    return p;
}

ReserveDistribution macknet_bootstrap(const CompletedSquare& dbar,
                                      const MackNetParameters& params,
                                      const BootstrapConfig& cfg) {
    const std::size_t I = dbar.size();

    // Residual pool over the full square, deviations measured against the
    // full-column factors.
    ResidualSet pool;
    for (std::size_t j = 2; j <= I; ++j) {
        const double sigma = std::sqrt(params.s2p(j));
        for (std::size_t i = 1; i <= I; ++i) {
            const double prev = dbar.at(i, j - 1);
            if (prev <= 0.0) continue;
            const double dev = dbar.at(i, j) / prev - params.fb(j);
            if (sigma == 0.0) {
                if (std::abs(dev) > 1e-12 * std::max(1.0, std::abs(params.fb(j))))
                    throw NumericalError("macknet_bootstrap: sigma_" + std::to_string(j) +
                                         " is zero but column has nonzero deviations");
                continue;
            }
            const double r = std::sqrt(prev) * dev / sigma;
            if (std::isfinite(r)) pool.residuals.push_back({i, j, r});
        }
    }
    pool.n_params = I - 1;
    if (!pool.residuals.empty()) detail::finalize_pool(pool, I - 1, cfg);

    // The resampling and projection run on the observed upper triangle of
    // the square (identical to the source triangle there).
    Triangle upper(I, I, Basis::Cumulative, dbar.kind());
    for (std::size_t i = 1; i <= I; ++i)
        for (std::size_t j = 1; j <= I; ++j)
            if (dbar.source_observed(i, j)) upper.set(i, j, dbar.at(i, j), true);

    const ModelKind kind =
        dbar.kind() == TriangleKind::Paid ? ModelKind::MackNetPaid : ModelKind::MackNetIncurred;
    return detail::run_bootstrap(upper, params.dev_factors_p, params.sigma2_p, pool, cfg, kind,
                                 dbar.total_reserve(), dbar.total_ultimate());
}

MackNetFit fit_macknet(const CompanyDataSet& data, TriangleKind kind,
                       const EnsembleConfig& ens_cfg, const BootstrapConfig& boot_cfg,
                       const MackNetOptions& options) {
    const FeatureSet features = build_features(data, kind);
    const EnsembleResult ensemble = train_ensemble(features.train, features.test, ens_cfg);

    std::vector<CompletedSquare> squares(ensemble.members.size());
    parallel_for(ensemble.members.size(), ens_cfg.threads, [&](std::size_t k) {
        squares[k] = complete_square(ensemble.members[k].net, data, kind);
    });

    MackNetFit fit;
    fit.ensemble_square = average_square(squares);
    fit.params = macknet_parameters(fit.ensemble_square, options);
    fit.distribution = macknet_bootstrap(fit.ensemble_square, fit.params, boot_cfg);
    fit.members = ensemble.diagnostics;
    return fit;
}

} // namespace macknet
