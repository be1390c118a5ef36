#include "macknet/ensemble.hpp"
#include "macknet/errors.hpp"
#include "macknet/parallel.hpp"

#include <cmath>

namespace macknet {

EnsembleResult train_ensemble(const std::vector<FeatureSample>& train_set,
                              const std::vector<FeatureSample>& test_set,
                              const EnsembleConfig& cfg) {
    if (cfg.members < 1) throw DataError("train_ensemble: need at least one member");
    if (train_set.empty()) throw DataError("train_ensemble: no training samples");

    const std::vector<Sample> train_samples = to_samples(train_set);
    const std::vector<Sample> test_samples = to_samples(test_set);

    EnsembleResult result;
    result.members.resize(cfg.members);
    result.diagnostics.resize(cfg.members);

    parallel_for(cfg.members, cfg.threads, [&](std::size_t k) {
        TrainConfig member_cfg = cfg.train;
        member_cfg.seed = derive_seed(cfg.master_seed, k);
        MemberDiagnostics diag;
        diag.seed = member_cfg.seed;
        TrainResult trained;
        try {
            trained = train(train_samples, test_samples, member_cfg);
        } catch (const NumericalError&) {
            member_cfg.seed = derive_seed(cfg.master_seed, cfg.members + k);
            diag.seed = member_cfg.seed;
            diag.retrained = true;
            trained = train(train_samples, test_samples, member_cfg);
        }
        diag.epochs_run = trained.epochs_run;
        diag.final_train_mse = trained.train_loss.empty() ? 0.0 : trained.train_loss.back();
        if (trained.best_epoch > 0)
            diag.best_test_mse = trained.best_monitor;
        else if (!trained.monitor_loss.empty())
            diag.best_test_mse = trained.monitor_loss.back();
        result.members[k] = std::move(trained);
        result.diagnostics[k] = diag;
    });
    return result;
}

CompletedSquare complete_square(const Network& net, const CompanyDataSet& data,
                                TriangleKind kind) {
    const Triangle& response = kind == TriangleKind::Paid ? data.paid : data.incurred;
    const Triangle& other = kind == TriangleKind::Paid ? data.incurred : data.paid;
    const std::size_t I = response.origins();

    // The other kind only enters through the paid-to-incurred ratio; its
    // future cells come from a deterministic chain-ladder completion.
    const CompletedSquare other_cl = chain_ladder_project(other, dev_factors(other));

    // Progressive scaled cumulative square of the fitted kind.
    std::vector<std::vector<double>> fit(I + 1, std::vector<double>(I + 1, 0.0));
    for (std::size_t i = 1; i <= I; ++i)
        for (std::size_t j = 1; j + i <= I + 1; ++j)
            fit[i][j] = response.at(i, j) / data.exposure.at(i);

    const auto other_scaled = [&](std::size_t i, std::size_t j) {
        return other_cl.at(i, j) / data.exposure.at(i);
    };

    // Ratio sequence per column, refreshed from the progressive squares as
    // the completion advances; rstar[m] covers all I origins once every
    // column before it is filled.
    std::vector<double> rstar(I + 1, 0.0);
    const auto refresh_rstar = [&](std::size_t m) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 1; i <= I; ++i) {
            num += kind == TriangleKind::Paid ? fit[i][m] : other_scaled(i, m);
            den += kind == TriangleKind::Paid ? other_scaled(i, m) : fit[i][m];
        }
        if (den == 0.0)
            throw NumericalError("complete_square: scaled incurred column " + std::to_string(m) +
                                 " sums to zero");
        rstar[m] = num / den;
    };

    Mat window(3, static_cast<Eigen::Index>(kWindow));
    for (std::size_t j = 2; j <= I; ++j) {
        refresh_rstar(j - 1);
        for (std::size_t i = I + 2 - j; i <= I; ++i) {
            for (std::size_t k = 0; k < kWindow; ++k) {
                const auto t = static_cast<Eigen::Index>(kWindow - 1 - k);
                const long m = static_cast<long>(j) - 1 - static_cast<long>(k);
                if (m >= 1) {
                    const auto mm = static_cast<std::size_t>(m);
                    window(0, t) = fit[i][mm] - (mm >= 2 ? fit[i][mm - 1] : 0.0);
                    window(1, t) = static_cast<double>(mm) / static_cast<double>(I);
                    window(2, t) = rstar[mm];
                } else {
                    window(0, t) = 0.0;
                    window(1, t) = 0.0;
                    window(2, t) = 0.0;
                }
            }
            const double y = forward(net, window, RunMode::Eval, DropoutSpec{}, nullptr, nullptr);
            fit[i][j] = fit[i][j - 1] + y;
        }
    }

    CompletedSquare out(response);
    for (std::size_t i = 1; i <= I; ++i)
        for (std::size_t j = I + 2 - i; j <= I; ++j)
            out.set(i, j, fit[i][j] * data.exposure.at(i));
    return out;
}

CompletedSquare average_square(const std::vector<CompletedSquare>& squares) {
    if (squares.empty()) throw DataError("average_square: no squares");
    const std::size_t I = squares.front().size();
    for (const auto& sq : squares)
        if (sq.size() != I) throw DataError("average_square: shape mismatch");

    CompletedSquare mean = squares.front();
    for (std::size_t i = 1; i <= I; ++i) {
        for (std::size_t j = 1; j <= I; ++j) {
            double sum = 0.0;
            for (const auto& sq : squares) sum += sq.at(i, j);
            mean.set(i, j, sum / static_cast<double>(squares.size()));
        }
    }
    return mean;
}

} // namespace macknet
