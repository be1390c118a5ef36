#ifndef MACKNET_ENSEMBLE_HPP
#define MACKNET_ENSEMBLE_HPP

#include "macknet/features.hpp"
#include "macknet/mack.hpp"
#include "macknet/neural.hpp"
#include "macknet/triangle.hpp"

#include <cstdint>
#include <vector>

namespace macknet {

/// Derives the seed of ensemble member `index` from the master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(master ^ mix64(index + 0x5851f42d4c957f2dULL));
}

struct EnsembleConfig {
    std::size_t members = 20;
    std::uint64_t master_seed = 0;
    TrainConfig train;       // shared across members; per-member seed is derived
    std::size_t threads = 1; // members train concurrently; result is thread-count invariant
};

struct MemberDiagnostics {
    std::uint64_t seed = 0;
    std::size_t epochs_run = 0;
    double best_test_mse = 0.0;   // monitor loss of the restored weights
    double final_train_mse = 0.0; // training loss at the last epoch run
    bool retrained = false;       // diverged once and was retrained with a fresh seed
};

struct EnsembleResult {
    std::vector<TrainResult> members;
    std::vector<MemberDiagnostics> diagnostics;
};

/// Trains K independently initialized networks on identical samples.
/// A member whose training diverges is retrained once with a fresh
/// derived seed and flagged in the diagnostics.
EnsembleResult train_ensemble(const std::vector<FeatureSample>& train_set,
                              const std::vector<FeatureSample>& test_set,
                              const EnsembleConfig& cfg);

/// Completes the lower triangle of `kind` by recursive one-step
/// prediction: per origin, the rolling 8-lag window (including earlier
/// predictions) feeds the network, the predicted scaled increment is
/// unscaled by the origin premium and accumulated, column by column until
/// dev year I. The paid-to-incurred ratio sequence is evaluated on the
/// progressively completed squares; the other kind's future cells come
/// from its deterministic chain-ladder completion.
CompletedSquare complete_square(const Network& net, const CompanyDataSet& data,
                                TriangleKind kind);

/// Cellwise arithmetic mean of the member squares.
CompletedSquare average_square(const std::vector<CompletedSquare>& squares);

} // namespace macknet

#endif
