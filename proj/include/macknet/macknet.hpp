#ifndef MACKNET_MACKNET_HPP
#define MACKNET_MACKNET_HPP

#include "macknet/ensemble.hpp"
#include "macknet/mack.hpp"

#include <vector>

namespace macknet {

/// Development and variance parameters estimated from the ensemble-averaged
/// completed square.
struct MackNetParameters {
    std::vector<double> dev_factors_p; // f^p_j, j=2..I, predicted-row column sums
    std::vector<double> sigma2_p;      // sigma^2p_j, j=2..I, full-column sums
    std::vector<double> fbar;          // full-column factors used in the residuals

    double fp(std::size_t j) const { return dev_factors_p[j - 2]; }
    double s2p(std::size_t j) const { return sigma2_p[j - 2]; }
    double fb(std::size_t j) const { return fbar[j - 2]; }
};

struct MackNetOptions {
    /// Development factors from predicted-row sums (rows i = I-j+2..I), as
    /// the estimator is defined. Set false to sum full columns instead,
    /// for sensitivity analysis.
    bool predicted_row_sums = true;
};

/// Estimates the hybrid parameters from the averaged square: f^p_j over
/// the predicted rows of each column, fbar_j over full columns, and the
/// variance parameters from full-column weighted squared deviations
/// around fbar_j (same floored divisor and last-column fallback as the
/// classic estimator).
MackNetParameters macknet_parameters(const CompletedSquare& dbar,
                                     const MackNetOptions& options = {});

/// Bootstrap of the hybrid model: residuals are pooled over the full
/// square (predicted rows included), bias and zero-mean adjusted, then
/// resampled onto the upper triangle exactly as in the classic bootstrap.
/// The central scenario is the ensemble square's own reserve.
ReserveDistribution macknet_bootstrap(const CompletedSquare& dbar,
                                      const MackNetParameters& params,
                                      const BootstrapConfig& cfg);

struct MackNetFit {
    MackNetParameters params;
    ReserveDistribution distribution;
    CompletedSquare ensemble_square;
    std::vector<MemberDiagnostics> members;
};

/// End-to-end pipeline: hold out the last diagonal, build features, train
/// the ensemble, complete and average K squares, estimate parameters and
/// bootstrap the reserve distribution.
MackNetFit fit_macknet(const CompanyDataSet& data, TriangleKind kind,
                       const EnsembleConfig& ens_cfg, const BootstrapConfig& boot_cfg,
                       const MackNetOptions& options = {});

} // namespace macknet

#endif
