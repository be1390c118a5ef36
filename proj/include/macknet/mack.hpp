#ifndef MACKNET_MACK_HPP
#define MACKNET_MACK_HPP

#include "macknet/triangle.hpp"

#include <cstdint>
#include <vector>

namespace macknet {

/// Chain-ladder development factors f_j and variance parameters sigma^2_j,
/// both indexed j = 2..I (stored at [j-2]).
struct MackParameters {
    std::vector<double> dev_factors;
    std::vector<double> sigma2;

    double f(std::size_t j) const { return dev_factors[j - 2]; }
    double s2(std::size_t j) const { return sigma2[j - 2]; }
};

struct ScaledResidual {
    std::size_t origin = 0;
    std::size_t dev = 0;
    double value = 0.0;
};

/// Pool of scaled link-ratio residuals for bootstrap resampling.
struct ResidualSet {
    std::vector<ScaledResidual> residuals;
    std::size_t n_residuals = 0; // N, residuals actually pooled
    std::size_t n_params = 0;    // p, number of development factors
    bool zero_mean_applied = false;
    bool bias_adjusted = false;
};

struct BootstrapConfig {
    std::size_t n_sims = 10000;
    std::uint64_t seed = 0;
    bool zero_mean = true;
    bool bias_adjust = true;
    bool process_variance = true;
};

enum class ModelKind { MackPaid, MackIncurred, MackNetPaid, MackNetIncurred };

std::string to_string(ModelKind kind);

/// Full simulated reserve distribution. Per simulation: the total reserve
/// and the ultimate cost of every origin year (reserve = ultimate minus
/// the latest observed diagonal, consistently per simulation).
struct ReserveDistribution {
    std::vector<double> total_reserve;      // length B
    std::vector<double> ultimate_by_origin; // B x I, row-major
    std::size_t n_origins = 0;

    double deterministic_reserve = 0.0;  // central-scenario total reserve
    double deterministic_ultimate = 0.0; // central-scenario total ultimate
    ModelKind model_kind = ModelKind::MackPaid;
    std::uint64_t seed = 0;

    // Diagnostics over all simulations.
    std::size_t negative_cumulative_count = 0; // projected cells that went negative

    std::size_t n_sims() const { return total_reserve.size(); }
    double ultimate(std::size_t sim, std::size_t origin) const {
        return ultimate_by_origin[sim * n_origins + (origin - 1)];
    }
    double total_ultimate(std::size_t sim) const;
};

/// Full I x I square mixing observed upper-triangle cells with projected
/// lower-triangle cells. Cumulative, unscaled.
class CompletedSquare {
public:
    CompletedSquare() = default;
    explicit CompletedSquare(const Triangle& source);

    std::size_t size() const { return size_; }
    double at(std::size_t i, std::size_t j) const { return values_[(i - 1) * size_ + (j - 1)]; }
    void set(std::size_t i, std::size_t j, double v) { values_[(i - 1) * size_ + (j - 1)] = v; }
    bool source_observed(std::size_t i, std::size_t j) const {
        return observed_[(i - 1) * size_ + (j - 1)] != 0;
    }
    /// Latest observed dev year of origin i in the source triangle.
    std::size_t last_observed_dev(std::size_t i) const { return last_obs_[i - 1]; }

    double ultimate(std::size_t i) const { return at(i, size_); }
    double reserve(std::size_t i) const { return ultimate(i) - at(i, last_observed_dev(i)); }
    double total_reserve() const;
    double total_ultimate() const;

    TriangleKind kind() const { return kind_; }

private:
    std::size_t size_ = 0;
    TriangleKind kind_ = TriangleKind::Paid;
    std::vector<double> values_;
    std::vector<std::uint8_t> observed_;
    std::vector<std::size_t> last_obs_;
};

/// Volume-weighted development factors: f_j = sum_i D_ij / sum_i D_{i,j-1}
/// over the rows where both cells are observed.
std::vector<double> dev_factors(const Triangle& t);

/// Mack variance parameters. The divisor follows the estimator's
/// (I - j - 1) convention, floored at one so the two-ratio column stays
/// estimable; the final column falls back to the standard log-linear
/// extrapolation min(sigma^4_{I-1}/sigma^2_{I-2}, sigma^2_{I-1},
/// sigma^2_{I-2}).
std::vector<double> sigma2(const Triangle& t, const std::vector<double>& f);

MackParameters estimate_mack(const Triangle& t);

/// Scaled Pearson-style residuals of the link ratios, optionally bias
/// adjusted by N/(N-p) and centered to zero mean. Columns with zero sigma
/// contribute no residuals.
ResidualSet residuals(const Triangle& t, const MackParameters& params,
                      const BootstrapConfig& cfg);

/// Deterministic chain-ladder completion of the lower triangle.
CompletedSquare chain_ladder_project(const Triangle& t, const std::vector<double>& f);

/// England-Verrall bootstrap of Mack's model: resamples residuals onto the
/// upper triangle, recomputes volume-weighted factors, projects the lower
/// triangle and adds process variance cell by cell. Deterministic for a
/// fixed seed; per-simulation substreams make the result independent of
/// any parallel scheduling.
ReserveDistribution bootstrap_mack(const Triangle& t, const BootstrapConfig& cfg);

namespace detail {

/// Shared bootstrap engine. `upper` supplies the observed triangle the
/// resampling and projection start from; `f` and `s2` are the development
/// and variance parameters (indexed j=2..I at [j-2]); `pool` is the
/// residual set to resample from.
ReserveDistribution run_bootstrap(const Triangle& upper, const std::vector<double>& f,
                                  const std::vector<double>& s2, const ResidualSet& pool,
                                  const BootstrapConfig& cfg, ModelKind kind,
                                  double deterministic_reserve, double deterministic_ultimate);

double bias_factor(std::size_t n_residuals, std::size_t n_params);

/// Applies the bias adjustment and zero-mean centering to a raw pool.
void finalize_pool(ResidualSet& set, std::size_t n_params, const BootstrapConfig& cfg);

} // namespace detail

} // namespace macknet

#endif
