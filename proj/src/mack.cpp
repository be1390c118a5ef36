#include "macknet/mack.hpp"
#include "macknet/errors.hpp"
#include "macknet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace macknet {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::MackPaid: return "mack_paid";
        case ModelKind::MackIncurred: return "mack_incurred";
        case ModelKind::MackNetPaid: return "macknet_paid";
        case ModelKind::MackNetIncurred: return "macknet_incurred";
    }
    return "?";
}

double ReserveDistribution::total_ultimate(std::size_t sim) const {
    double s = 0.0;
    for (std::size_t i = 1; i <= n_origins; ++i) s += ultimate(sim, i);
    return s;
}

CompletedSquare::CompletedSquare(const Triangle& source)
    : size_(source.origins()),
      kind_(source.kind()),
      values_(size_ * size_, 0.0),
      observed_(size_ * size_, 0),
      last_obs_(size_, 0) {
    if (source.origins() != source.devs())
        throw DataError("CompletedSquare: source triangle must be square");
    for (std::size_t i = 1; i <= size_; ++i) {
        for (std::size_t j = 1; j <= size_; ++j) {
            if (source.observed(i, j)) {
                set(i, j, source.at(i, j));
                observed_[(i - 1) * size_ + (j - 1)] = 1;
                last_obs_[i - 1] = std::max(last_obs_[i - 1], j);
            }
        }
        if (last_obs_[i - 1] == 0)
            throw DataError("CompletedSquare: origin " + std::to_string(i) +
                            " has no observed cells");
    }
}

double CompletedSquare::total_reserve() const {
    double s = 0.0;
    for (std::size_t i = 1; i <= size_; ++i) s += reserve(i);
    return s;
}

double CompletedSquare::total_ultimate() const {
    double s = 0.0;
    for (std::size_t i = 1; i <= size_; ++i) s += ultimate(i);
    return s;
}

std::vector<double> dev_factors(const Triangle& t) {
    if (t.basis() != Basis::Cumulative)
        throw DataError("dev_factors: triangle must be cumulative");
    const std::size_t I = t.origins();
    std::vector<double> f;
    f.reserve(I - 1);
    for (std::size_t j = 2; j <= I; ++j) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 1; i <= I; ++i) {
            if (t.observed(i, j) && t.observed(i, j - 1)) {
                num += t.at(i, j);
                den += t.at(i, j - 1);
            }
        }
        if (den == 0.0)
            throw NumericalError("dev_factors: zero denominator in column " + std::to_string(j));
        f.push_back(num / den);
    }
    return f;
}

std::vector<double> sigma2(const Triangle& t, const std::vector<double>& f) {
    const std::size_t I = t.origins();
    if (I < 3)
        throw NumericalError("sigma2: need at least 3 origin years, got " + std::to_string(I));
    if (f.size() != I - 1)
        throw DataError("sigma2: factor vector length mismatch");
    std::vector<double> s2(I - 1, 0.0);

    for (std::size_t j = 2; j <= I; ++j) {
        std::size_t n_ratios = 0;
        double sum = 0.0;
        for (std::size_t i = 1; i <= I; ++i) {
            if (t.observed(i, j) && t.observed(i, j - 1) && t.at(i, j - 1) != 0.0) {
                const double dev = t.at(i, j) / t.at(i, j - 1) - f[j - 2];
                sum += t.at(i, j - 1) * dev * dev;
                ++n_ratios;
            }
        }
        if (j < I) {
            if (n_ratios < 2)
                throw NumericalError("sigma2: fewer than 2 ratios in column " +
                                     std::to_string(j));
            const double divisor =
                std::max<double>(static_cast<double>(I) - static_cast<double>(j) - 1.0, 1.0);
            s2[j - 2] = sum / divisor;
        } else {
            // Last column: log-linear fallback.
            const double s2_prev = s2[I - 3];
            if (I >= 4) {
                const double s2_prev2 = s2[I - 4];
                const double extrapolated = s2_prev2 > 0.0
                                                ? (s2_prev * s2_prev) / s2_prev2
                                                : std::numeric_limits<double>::infinity();
                s2[I - 2] = std::min({extrapolated, s2_prev, s2_prev2});
            } else {
                // I == 3: only one estimated column exists, carry it forward.
                s2[I - 2] = s2_prev;
            }
        }
    }
    return s2;
}

MackParameters estimate_mack(const Triangle& t) {
    MackParameters p;
    p.dev_factors = dev_factors(t);
    p.sigma2 = sigma2(t, p.dev_factors);
    return p;
}

namespace detail {

double bias_factor(std::size_t n_residuals, std::size_t n_params) {
    if (n_residuals <= n_params)
        throw NumericalError("bias adjustment: N = " + std::to_string(n_residuals) +
                             " residuals with p = " + std::to_string(n_params) + " parameters");
    return static_cast<double>(n_residuals) /
           static_cast<double>(n_residuals - n_params);
}

void finalize_pool(ResidualSet& set, std::size_t n_params, const BootstrapConfig& cfg) {
    set.n_residuals = set.residuals.size();
    set.n_params = n_params;
    if (cfg.bias_adjust) {
        const double factor = bias_factor(set.n_residuals, set.n_params);
        for (auto& r : set.residuals) r.value *= factor;
        set.bias_adjusted = true;
    }
    if (cfg.zero_mean) {
        double mean = 0.0;
        for (const auto& r : set.residuals) mean += r.value;
        mean /= static_cast<double>(set.residuals.size());
        for (auto& r : set.residuals) r.value -= mean;
        set.zero_mean_applied = true;
    }
}

} // namespace detail

ResidualSet residuals(const Triangle& t, const MackParameters& params,
                      const BootstrapConfig& cfg) {
    const std::size_t I = t.origins();
    ResidualSet set;
    for (std::size_t j = 2; j <= I; ++j) {
        const double s2 = params.s2(j);
        const double sigma = std::sqrt(s2);
        for (std::size_t i = 1; i <= I; ++i) {
            if (!(t.observed(i, j) && t.observed(i, j - 1))) continue;
            const double prev = t.at(i, j - 1);
            if (prev <= 0.0) continue;
            const double dev = t.at(i, j) / prev - params.f(j);
            if (sigma == 0.0) {
                if (std::abs(dev) > 1e-12 * std::max(1.0, std::abs(params.f(j))))
                    throw NumericalError("residuals: sigma_" + std::to_string(j) +
                                         " is zero but column has nonzero deviations");
                continue; // degenerate column contributes no residuals
            }
            const double r = std::sqrt(prev) * dev / sigma;
            if (std::isfinite(r)) set.residuals.push_back({i, j, r});
        }
    }
    if (set.residuals.empty()) {
        set.n_params = I - 1;
        return set; // fully degenerate triangle; bootstrap becomes deterministic
    }
    detail::finalize_pool(set, I - 1, cfg);
    return set;
}

CompletedSquare chain_ladder_project(const Triangle& t, const std::vector<double>& f) {
    const std::size_t I = t.origins();
    if (f.size() != I - 1)
        throw DataError("chain_ladder_project: expected " + std::to_string(I - 1) +
                        " factors, got " + std::to_string(f.size()));
    CompletedSquare sq(t);
    for (std::size_t i = 1; i <= I; ++i) {
        for (std::size_t j = sq.last_observed_dev(i) + 1; j <= I; ++j)
            sq.set(i, j, sq.at(i, j - 1) * f[j - 2]);
    }
    return sq;
}

namespace detail {

ReserveDistribution run_bootstrap(const Triangle& upper, const std::vector<double>& f,
                                  const std::vector<double>& s2, const ResidualSet& pool,
                                  const BootstrapConfig& cfg, ModelKind kind,
                                  double deterministic_reserve, double deterministic_ultimate) {
    if (cfg.n_sims == 0) throw DataError("bootstrap: n_sims must be at least 1");
    const std::size_t I = upper.origins();
    const std::size_t B = cfg.n_sims;
    const std::size_t n_pool = pool.residuals.size();

    std::vector<double> sigma(s2.size());
    for (std::size_t k = 0; k < s2.size(); ++k) sigma[k] = std::sqrt(s2[k]);

    ReserveDistribution dist;
    dist.total_reserve.assign(B, 0.0);
    dist.ultimate_by_origin.assign(B * I, 0.0);
    dist.n_origins = I;
    dist.deterministic_reserve = deterministic_reserve;
    dist.deterministic_ultimate = deterministic_ultimate;
    dist.model_kind = kind;
    dist.seed = cfg.seed;

    std::vector<double> f_sim(I - 1, 0.0);
    std::size_t negatives = 0;

    for (std::size_t b = 0; b < B; ++b) {
        // Separate substreams for link-ratio and process-variance draws so
        // toggling process variance leaves the resampling sequence intact.
        Rng link_rng = Rng::stream(cfg.seed, 2 * b);
        Rng proc_rng = Rng::stream(cfg.seed, 2 * b + 1);
        const auto draw = [&](Rng& rng) -> double {
            return n_pool == 0 ? 0.0 : pool.residuals[rng.below(n_pool)].value;
        };

        // Resampled link ratios on the upper triangle, then volume-weighted
        // development factors.
        for (std::size_t j = 2; j <= I; ++j) {
            double num = 0.0, den = 0.0;
            for (std::size_t i = 1; i <= I; ++i) {
                if (!(upper.observed(i, j) && upper.observed(i, j - 1))) continue;
                const double prev = upper.at(i, j - 1);
                if (prev <= 0.0) continue; // degenerate base: no weight, no draw
                const double f_ij =
                    f[j - 2] + draw(link_rng) * sigma[j - 2] / std::sqrt(prev);
                num += prev * f_ij;
                den += prev;
            }
            f_sim[j - 2] = den != 0.0 ? num / den : f[j - 2];
        }

        // Project the lower triangle from the observed diagonal, adding
        // process variance cell by cell.
        double total_reserve = 0.0;
        for (std::size_t i = 1; i <= I; ++i) {
            const std::size_t j_diag = upper.last_observed_dev(i);
            double prev = upper.at(i, j_diag);
            const double diag = prev;
            for (std::size_t j = j_diag + 1; j <= I; ++j) {
                double val = prev * f_sim[j - 2];
                if (cfg.process_variance) {
                    if (prev < 0.0) ++negatives;
                    val += sigma[j - 2] * draw(proc_rng) * std::sqrt(std::max(prev, 0.0));
                }
                if (val < 0.0) ++negatives;
                prev = val;
            }
            dist.ultimate_by_origin[b * I + (i - 1)] = prev;
            total_reserve += prev - diag;
        }
        dist.total_reserve[b] = total_reserve;
    }
    dist.negative_cumulative_count = negatives;
    return dist;
}

} // namespace detail

ReserveDistribution bootstrap_mack(const Triangle& t, const BootstrapConfig& cfg) {
    if (!t.is_as_reported())
        throw DataError("bootstrap_mack: triangle must be as-reported");
    const MackParameters params = estimate_mack(t);
    const ResidualSet pool = residuals(t, params, cfg);
    const CompletedSquare central = chain_ladder_project(t, params.dev_factors);
    const ModelKind kind =
        t.kind() == TriangleKind::Paid ? ModelKind::MackPaid : ModelKind::MackIncurred;
    return detail::run_bootstrap(t, params.dev_factors, params.sigma2, pool, cfg, kind,
                                 central.total_reserve(), central.total_ultimate());
}

} // namespace macknet
