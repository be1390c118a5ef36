#include "macknet/features.hpp"
#include "macknet/errors.hpp"

#include <cmath>

namespace macknet {

Mat FeatureSample::to_input() const {
    Mat m(3, static_cast<Eigen::Index>(kWindow));
    for (std::size_t k = 0; k < kWindow; ++k) {
        const auto t = static_cast<Eigen::Index>(kWindow - 1 - k); // lag k+1 -> column from the right
        m(0, t) = x1[k];
        m(1, t) = x2[k];
        m(2, t) = x3[k];
    }
    return m;
}

std::vector<Sample> to_samples(const std::vector<FeatureSample>& features) {
    std::vector<Sample> out;
    out.reserve(features.size());
    for (const auto& f : features) out.push_back(f.to_sample());
    return out;
}

namespace {

/// Column ratios sum(D*_ij) / sum(IC*_ij) over the observed rows of each
/// column of the as-reported triangle; index m-1 holds column m.
std::vector<double> observed_column_ratios(const Triangle& paid_scaled,
                                           const Triangle& incurred_scaled) {
    const std::size_t I = paid_scaled.origins();
    std::vector<double> rstar(I, 0.0);
    for (std::size_t m = 1; m <= I; ++m) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 1; i + m <= I + 1; ++i) {
            num += paid_scaled.at(i, m);
            den += incurred_scaled.at(i, m);
        }
        if (den == 0.0)
            throw NumericalError("build_features: scaled incurred column " + std::to_string(m) +
                                 " sums to zero");
        rstar[m - 1] = num / den;
    }
    return rstar;
}

FeatureSample make_sample(std::size_t i, std::size_t j, std::size_t I,
                          const Triangle& inc_scaled, const std::vector<double>& rstar,
                          double target) {
    FeatureSample s;
    s.origin = i;
    s.dev = j;
    s.y = target;
    for (std::size_t k = 0; k < kWindow; ++k) {
        const long m = static_cast<long>(j) - 1 - static_cast<long>(k); // lagged dev year
        if (m >= 1) {
            s.x1[k] = inc_scaled.at(i, static_cast<std::size_t>(m));
            s.x2[k] = static_cast<double>(m) / static_cast<double>(I);
            s.x3[k] = rstar[static_cast<std::size_t>(m) - 1];
        }
        // lags before dev year 1 stay zero-padded
    }
    return s;
}

} // namespace

FeatureSet build_features(const CompanyDataSet& data, TriangleKind kind) {
    const Triangle& response = kind == TriangleKind::Paid ? data.paid : data.incurred;
    const std::size_t I = response.origins();
    if (data.paid.origins() != data.incurred.origins())
        throw DataError("build_features: paid and incurred triangles disagree on size");
    if (!response.is_as_reported())
        throw DataError("build_features: triangle must be as-reported");

    const Triangle paid_scaled = scale_by_exposure(data.paid, data.exposure);
    const Triangle incurred_scaled = scale_by_exposure(data.incurred, data.exposure);
    const std::vector<double> rstar = observed_column_ratios(paid_scaled, incurred_scaled);

    const Triangle response_scaled = kind == TriangleKind::Paid ? paid_scaled : incurred_scaled;
    const Triangle inc_scaled = cumulative_to_incremental(response_scaled);

    const DiagonalSplit split = split_last_diagonal(response);

    FeatureSet set;
    for (std::size_t i = 1; i <= I; ++i) {
        for (std::size_t j = 2; j <= I; ++j) {
            if (!split.train.observed(i, j)) continue;
            set.train.push_back(make_sample(i, j, I, inc_scaled, rstar, inc_scaled.at(i, j)));
        }
    }
    for (const auto& cell : split.test) {
        set.test.push_back(make_sample(cell.origin, cell.dev, I, inc_scaled, rstar,
                                       inc_scaled.at(cell.origin, cell.dev)));
    }
    return set;
}

} // namespace macknet
