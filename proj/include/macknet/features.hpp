#ifndef MACKNET_FEATURES_HPP
#define MACKNET_FEATURES_HPP

#include "macknet/neural.hpp"
#include "macknet/triangle.hpp"

#include <array>
#include <vector>

namespace macknet {

constexpr std::size_t kWindow = 8;

/// One supervised sample for the sequence model. The three explanatory
/// sequences are stored most-recent-lag first (index k holds lag k+1,
/// i.e. development year j-1-k), zero-padded where the lag precedes
/// development year 1:
///   x1 - lagged scaled increments of the modelled kind,
///   x2 - scaled development-year indices DY/I,
///   x3 - column ratios of scaled cumulative paid to scaled incurred.
struct FeatureSample {
    std::array<double, kWindow> x1{};
    std::array<double, kWindow> x2{};
    std::array<double, kWindow> x3{};
    double y = 0.0;
    std::size_t origin = 0;
    std::size_t dev = 0;

    /// 3 x 8 network input; columns run oldest to newest so the final
    /// hidden state sits on the most recent lag.
    Mat to_input() const;

    Sample to_sample() const { return {to_input(), y}; }
};

struct FeatureSet {
    std::vector<FeatureSample> train; // cells with i + j <= I, j >= 2
    std::vector<FeatureSample> test;  // the held-out diagonal, i + j = I + 1, i < I
};

/// Builds the supervised samples for one company and response kind.
/// Targets are scaled increments of `kind`; the paid-to-incurred ratio
/// sequence is computed per column over all observed rows of the
/// as-reported triangle.
FeatureSet build_features(const CompanyDataSet& data, TriangleKind kind);

std::vector<Sample> to_samples(const std::vector<FeatureSample>& features);

} // namespace macknet

#endif
