#ifndef MACKNET_TESTS_FIXTURES_HPP
#define MACKNET_TESTS_FIXTURES_HPP

#include "macknet/rng.hpp"
#include "macknet/schedule_p.hpp"
#include "macknet/triangle.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace fixtures {

using namespace macknet;

/// Triangle from ragged rows; as-reported when row i has I+1-i cells.
inline Triangle make_triangle(const std::vector<std::vector<double>>& rows,
                              Basis basis = Basis::Cumulative,
                              TriangleKind kind = TriangleKind::Paid) {
    const std::size_t I = rows.size();
    std::size_t J = 0;
    for (const auto& row : rows) J = std::max(J, row.size());
    Triangle t(I, std::max(I, J), basis, kind);
    for (std::size_t i = 1; i <= I; ++i)
        for (std::size_t j = 1; j <= rows[i - 1].size(); ++j)
            t.set(i, j, rows[i - 1][j - 1], true);
    return t;
}

/// The worked 3x3 triangle: f = (380/210, 200/180).
inline Triangle hand_3x3() {
    return make_triangle({{100, 180, 200}, {110, 200}, {120}});
}

/// Random positive as-reported triangle with link ratios in [1, 2].
inline Triangle random_triangle(std::size_t I, Rng& rng) {
    std::vector<std::vector<double>> rows(I);
    for (std::size_t i = 0; i < I; ++i) {
        double value = rng.uniform(100.0, 1000.0);
        rows[i].push_back(value);
        for (std::size_t j = 1; j < I - i; ++j) {
            value *= rng.uniform(1.0, 2.0);
            rows[i].push_back(value);
        }
    }
    return make_triangle(rows);
}

/// Noise-free dataset whose paid rows follow the exact factor sequence
/// and whose incurred cells sit between paid and ultimate (case reserves
/// cover `case_share` of the outstanding amount). Both full squares are
/// populated, so realized ultimates are available as ground truth.
inline CompanyDataSet constant_ratio_dataset(std::size_t I, const std::vector<double>& factors,
                                             double first_loss_ratio,
                                             const std::vector<double>& premiums,
                                             double case_share = 0.8,
                                             const std::string& code = "SYN1") {
    CompanyDataSet data;
    data.company_code = code;
    data.company_name = "Synthetic " + code;
    data.lob = LineOfBusiness::CA;
    data.exposure.premiums = premiums;

    Triangle paid_full(I, I, Basis::Cumulative, TriangleKind::Paid);
    Triangle inc_full(I, I, Basis::Cumulative, TriangleKind::Incurred);
    for (std::size_t i = 1; i <= I; ++i) {
        double value = first_loss_ratio * premiums[i - 1];
        std::vector<double> row{value};
        for (std::size_t j = 2; j <= I; ++j) {
            value *= factors[j - 2];
            row.push_back(value);
        }
        const double ultimate = row.back();
        for (std::size_t j = 1; j <= I; ++j) {
            paid_full.set(i, j, row[j - 1], true);
            inc_full.set(i, j, row[j - 1] + case_share * (ultimate - row[j - 1]), true);
        }
    }

    Triangle paid = paid_full;
    Triangle incurred = inc_full;
    for (std::size_t i = 1; i <= I; ++i)
        for (std::size_t j = 1; j <= I; ++j) {
            const bool keep = i + j <= I + 1;
            paid.set_observed(i, j, keep);
            incurred.set_observed(i, j, keep);
        }
    data.paid = paid;
    data.incurred = incurred;
    data.paid_full = paid_full;
    data.incurred_full = inc_full;
    return data;
}

inline std::vector<double> default_factors_10() {
    return {1.8, 1.4, 1.2, 1.12, 1.08, 1.05, 1.03, 1.02, 1.01};
}

inline CompanyDataSet default_synthetic(const std::string& code = "SYN1") {
    std::vector<double> premiums;
    for (std::size_t i = 0; i < 10; ++i) premiums.push_back(1000.0 + 20.0 * static_cast<double>(i));
    return constant_ratio_dataset(10, default_factors_10(), 0.25, premiums, 0.8, code);
}

/// Writes datasets in the CAS Schedule P layout (suffix _X) so the CLI
/// and loader can be driven end to end from synthetic data.
inline void write_schedule_p_csv(const std::string& path,
                                 const std::vector<CompanyDataSet>& datasets,
                                 double bulk_share = 0.0) {
    std::ofstream out(path);
    out << "GRCODE,GRNAME,AccidentYear,DevelopmentYear,DevelopmentLag,IncurLoss_X,"
           "CumPaidLoss_X,BulkLoss_X,EarnedPremDIR_X,EarnedPremCeded_X,EarnedPremNet_X\n";
    char buf[32];
    const auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    for (const auto& data : datasets) {
        const std::size_t I = data.paid_full.origins();
        for (std::size_t i = 1; i <= I; ++i) {
            for (std::size_t j = 1; j <= I; ++j) {
                const int year = 1987 + static_cast<int>(i);
                const double paid = data.paid_full.at(i, j);
                const double incurred = data.incurred_full.at(i, j);
                const double bulk = bulk_share * (incurred - paid);
                out << data.company_code << ',' << data.company_name << ',' << year << ','
                    << (year + static_cast<int>(j) - 1) << ',' << j << ','
                    << fmt(incurred + bulk) << ',' << fmt(paid) << ',' << fmt(bulk) << ','
                    << fmt(data.exposure.at(i)) << ",0," << fmt(data.exposure.at(i)) << '\n';
            }
        }
    }
}

} // namespace fixtures

#endif
