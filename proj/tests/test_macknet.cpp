#include "doctest.h"

#include "macknet/ensemble.hpp"
#include "macknet/errors.hpp"
#include "macknet/features.hpp"
#include "macknet/macknet.hpp"
#include "support/fixtures.hpp"

#include <cmath>
#include <numeric>

using namespace macknet;

namespace {

/// 10x10 dataset with identical rows, premium 100, paid == incurred;
/// row increments start (10, 5, 3, ...).
CompanyDataSet flat_dataset() {
    const std::vector<double> row{10, 15, 18, 19.5, 20, 20.2, 20.3, 20.35, 20.4, 20.42};
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < 10; ++i)
        rows.emplace_back(row.begin(), row.begin() + static_cast<long>(10 - i));
    CompanyDataSet data;
    data.company_code = "FLAT";
    data.lob = LineOfBusiness::CA;
    data.paid = fixtures::make_triangle(rows, Basis::Cumulative, TriangleKind::Paid);
    data.incurred = fixtures::make_triangle(rows, Basis::Cumulative, TriangleKind::Incurred);
    data.exposure.premiums.assign(10, 100.0);
    return data;
}

/// Network that ignores its input and always outputs `value`.
Network constant_network(double value) {
    Network net(3, 2, 2);
    net.mb5()(0) = value;
    return net;
}

EnsembleConfig tiny_ensemble(std::size_t members, std::uint64_t seed) {
    EnsembleConfig cfg;
    cfg.members = members;
    cfg.master_seed = seed;
    cfg.train.hidden = 4;
    cfg.train.width = 4;
    cfg.train.epochs = 40;
    cfg.train.patience = 0;
    return cfg;
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace

TEST_CASE("build_features") {
    SUBCASE("hand-checkable first sample") {
        const FeatureSet set = build_features(flat_dataset(), TriangleKind::Paid);
        const FeatureSample* s12 = nullptr;
        for (const auto& s : set.train)
            if (s.origin == 1 && s.dev == 2) s12 = &s;
        REQUIRE(s12 != nullptr);
        CHECK(s12->y == doctest::Approx(0.05).epsilon(1e-12));
        CHECK(s12->x1[0] == doctest::Approx(0.10).epsilon(1e-12));
        for (std::size_t k = 1; k < kWindow; ++k) CHECK(s12->x1[k] == 0.0);
        CHECK(s12->x2[0] == doctest::Approx(0.1).epsilon(1e-12)); // DY_1 / I
        for (std::size_t k = 1; k < kWindow; ++k) CHECK(s12->x2[k] == 0.0);
    }
    SUBCASE("paid == incurred makes every ratio entry one") {
        const FeatureSet set = build_features(flat_dataset(), TriangleKind::Paid);
        for (const auto& s : set.train)
            for (std::size_t k = 0; k < kWindow; ++k) {
                const long m = static_cast<long>(s.dev) - 1 - static_cast<long>(k);
                if (m >= 1) CHECK(s.x3[k] == doctest::Approx(1.0).epsilon(1e-12));
            }
    }
    SUBCASE("training samples cover the train region, tests the diagonal") {
        const FeatureSet set = build_features(fixtures::default_synthetic(), TriangleKind::Paid);
        // cells with j >= 2 and i + j <= 10: sum_{j=2..9} (10 - j) = 8+7+...+1
        CHECK(set.train.size() == 36);
        CHECK(set.test.size() == 9);
        for (const auto& s : set.train) CHECK(s.origin + s.dev <= 10);
        for (const auto& s : set.test) CHECK(s.origin + s.dev == 11);
    }
    SUBCASE("padding zeros appear exactly at lags before dev year 1") {
        const FeatureSet set = build_features(fixtures::default_synthetic(), TriangleKind::Paid);
        for (const auto& s : set.train) {
            for (std::size_t k = 0; k < kWindow; ++k) {
                const long m = static_cast<long>(s.dev) - 1 - static_cast<long>(k);
                if (m >= 1) {
                    CHECK(s.x1[k] > 0.0);
                    CHECK(s.x2[k] > 0.0);
                    CHECK(s.x3[k] > 0.0);
                } else {
                    CHECK(s.x1[k] == 0.0);
                    CHECK(s.x2[k] == 0.0);
                    CHECK(s.x3[k] == 0.0);
                }
            }
            CHECK(s.x2[0] == doctest::Approx(static_cast<double>(s.dev - 1) / 10.0));
        }
    }
    SUBCASE("temporal input ordering is oldest first") {
        const FeatureSet set = build_features(fixtures::default_synthetic(), TriangleKind::Paid);
        const FeatureSample& s = set.train.front();
        const Mat x = s.to_input();
        REQUIRE(x.cols() == 8);
        CHECK(x(0, 7) == s.x1[0]); // newest lag in the last column
        CHECK(x(1, 7) == s.x2[0]);
        CHECK(x(2, 0) == s.x3[7]);
    }
    SUBCASE("paid and incurred kinds share x2 and x3") {
        const CompanyDataSet data = fixtures::default_synthetic();
        const FeatureSet p = build_features(data, TriangleKind::Paid);
        const FeatureSet q = build_features(data, TriangleKind::Incurred);
        REQUIRE(p.train.size() == q.train.size());
        for (std::size_t k = 0; k < p.train.size(); ++k) {
            CHECK(p.train[k].x2 == q.train[k].x2);
            CHECK(p.train[k].x3 == q.train[k].x3);
        }
    }
    SUBCASE("zero incurred column is rejected") {
        CompanyDataSet data = flat_dataset();
        for (std::size_t i = 1; i <= 10; ++i)
            if (data.incurred.observed(i, 1)) data.incurred.set(i, 1, 0.0, true);
        CHECK_THROWS_AS(build_features(data, TriangleKind::Paid), NumericalError);
    }
}

TEST_CASE("train_ensemble") {
    const CompanyDataSet data = fixtures::default_synthetic();
    const FeatureSet features = build_features(data, TriangleKind::Paid);

    SUBCASE("K=1 reduces to a single train call with the derived seed") {
        const EnsembleConfig cfg = tiny_ensemble(1, 99);
        const EnsembleResult ens = train_ensemble(features.train, features.test, cfg);
        TrainConfig single = cfg.train;
        single.seed = derive_seed(99, 0);
        const TrainResult direct =
            train(to_samples(features.train), to_samples(features.test), single);
        CHECK((ens.members[0].net.params() - direct.net.params()).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("members differ and runs are reproducible across thread counts") {
        EnsembleConfig cfg = tiny_ensemble(3, 4242);
        const EnsembleResult a = train_ensemble(features.train, features.test, cfg);
        cfg.threads = 3;
        const EnsembleResult b = train_ensemble(features.train, features.test, cfg);
        REQUIRE(a.members.size() == 3);
        CHECK((a.members[0].net.params() - a.members[1].net.params()).cwiseAbs().maxCoeff() >
              1e-9);
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK((a.members[k].net.params() - b.members[k].net.params()).cwiseAbs().maxCoeff() ==
                  0.0);
            CHECK(a.diagnostics[k].seed == b.diagnostics[k].seed);
        }
    }
}

TEST_CASE("complete_square") {
    const CompanyDataSet data = fixtures::default_synthetic();

    SUBCASE("observed region is bit-identical to the input") {
        const CompletedSquare sq = complete_square(constant_network(0.01), data,
                                                   TriangleKind::Paid);
        for (std::size_t i = 1; i <= 10; ++i)
            for (std::size_t j = 1; j + i <= 11; ++j) {
                CHECK(sq.source_observed(i, j));
                CHECK(sq.at(i, j) == data.paid.at(i, j));
            }
    }
    SUBCASE("constant-output network adds c * P_i per step") {
        const double c = 0.02;
        const CompletedSquare sq = complete_square(constant_network(c), data,
                                                   TriangleKind::Paid);
        for (std::size_t i = 2; i <= 10; ++i) {
            for (std::size_t j = 12 - i; j <= 10; ++j) {
                const double inc = sq.at(i, j) - sq.at(i, j - 1);
                CHECK(inc == doctest::Approx(c * data.exposure.at(i)).epsilon(1e-12));
            }
        }
    }
    SUBCASE("one-step case: I=2") {
        CompanyDataSet two;
        two.company_code = "T";
        two.lob = LineOfBusiness::CA;
        two.paid = fixtures::make_triangle({{100, 150}, {90}});
        two.incurred = fixtures::make_triangle({{120, 160}, {115}}, Basis::Cumulative,
                                               TriangleKind::Incurred);
        two.exposure.premiums = {300.0, 280.0};
        const double c = 0.04;
        const CompletedSquare sq = complete_square(constant_network(c), two, TriangleKind::Paid);
        CHECK(sq.at(2, 2) == doctest::Approx(90.0 + 280.0 * c).epsilon(1e-12));
    }
    SUBCASE("single recursion step on a 3x3 triangle") {
        // I=3 keeps the chain-ladder completion of the incurred side valid
        // while the first predicted cell is still a single hand-checkable
        // step: D(3,2) = D(3,1) + P_3 * yhat.
        CompanyDataSet small;
        small.company_code = "S";
        small.lob = LineOfBusiness::CA;
        small.paid = fixtures::hand_3x3();
        small.incurred = fixtures::make_triangle(
            {{110, 190, 205}, {120, 210}, {130}}, Basis::Cumulative, TriangleKind::Incurred);
        small.exposure.premiums = {400.0, 450.0, 500.0};
        const double c = 0.05;
        const CompletedSquare sq = complete_square(constant_network(c), small,
                                                   TriangleKind::Paid);
        CHECK(sq.at(3, 2) == doctest::Approx(120.0 + 500.0 * c).epsilon(1e-12));
        CHECK(sq.at(3, 3) == doctest::Approx(120.0 + 2.0 * 500.0 * c).epsilon(1e-12));
        CHECK(sq.at(2, 3) == doctest::Approx(200.0 + 450.0 * c).epsilon(1e-12));
    }
}

TEST_CASE("average_square") {
    const CompanyDataSet data = fixtures::default_synthetic();
    const CompletedSquare a = complete_square(constant_network(0.01), data, TriangleKind::Paid);
    const CompletedSquare b = complete_square(constant_network(0.03), data, TriangleKind::Paid);

    SUBCASE("identical members average to themselves") {
        const CompletedSquare m = average_square({a, a, a});
        for (std::size_t i = 1; i <= 10; ++i)
            for (std::size_t j = 1; j <= 10; ++j)
                CHECK(m.at(i, j) == doctest::Approx(a.at(i, j)).epsilon(1e-15));
    }
    SUBCASE("cellwise mean and permutation invariance") {
        const CompletedSquare m1 = average_square({a, b});
        const CompletedSquare m2 = average_square({b, a});
        for (std::size_t i = 1; i <= 10; ++i)
            for (std::size_t j = 1; j <= 10; ++j) {
                CHECK(m1.at(i, j) ==
                      doctest::Approx((a.at(i, j) + b.at(i, j)) / 2.0).epsilon(1e-15));
                CHECK(m1.at(i, j) == m2.at(i, j));
            }
        // Lower-cell example: mean of 10 and 20 is 15.
        CompletedSquare x = a, y = a;
        x.set(10, 10, 10.0);
        y.set(10, 10, 20.0);
        CHECK(average_square({x, y}).at(10, 10) == doctest::Approx(15.0));
    }
}

TEST_CASE("macknet_parameters") {
    SUBCASE("chain-ladder-consistent square reproduces the classic factors") {
        const CompanyDataSet data = fixtures::default_synthetic();
        // Perturb the observed triangle so the classic factors are not
        // trivially constant per column.
        Triangle t = data.paid;
        Rng rng(5);
        for (std::size_t i = 1; i <= 10; ++i)
            for (std::size_t j = 1; j + i <= 11; ++j)
                t.set(i, j, t.at(i, j) * (1.0 + 0.05 * rng.uniform(-1.0, 1.0)), true);
        const auto f = dev_factors(t);
        const CompletedSquare cl = chain_ladder_project(t, f);
        const MackNetParameters p = macknet_parameters(cl);
        for (std::size_t j = 2; j <= 10; ++j)
            CHECK(p.fp(j) == doctest::Approx(f[j - 2]).epsilon(1e-10));
    }
    SUBCASE("constant-ratio square: f = 1.5 everywhere, zero variance") {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < 4; ++i) {
            std::vector<double> row{100.0 * (1.0 + 0.1 * static_cast<double>(i))};
            for (std::size_t j = 1; j < 4; ++j) row.push_back(row.back() * 1.5);
            rows.push_back(row);
        }
        Triangle full(4, 4, Basis::Cumulative, TriangleKind::Paid);
        for (std::size_t i = 1; i <= 4; ++i)
            for (std::size_t j = 1; j <= 4; ++j)
                full.set(i, j, rows[i - 1][j - 1], i + j <= 5);
        CompletedSquare sq(full);
        for (std::size_t i = 1; i <= 4; ++i)
            for (std::size_t j = 1; j <= 4; ++j)
                if (!sq.source_observed(i, j)) sq.set(i, j, rows[i - 1][j - 1]);
        const MackNetParameters p = macknet_parameters(sq);
        for (std::size_t j = 2; j <= 4; ++j) {
            CHECK(p.fp(j) == doctest::Approx(1.5).epsilon(1e-12));
            CHECK(p.fb(j) == doctest::Approx(1.5).epsilon(1e-12));
            CHECK(p.s2p(j) == doctest::Approx(0.0).epsilon(1e-12));
        }
    }
    SUBCASE("full-column switch equates f^p with fbar") {
        const CompanyDataSet data = fixtures::default_synthetic();
        const CompletedSquare cl =
            chain_ladder_project(data.paid, dev_factors(data.paid));
        MackNetOptions full_cols;
        full_cols.predicted_row_sums = false;
        const MackNetParameters p = macknet_parameters(cl, full_cols);
        for (std::size_t j = 2; j <= 10; ++j)
            CHECK(p.fp(j) == doctest::Approx(p.fb(j)).epsilon(1e-14));
    }
}

TEST_CASE("macknet_bootstrap") {
    const CompanyDataSet data = fixtures::default_synthetic();

    SUBCASE("zero variance collapses to the ensemble reserve") {
        const CompletedSquare cl = chain_ladder_project(data.paid, dev_factors(data.paid));
        // Noise-free synthetic data: every ratio equals the column factor,
        // so all sigma vanish and the distribution is degenerate.
        const MackNetParameters p = macknet_parameters(cl);
        BootstrapConfig cfg;
        cfg.n_sims = 100;
        cfg.seed = 1;
        const ReserveDistribution dist = macknet_bootstrap(cl, p, cfg);
        CHECK(dist.deterministic_reserve == doctest::Approx(cl.total_reserve()));
        for (double r : dist.total_reserve)
            CHECK(r == doctest::Approx(cl.total_reserve()).epsilon(1e-10));
    }

    SUBCASE("zero-mean bootstrap mean tracks the f^p projection of the diagonal") {
        // A noisy square: chain-ladder completion of a perturbed triangle,
        // then lower-cell noise so the hybrid sigma parameters are positive.
        Triangle t = data.paid;
        Rng rng(17);
        for (std::size_t i = 1; i <= 10; ++i)
            for (std::size_t j = 1; j + i <= 11; ++j)
                t.set(i, j, t.at(i, j) * (1.0 + 0.08 * rng.uniform(-1.0, 1.0)), true);
        CompletedSquare sq = chain_ladder_project(t, dev_factors(t));
        for (std::size_t i = 1; i <= 10; ++i)
            for (std::size_t j = 1; j <= 10; ++j)
                if (!sq.source_observed(i, j))
                    sq.set(i, j, sq.at(i, j) * (1.0 + 0.04 * rng.uniform(-1.0, 1.0)));

        const MackNetParameters p = macknet_parameters(sq);
        BootstrapConfig cfg;
        cfg.n_sims = 10000;
        cfg.seed = 8;
        const ReserveDistribution dist = macknet_bootstrap(sq, p, cfg);

        // Oracle: deterministic projection of the observed diagonal with f^p.
        double oracle = 0.0;
        for (std::size_t i = 2; i <= 10; ++i) {
            double value = t.at(i, 11 - i);
            for (std::size_t j = 12 - i; j <= 10; ++j) value *= p.fp(j);
            oracle += value - t.at(i, 11 - i);
        }
        CHECK(std::abs(mean(dist.total_reserve) - oracle) / oracle < 0.005);
    }

    SUBCASE("same seed is bit identical") {
        Triangle t = data.paid;
        Rng rng(19);
        for (std::size_t i = 1; i <= 10; ++i)
            for (std::size_t j = 1; j + i <= 11; ++j)
                t.set(i, j, t.at(i, j) * (1.0 + 0.05 * rng.uniform(-1.0, 1.0)), true);
        const CompletedSquare sq = chain_ladder_project(t, dev_factors(t));
        const MackNetParameters p = macknet_parameters(sq);
        BootstrapConfig cfg;
        cfg.n_sims = 500;
        cfg.seed = 3;
        const ReserveDistribution a = macknet_bootstrap(sq, p, cfg);
        const ReserveDistribution b = macknet_bootstrap(sq, p, cfg);
        CHECK(a.total_reserve == b.total_reserve);
        CHECK(a.ultimate_by_origin == b.ultimate_by_origin);
    }
}

TEST_CASE("ensemble averaging reduces estimator variance across seeds") {
    const CompanyDataSet data = fixtures::default_synthetic();
    const FeatureSet features = build_features(data, TriangleKind::Paid);

    const auto ensemble_reserve = [&](std::size_t members, std::uint64_t seed) {
        EnsembleConfig cfg = tiny_ensemble(members, seed);
        cfg.train.epochs = 30;
        const EnsembleResult ens = train_ensemble(features.train, features.test, cfg);
        std::vector<CompletedSquare> squares;
        for (const auto& m : ens.members)
            squares.push_back(complete_square(m.net, data, TriangleKind::Paid));
        return average_square(squares).total_reserve();
    };

    const auto var_over_seeds = [&](std::size_t members) {
        std::vector<double> vals;
        for (std::uint64_t s = 1; s <= 6; ++s) vals.push_back(ensemble_reserve(members, s * 101));
        const double m = mean(vals);
        double acc = 0.0;
        for (double v : vals) acc += (v - m) * (v - m);
        return acc / static_cast<double>(vals.size());
    };

    CHECK(var_over_seeds(3) <= var_over_seeds(1));
}

TEST_CASE("fit_macknet end to end") {
    const CompanyDataSet data = fixtures::default_synthetic();
    EnsembleConfig ens = tiny_ensemble(2, 31);
    ens.train.epochs = 25;
    BootstrapConfig boot;
    boot.n_sims = 200;
    boot.seed = 5;

    SUBCASE("deterministic across runs and thread counts") {
        const MackNetFit a = fit_macknet(data, TriangleKind::Paid, ens, boot);
        EnsembleConfig ens2 = ens;
        ens2.threads = 2;
        const MackNetFit b = fit_macknet(data, TriangleKind::Paid, ens2, boot);
        CHECK(a.distribution.total_reserve == b.distribution.total_reserve);
        for (std::size_t i = 1; i <= 10; ++i)
            for (std::size_t j = 1; j <= 10; ++j)
                CHECK(a.ensemble_square.at(i, j) == b.ensemble_square.at(i, j));
        CHECK(a.members.size() == 2);
        CHECK(a.members[0].epochs_run == 25);
    }
    SUBCASE("observed region preserved through the pipeline") {
        const MackNetFit fit = fit_macknet(data, TriangleKind::Paid, ens, boot);
        for (std::size_t i = 1; i <= 10; ++i)
            for (std::size_t j = 1; j + i <= 11; ++j)
                CHECK(fit.ensemble_square.at(i, j) == data.paid.at(i, j));
        CHECK(fit.distribution.model_kind == ModelKind::MackNetPaid);
        CHECK(std::isfinite(fit.distribution.deterministic_reserve));
    }
}
