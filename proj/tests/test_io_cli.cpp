#include "doctest.h"

#include "commands.hpp"
#include "macknet/io.hpp"
#include "macknet/mack.hpp"
#include "support/fixtures.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace macknet;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
};

int run_cmd(const std::vector<std::string>& args, std::string* out_text = nullptr,
        std::string* err_text = nullptr) {
    std::ostringstream out, err;
    const int code = macknet::cli::run_cli(args, out, err);
    if (out_text != nullptr) *out_text = out.str();
    if (err_text != nullptr) *err_text = err.str();
    return code;
}

} // namespace

TEST_CASE("triangle json and csv round trip") {
    CompanyDataSet data = fixtures::default_synthetic();
    data.paid.first_origin_year = 1988;
    const Json j = triangle_to_json(data.paid, "SYN1", LineOfBusiness::CA);
    const Triangle back = triangle_from_json(j);
    CHECK(back.origins() == 10);
    CHECK(back.first_origin_year == 1988);
    for (std::size_t i = 1; i <= 10; ++i)
        for (std::size_t d = 1; d <= 10; ++d) {
            CHECK(back.observed(i, d) == data.paid.observed(i, d));
            if (back.observed(i, d)) CHECK(back.at(i, d) == data.paid.at(i, d));
        }

    const std::string csv = triangle_to_csv(data.paid);
    CHECK(csv.rfind("origin,dev,value\n", 0) == 0);
    // 55 observed cells + header
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 56);
}

TEST_CASE("distribution csv round trip is exact") {
    Triangle t = fixtures::hand_3x3();
    BootstrapConfig cfg;
    cfg.n_sims = 137;
    cfg.seed = 99;
    const ReserveDistribution dist = bootstrap_mack(t, cfg);

    TempDir dir("macknet_io_dist");
    const fs::path p = dir.path / "sims.csv";
    write_text_atomic(p.string(), distribution_to_csv(dist));
    const ReserveDistribution back = distribution_from_csv(p.string());
    REQUIRE(back.n_sims() == dist.n_sims());
    REQUIRE(back.n_origins == dist.n_origins);
    CHECK(back.total_reserve == dist.total_reserve);
    CHECK(back.ultimate_by_origin == dist.ultimate_by_origin);
}

TEST_CASE("distribution summary json") {
    Triangle t = fixtures::hand_3x3();
    BootstrapConfig cfg;
    cfg.n_sims = 500;
    cfg.seed = 4;
    const ReserveDistribution dist = bootstrap_mack(t, cfg);
    const Json j = distribution_summary_json(dist, "");
    CHECK(j.at("model") == "mack_paid");
    CHECK(j.at("n_sims") == 500);
    CHECK_FALSE(j.contains("generated_at"));
    const auto& q = j.at("total_reserve").at("quantiles");
    CHECK(q.at("0.995").get<double>() >= q.at("0.5").get<double>());
    CHECK(j.at("total_ultimate").at("cv").get<double>() > 0.0);

    const Json stamped = distribution_summary_json(dist, "2026-01-01T00:00:00Z");
    CHECK(stamped.at("generated_at") == "2026-01-01T00:00:00Z");
}

TEST_CASE("cli ingest") {
    TempDir dir("macknet_cli_ingest");
    const std::string csv = (dir.path / "ca.csv").string();
    fixtures::write_schedule_p_csv(csv, {fixtures::default_synthetic()});
    const std::string out_dir = (dir.path / "out").string();

    SUBCASE("success writes canonical artifacts") {
        std::string out;
        const int code = run_cmd({"ingest", "--data", csv, "--lob", "CA", "--out", out_dir}, &out);
        CHECK(code == 0);
        CHECK(fs::exists(fs::path(out_dir) / "CA_SYN1_triangles.json"));
        CHECK(fs::exists(fs::path(out_dir) / "CA_SYN1_paid.csv"));
        CHECK(out.find("SYN1") != std::string::npos);
        const Json j = Json::parse(slurp(fs::path(out_dir) / "CA_SYN1_triangles.json"));
        CHECK(j.at("paid").at("mask").size() == 100);
    }
    SUBCASE("missing column names the column and exits 2") {
        const std::string bad = (dir.path / "bad.csv").string();
        std::ofstream f(bad);
        f << "GRCODE,GRNAME,AccidentYear,DevelopmentLag,IncurLoss_X,BulkLoss_X,"
             "EarnedPremNet_X\n";
        f << "1,A,1988,1,5,1,10\n";
        f.close();
        std::string out, err;
        const int code = run_cmd({"ingest", "--data", bad, "--out", out_dir}, &out, &err);
        CHECK(code == 2);
        CHECK(err.find("CumPaidLoss") != std::string::npos);
    }
}

TEST_CASE("cli fit mack is deterministic and matches the estimator") {
    TempDir dir("macknet_cli_fit");
    const std::string csv = (dir.path / "ca.csv").string();
    fixtures::write_schedule_p_csv(csv, {fixtures::default_synthetic()});
    const std::string out_dir = (dir.path / "out").string();

    const std::vector<std::string> args{"fit",   "--data", csv,     "--lob", "CA",
                                        "--out", out_dir,  "--kind", "paid"};
    std::string out1;
    REQUIRE(run_cmd(args, &out1) == 0);
    const fs::path params = fs::path(out_dir) / "CA_SYN1_mack_paid_params.json";
    REQUIRE(fs::exists(params));
    const std::string bytes1 = slurp(params);
    const Json j = Json::parse(bytes1);
    CHECK(j.at("dev_factors")[0].get<double>() == doctest::Approx(1.8).epsilon(1e-12));

    std::string out2;
    REQUIRE(run_cmd(args, &out2) == 0);
    CHECK(slurp(params) == bytes1); // byte-identical rerun
    CHECK(out1 == out2);
    CHECK(fs::exists(fs::path(out_dir) / "CA_paid_params_avg.csv"));
}

TEST_CASE("cli simulate and report") {
    TempDir dir("macknet_cli_sim");
    const std::string csv = (dir.path / "ca.csv").string();
    fixtures::write_schedule_p_csv(csv, {fixtures::default_synthetic("SYN1"),
                                         fixtures::default_synthetic("SYN2")});
    const std::string out_dir = (dir.path / "out").string();

    SUBCASE("seed is required") {
        std::string out, err;
        const int code =
            run_cmd({"simulate", "--data", csv, "--out", out_dir}, &out, &err);
        CHECK(code != 0);
        CHECK(err.find("--seed") != std::string::npos);
    }

    SUBCASE("degenerate sigma on noise-free data, byte-identical reruns") {
        const std::vector<std::string> args{
            "simulate", "--data", csv,    "--lob",  "CA",  "--out",          out_dir,
            "--kind",   "paid",   "--model", "mack", "--sims", "100",
            "--seed",   "42",     "--no-timestamp"};
        REQUIRE(run_cmd(args) == 0);
        const fs::path sims = fs::path(out_dir) / "CA_SYN1_mack_paid_sims.csv";
        const fs::path summary = fs::path(out_dir) / "CA_SYN1_mack_paid_summary.json";
        REQUIRE(fs::exists(sims));
        const std::string sims1 = slurp(sims);
        const std::string sum1 = slurp(summary);

        const Json j = Json::parse(sum1);
        CHECK(j.at("total_reserve").at("sd").get<double>() == doctest::Approx(0.0));

        REQUIRE(run_cmd(args) == 0);
        CHECK(slurp(sims) == sims1);
        CHECK(slurp(summary) == sum1);
    }

    SUBCASE("report on perfect predictions shows zero errors") {
        const std::vector<std::string> sim_args{
            "simulate", "--data", csv,    "--lob",  "CA",  "--out",          out_dir,
            "--kind",   "paid",   "--model", "both", "--sims", "60",
            "--members", "2",     "--epochs", "15",  "--seed", "7",
            "--no-timestamp"};
        REQUIRE(run_cmd(sim_args) == 0);

        std::string out;
        const int code = run_cmd({"report", "--data", csv, "--lob", "CA", "--out", out_dir,
                              "--kind", "paid", "--model", "both"},
                             &out);
        REQUIRE(code == 0);
        const std::string report = slurp(fs::path(out_dir) / "CA_report.csv");
        // Mack on noise-free constant-ratio data predicts the realized
        // ultimate exactly.
        CHECK(report.find("CA,mack,paid,2,0.0000,0.0000") != std::string::npos);
        CHECK(report.find("cv_share_macknet_lower") != std::string::npos);
        CHECK(out.find("%RMSE") != std::string::npos);
    }

    SUBCASE("numerical failure maps to exit 4") {
        // A zero first column breaks the development-factor denominator.
        const std::string zero_csv = (dir.path / "zero.csv").string();
        std::ofstream f(zero_csv);
        f << "GRCODE,GRNAME,AccidentYear,DevelopmentYear,DevelopmentLag,IncurLoss_X,"
             "CumPaidLoss_X,BulkLoss_X,EarnedPremNet_X\n";
        const int vals[3][3] = {{0, 5, 8}, {0, 6, 0}, {0, 0, 0}};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3 - i; ++j)
                f << "7,Zed," << (1988 + i) << ',' << (1988 + i + j) << ',' << (j + 1) << ','
                  << vals[i][j] << ',' << vals[i][j] << ",0,100\n";
        f.close();
        std::string out, err;
        const int code = run_cmd({"fit", "--data", zero_csv, "--lob", "CA", "--out",
                                  (dir.path / "zout").string(), "--kind", "paid"},
                                 &out, &err);
        CHECK(code == 4);
        CHECK(err.find("denominator") != std::string::npos);
    }

    SUBCASE("kind both produces artifacts for both series") {
        const std::vector<std::string> args{
            "simulate", "--data", csv, "--lob", "CA", "--out", out_dir, "--kind", "both",
            "--model", "mack", "--sims", "50", "--seed", "3", "--no-timestamp",
            "--companies", "SYN1"};
        REQUIRE(run_cmd(args) == 0);
        CHECK(fs::exists(fs::path(out_dir) / "CA_SYN1_mack_paid_sims.csv"));
        CHECK(fs::exists(fs::path(out_dir) / "CA_SYN1_mack_incurred_sims.csv"));
    }

    SUBCASE("report without simulate outputs exits 3") {
        std::string out, err;
        const int code = run_cmd({"report", "--data", csv, "--lob", "CA", "--out",
                              (dir.path / "empty").string(), "--kind", "paid"},
                             &out, &err);
        CHECK(code == 3);
        CHECK(err.find("simulate") != std::string::npos);
    }
}

TEST_CASE("cli fit reproduces the hand triangle factors") {
    TempDir dir("macknet_cli_hand");
    const std::string csv = (dir.path / "hand.csv").string();
    {
        std::ofstream f(csv);
        f << "GRCODE,GRNAME,AccidentYear,DevelopmentYear,DevelopmentLag,IncurLoss_X,"
             "CumPaidLoss_X,BulkLoss_X,EarnedPremNet_X\n";
        // the worked 3x3 triangle, incurred = paid
        const int paid[3][3] = {{100, 180, 200}, {110, 200, 0}, {120, 0, 0}};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3 - i; ++j)
                f << "9,Hand,19" << (88 + i) << ',' << (1988 + i + j) << ',' << (j + 1) << ','
                  << paid[i][j] << ',' << paid[i][j] << ",0,1000\n";
    }
    const std::string out_dir = (dir.path / "out").string();
    REQUIRE(run_cmd({"fit", "--data", csv, "--lob", "CA", "--out", out_dir, "--kind", "paid"}) ==
            0);
    const Json j = Json::parse(slurp(fs::path(out_dir) / "CA_9_mack_paid_params.json"));
    CHECK(j.at("dev_factors")[0].get<double>() == doctest::Approx(1.809524).epsilon(1e-6));
    CHECK(j.at("dev_factors")[1].get<double>() == doctest::Approx(1.111111).epsilon(1e-6));
}

TEST_CASE("cli fit --bench sweeps input sizes") {
    TempDir dir("macknet_cli_bench");
    const std::string csv = (dir.path / "ca.csv").string();
    fixtures::write_schedule_p_csv(csv, {fixtures::default_synthetic()});
    const std::string out_dir = (dir.path / "out").string();
    std::string out;
    const int code = run_cmd({"fit", "--data", csv, "--lob", "CA", "--out", out_dir, "--kind",
                              "paid", "--bench", "--members", "2", "--epochs", "10", "--seed",
                              "3"},
                             &out);
    REQUIRE(code == 0);
    const std::string bench = slurp(fs::path(out_dir) / "CA_bench_paid.csv");
    CHECK(bench.rfind("years,time_seconds,error_pct,time_index,error_index\n", 0) == 0);
    // six rows: 5..10 years
    CHECK(std::count(bench.begin(), bench.end(), '\n') == 7);
    CHECK(bench.find("\n5,") != std::string::npos);
    CHECK(bench.find("\n10,") != std::string::npos);
    // the 5-year row is the index base
    CHECK(bench.find(",100.00,100.00") != std::string::npos);
}

TEST_CASE("cli show-config prints defaults") {
    std::string out;
    const int code = run_cmd({"--show-config"}, &out);
    CHECK(code == 0);
    CHECK_FALSE(out.empty());
}
