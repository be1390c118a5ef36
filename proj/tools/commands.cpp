#include "commands.hpp"

#include "macknet/ensemble.hpp"
#include "macknet/errors.hpp"
#include "macknet/eval.hpp"
#include "macknet/io.hpp"
#include "macknet/mack.hpp"
#include "macknet/macknet.hpp"
#include "macknet/parallel.hpp"
#include "macknet/schedule_p.hpp"

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace macknet::cli {
namespace {

namespace fs = std::filesystem;

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string fixed(double v, int prec) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    return buf;
}

std::string iso_timestamp() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

struct Options {
    std::string data;
    std::string companies = "all";
    std::string out = ".";
    std::string in; // report: directory with simulate outputs (defaults to --out)
    std::string lob = "CA";
    std::string kind = "paid";
    std::string model = "mack";
    std::uint64_t seed = 0;
    std::size_t sims = 10000;
    std::size_t members = 20;
    std::size_t epochs = 500;
    std::size_t patience = 50;
    std::size_t hidden = 16;
    std::size_t width = 16;
    std::size_t threads = 1;
    double learning_rate = 0.01;
    double dropout = 0.05;
    bool no_timestamp = false;
    bool no_net_bulk = false;
    bool no_process_variance = false;
    bool bench = false;
};

std::vector<TriangleKind> kinds_of(const Options& opt) {
    if (opt.kind == "both") return {TriangleKind::Paid, TriangleKind::Incurred};
    return {kind_from_string(opt.kind)};
}

std::vector<std::string> models_of(const Options& opt) {
    if (opt.model == "both") return {"mack", "macknet"};
    if (opt.model != "mack" && opt.model != "macknet")
        throw DataError("unknown model '" + opt.model + "' (expected mack, macknet or both)");
    return {opt.model};
}

SchedulePOptions schedule_p_options(const Options& opt) {
    SchedulePOptions sp;
    sp.net_bulk_reserve = !opt.no_net_bulk;
    return sp;
}

TrainConfig train_config(const Options& opt) {
    TrainConfig cfg;
    cfg.learning_rate = opt.learning_rate;
    cfg.dropout = opt.dropout;
    cfg.epochs = opt.epochs;
    cfg.patience = opt.patience;
    cfg.hidden = opt.hidden;
    cfg.width = opt.width;
    return cfg;
}

// Stream ids for per-company seed derivation. Companies are keyed by the
// hash of their code so a company's results do not depend on which other
// companies are in the run.
std::uint64_t company_seed(const Options& opt, const std::string& code) {
    return derive_seed(opt.seed, fnv1a64(code));
}
std::uint64_t boot_stream(TriangleKind kind, bool macknet_model) {
    return (macknet_model ? 4u : 0u) + (kind == TriangleKind::Incurred ? 1u : 0u);
}
constexpr std::uint64_t kEnsembleStreamBase = 16;

BootstrapConfig boot_config(const Options& opt, std::uint64_t seed) {
    BootstrapConfig cfg;
    cfg.n_sims = opt.sims;
    cfg.seed = seed;
    cfg.process_variance = !opt.no_process_variance;
    return cfg;
}

EnsembleConfig ensemble_config(const Options& opt, std::uint64_t master_seed,
                               std::size_t threads) {
    EnsembleConfig cfg;
    cfg.members = opt.members;
    cfg.master_seed = master_seed;
    cfg.train = train_config(opt);
    cfg.threads = threads;
    return cfg;
}

std::vector<std::string> resolve_companies(const Options& opt, std::ostream& log) {
    std::vector<std::string> codes;
    if (opt.companies == "all") {
        for (const auto& row : scan_schedule_p(opt.data)) {
            try {
                load_schedule_p(opt.data, lob_from_string(opt.lob), row.company_code,
                                schedule_p_options(opt));
                codes.push_back(row.company_code);
            } catch (const DataError& e) {
                log << "skipping company " << row.company_code << ": " << e.what() << "\n";
            }
        }
    } else if (!opt.companies.empty() && opt.companies.front() == '@') {
        std::ifstream in(opt.companies.substr(1));
        if (!in) throw DataError("cannot open company list '" + opt.companies.substr(1) + "'");
        std::string line;
        while (std::getline(in, line)) {
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
            if (!line.empty() && line.front() != '#') codes.push_back(line);
        }
    } else {
        std::stringstream ss(opt.companies);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) codes.push_back(item);
        }
    }
    // Numeric codes sort numerically, anything else lexicographically.
    const auto key = [](const std::string& s) {
        for (char c : s)
            if (!std::isdigit(static_cast<unsigned char>(c))) return std::pair<long, std::string>{-1, s};
        return std::pair<long, std::string>{std::stol(s), s};
    };
    std::sort(codes.begin(), codes.end(),
              [&](const std::string& a, const std::string& b) { return key(a) < key(b); });
    codes.erase(std::unique(codes.begin(), codes.end()), codes.end());
    if (codes.empty()) throw DataError("no companies selected");
    return codes;
}

std::string artifact_prefix(const Options& opt, const std::string& code) {
    return (fs::path(opt.out) / (opt.lob + "_" + code)).string();
}

// ----------------------------------------------------------------------
// ingest

Json company_to_json(const CompanyDataSet& data) {
    Json j;
    j["company"] = data.company_code;
    j["name"] = data.company_name;
    j["lob"] = to_string(data.lob);
    j["premiums"] = data.exposure.premiums;
    j["paid"] = triangle_to_json(data.paid, data.company_code, data.lob);
    j["incurred"] = triangle_to_json(data.incurred, data.company_code, data.lob);
    return j;
}

int cmd_ingest(const Options& opt, std::ostream& out, std::ostream& err) {
    fs::create_directories(opt.out);
    const auto codes = resolve_companies(opt, err);
    const LineOfBusiness lob = lob_from_string(opt.lob);

    out << "company,name,cells,premium_total\n";
    for (const auto& code : codes) {
        const CompanyDataSet data =
            load_schedule_p(opt.data, lob, code, schedule_p_options(opt));
        const std::string prefix = artifact_prefix(opt, code);
        write_text_atomic(prefix + "_triangles.json", company_to_json(data).dump(2) + "\n");
        write_text_atomic(prefix + "_paid.csv", triangle_to_csv(data.paid));
        write_text_atomic(prefix + "_incurred.csv", triangle_to_csv(data.incurred));

        double premium_total = 0.0;
        for (double p : data.exposure.premiums) premium_total += p;
        out << code << ',' << data.company_name << ',' << data.paid.observed_count() << ','
            << fixed(premium_total, 0) << '\n';
    }
    out << codes.size() << " companies written to " << opt.out << "\n";
    return 0;
}

// ----------------------------------------------------------------------
// fit

struct FitRecord {
    std::string code;
    std::string model;
    TriangleKind kind = TriangleKind::Paid;
    std::vector<double> f;      // development factors, j=2..I
    std::vector<double> s2;     // variance parameters
    double det_reserve = 0.0;
    double det_ultimate = 0.0;
};

FitRecord fit_mack_one(const CompanyDataSet& data, TriangleKind kind) {
    const Triangle& t = kind == TriangleKind::Paid ? data.paid : data.incurred;
    const MackParameters params = estimate_mack(t);
    const CompletedSquare central = chain_ladder_project(t, params.dev_factors);
    FitRecord rec;
    rec.code = data.company_code;
    rec.model = "mack";
    rec.kind = kind;
    rec.f = params.dev_factors;
    rec.s2 = params.sigma2;
    rec.det_reserve = central.total_reserve();
    rec.det_ultimate = central.total_ultimate();
    return rec;
}

FitRecord fit_macknet_one(const CompanyDataSet& data, TriangleKind kind, const Options& opt,
                          std::size_t threads, std::vector<MemberDiagnostics>* diags) {
    const std::uint64_t cseed = company_seed(opt, data.company_code);
    const std::uint64_t ens_seed =
        derive_seed(cseed, kEnsembleStreamBase + (kind == TriangleKind::Incurred ? 1 : 0));
    const FeatureSet features = build_features(data, kind);
    const EnsembleResult ens =
        train_ensemble(features.train, features.test, ensemble_config(opt, ens_seed, threads));
    std::vector<CompletedSquare> squares(ens.members.size());
    for (std::size_t k = 0; k < squares.size(); ++k)
        squares[k] = complete_square(ens.members[k].net, data, kind);
    const CompletedSquare dbar = average_square(squares);
    const MackNetParameters params = macknet_parameters(dbar);

    FitRecord rec;
    rec.code = data.company_code;
    rec.model = "macknet";
    rec.kind = kind;
    rec.f = params.dev_factors_p;
    rec.s2 = params.sigma2_p;
    rec.det_reserve = dbar.total_reserve();
    rec.det_ultimate = dbar.total_ultimate();
    if (diags != nullptr) *diags = ens.diagnostics;
    return rec;
}

Json fit_record_json(const FitRecord& rec, const Options& opt) {
    Json j;
    j["company"] = rec.code;
    j["lob"] = opt.lob;
    j["model"] = rec.model;
    j["kind"] = to_string(rec.kind);
    j["dev_factors"] = rec.f;
    j["sigma2"] = rec.s2;
    j["deterministic_reserve"] = rec.det_reserve;
    j["deterministic_ultimate"] = rec.det_ultimate;
    return j;
}

void write_average_tables(const std::vector<FitRecord>& records, const Options& opt,
                          std::ostream& out) {
    // Average the parameter vectors per (model, kind).
    std::map<std::pair<std::string, TriangleKind>, std::vector<std::vector<double>>> f_acc, s_acc;
    for (const auto& rec : records) {
        f_acc[{rec.model, rec.kind}].push_back(rec.f);
        s_acc[{rec.model, rec.kind}].push_back(rec.s2);
    }
    const auto average = [](const std::vector<std::vector<double>>& vecs) {
        std::vector<double> avg(vecs.front().size(), 0.0);
        for (const auto& v : vecs)
            for (std::size_t k = 0; k < v.size(); ++k) avg[k] += v[k];
        for (auto& a : avg) a /= static_cast<double>(vecs.size());
        return avg;
    };

    for (TriangleKind kind : {TriangleKind::Paid, TriangleKind::Incurred}) {
        std::vector<std::string> models;
        for (const auto& [key, _] : f_acc)
            if (key.second == kind) models.push_back(key.first);
        if (models.empty()) continue;

        std::map<std::string, std::vector<double>> f_avg, s_avg;
        for (const auto& m : models) {
            f_avg[m] = average(f_acc[{m, kind}]);
            s_avg[m] = average(s_acc[{m, kind}]);
        }
        const std::size_t n_factors = f_avg.begin()->second.size();

        std::ostringstream csv;
        csv << "dev_year";
        for (const auto& m : models) csv << ',' << m << "_f_avg";
        for (const auto& m : models) csv << ',' << m << "_sigma2_avg";
        csv << '\n';
        for (std::size_t d = 0; d < n_factors; ++d) {
            csv << (d + 1);
            for (const auto& m : models) csv << ',' << fixed(f_avg[m][d], 6);
            for (const auto& m : models) csv << ',' << fixed(s_avg[m][d], 6);
            csv << '\n';
        }
        const std::string path = (fs::path(opt.out) /
                                  (opt.lob + "_" + to_string(kind) + "_params_avg.csv"))
                                     .string();
        write_text_atomic(path, csv.str());

        // Plain-text table, development factors then variance parameters.
        std::ostringstream txt;
        txt << "Average development factors (" << opt.lob << ", " << to_string(kind)
            << " data, " << f_acc[{models.front(), kind}].size() << " companies)\n";
        txt << "Dev Year";
        for (const auto& m : models) txt << '\t' << m;
        txt << '\n';
        for (std::size_t d = 0; d < n_factors; ++d) {
            txt << (d + 1);
            for (const auto& m : models) txt << '\t' << fixed(f_avg[m][d], 2);
            txt << '\n';
        }
        txt << "\nAverage variance parameters\nDev Year";
        for (const auto& m : models) txt << '\t' << m;
        txt << '\n';
        for (std::size_t d = 0; d < n_factors; ++d) {
            txt << (d + 1);
            for (const auto& m : models) txt << '\t' << fixed(s_avg[m][d], 2);
            txt << '\n';
        }
        const std::string txt_path = (fs::path(opt.out) /
                                      (opt.lob + "_" + to_string(kind) + "_params_avg.txt"))
                                         .string();
        write_text_atomic(txt_path, txt.str());
        out << "wrote " << path << " and " << txt_path << "\n";
    }
}

int cmd_bench(const Options& opt, std::ostream& out, std::ostream& err);

int cmd_fit(const Options& opt, std::ostream& out, std::ostream& err) {
    if (opt.bench) return cmd_bench(opt, out, err);
    fs::create_directories(opt.out);
    const auto codes = resolve_companies(opt, err);
    const LineOfBusiness lob = lob_from_string(opt.lob);
    const auto kinds = kinds_of(opt);
    const auto models = models_of(opt);

    const std::size_t company_threads = codes.size() > 1 ? opt.threads : 1;
    const std::size_t inner_threads = codes.size() > 1 ? 1 : opt.threads;

    std::vector<std::vector<FitRecord>> per_company(codes.size());
    parallel_for(codes.size(), company_threads, [&](std::size_t c) {
        const CompanyDataSet data =
            load_schedule_p(opt.data, lob, codes[c], schedule_p_options(opt));
        for (const auto& model : models) {
            for (TriangleKind kind : kinds) {
                std::vector<MemberDiagnostics> diags;
                const FitRecord rec = model == "mack"
                                          ? fit_mack_one(data, kind)
                                          : fit_macknet_one(data, kind, opt, inner_threads,
                                                            &diags);
                const std::string prefix = artifact_prefix(opt, codes[c]) + "_" + model + "_" +
                                           to_string(kind);
                write_text_atomic(prefix + "_params.json",
                                  fit_record_json(rec, opt).dump(2) + "\n");
                if (!diags.empty())
                    write_text_atomic(prefix + "_diagnostics.json",
                                      ensemble_diagnostics_json(diags).dump(2) + "\n");
                per_company[c].push_back(rec);
            }
        }
    });

    std::vector<FitRecord> records;
    for (const auto& v : per_company) records.insert(records.end(), v.begin(), v.end());
    for (const auto& rec : records)
        out << rec.code << ' ' << rec.model << ' ' << to_string(rec.kind) << " f1="
            << fixed(rec.f[0], 6) << " reserve=" << fixed(rec.det_reserve, 2) << '\n';
    write_average_tables(records, opt, out);
    return 0;
}

// ----------------------------------------------------------------------
// simulate

int cmd_simulate(const Options& opt, std::ostream& out, std::ostream& err) {
    fs::create_directories(opt.out);
    const auto codes = resolve_companies(opt, err);
    const LineOfBusiness lob = lob_from_string(opt.lob);
    const auto kinds = kinds_of(opt);
    const auto models = models_of(opt);
    const std::string stamp = opt.no_timestamp ? "" : iso_timestamp();

    const std::size_t company_threads = codes.size() > 1 ? opt.threads : 1;
    const std::size_t inner_threads = codes.size() > 1 ? 1 : opt.threads;

    std::vector<std::string> logs(codes.size());
    parallel_for(codes.size(), company_threads, [&](std::size_t c) {
        std::ostringstream log;
        const CompanyDataSet data =
            load_schedule_p(opt.data, lob, codes[c], schedule_p_options(opt));
        const std::uint64_t cseed = company_seed(opt, codes[c]);

        for (const auto& model : models) {
            for (TriangleKind kind : kinds) {
                const std::string prefix = artifact_prefix(opt, codes[c]) + "_" + model + "_" +
                                           to_string(kind);
                ReserveDistribution dist;
                if (model == "mack") {
                    const Triangle& t = kind == TriangleKind::Paid ? data.paid : data.incurred;
                    dist = bootstrap_mack(
                        t, boot_config(opt, derive_seed(cseed, boot_stream(kind, false))));
                } else {
                    const std::uint64_t ens_seed = derive_seed(
                        cseed, kEnsembleStreamBase + (kind == TriangleKind::Incurred ? 1 : 0));
                    const MackNetFit fit = fit_macknet(
                        data, kind, ensemble_config(opt, ens_seed, inner_threads),
                        boot_config(opt, derive_seed(cseed, boot_stream(kind, true))));
                    dist = fit.distribution;
                    write_text_atomic(prefix + "_diagnostics.json",
                                      ensemble_diagnostics_json(fit.members).dump(2) + "\n");
                }
                write_text_atomic(prefix + "_sims.csv", distribution_to_csv(dist));
                write_text_atomic(prefix + "_summary.json",
                                  distribution_summary_json(dist, stamp).dump(2) + "\n");
                log << codes[c] << ' ' << model << ' ' << to_string(kind) << ": B="
                    << dist.n_sims() << " mean_reserve="
                    << fixed(std::accumulate(dist.total_reserve.begin(),
                                             dist.total_reserve.end(), 0.0) /
                                 static_cast<double>(dist.n_sims()),
                             2)
                    << " det_reserve=" << fixed(dist.deterministic_reserve, 2) << '\n';
            }
        }
        logs[c] = log.str();
    });
    for (const auto& l : logs) out << l;
    return 0;
}

// ----------------------------------------------------------------------
// report

double actual_ultimate(const CompanyDataSet& data, TriangleKind kind) {
    if (!data.has_full_square())
        throw MissingArtifactError("company " + data.company_code +
                                   ": developed square unavailable, cannot compute actual "
                                   "ultimates");
    const Triangle& full =
        kind == TriangleKind::Paid ? data.paid_full : data.incurred_full;
    double total = 0.0;
    for (std::size_t i = 1; i <= full.origins(); ++i) total += full.at(i, full.devs());
    return total;
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return std::sqrt(var / static_cast<double>(v.size() - 1));
}

int cmd_report(const Options& opt, std::ostream& out, std::ostream& err) {
    fs::create_directories(opt.out);
    const std::string in_dir = opt.in.empty() ? opt.out : opt.in;
    const auto codes = resolve_companies(opt, err);
    const LineOfBusiness lob = lob_from_string(opt.lob);
    const auto kinds = kinds_of(opt);
    const auto models = models_of(opt);
    constexpr double kAlpha = 0.995;

    std::vector<CompanyDataSet> datasets;
    datasets.reserve(codes.size());
    for (const auto& code : codes)
        datasets.push_back(load_schedule_p(opt.data, lob, code, schedule_p_options(opt)));

    std::ostringstream csv, txt;
    Json json_report;
    json_report["lob"] = opt.lob;
    json_report["companies"] = codes.size();
    json_report["alpha"] = kAlpha;
    Json json_rows = Json::array();
    csv << "lob,model,kind,companies,rmse_pct,mae_pct,kupiec_p_uniform,kupiec_p_sd,"
           "breach_rate_uniform\n";
    txt << "Model performance, " << opt.lob << " (" << codes.size() << " companies, VaR "
        << fixed(kAlpha * 100, 1) << "%)\n";
    txt << "model\tkind\t%RMSE\t%MAE\tKupiec p (uniform)\tKupiec p (sd)\n";

    // Keep distributions alive while outcomes reference them.
    std::map<std::string, std::vector<ReserveDistribution>> dists;
    std::map<std::string, std::map<std::string, double>> cv_by_model_kind; // kind -> code -> cv

    for (const auto& model : models) {
        for (TriangleKind kind : kinds) {
            auto& dist_store = dists[model + to_string(kind)];
            dist_store.reserve(codes.size());
            std::vector<CompanyOutcome> outcomes;
            for (std::size_t c = 0; c < codes.size(); ++c) {
                const std::string prefix = (fs::path(in_dir) / (opt.lob + "_" + codes[c])).string() +
                                           "_" + model + "_" + to_string(kind);
                std::ifstream sj(prefix + "_summary.json");
                if (!sj)
                    throw MissingArtifactError("missing simulate output '" + prefix +
                                               "_summary.json' (run simulate first)");
                Json summary;
                sj >> summary;
                dist_store.push_back(distribution_from_csv(prefix + "_sims.csv"));
                const ReserveDistribution& dist = dist_store.back();

                CompanyOutcome o;
                o.company_code = codes[c];
                o.predicted_ultimate = summary.at("deterministic_ultimate").get<double>();
                o.actual_ultimate = actual_ultimate(datasets[c], kind);
                o.distribution = &dist;
                std::vector<double> totals(dist.n_sims());
                for (std::size_t b = 0; b < dist.n_sims(); ++b) totals[b] = dist.total_ultimate(b);
                o.sim_sd = sample_sd(totals);
                outcomes.push_back(o);

                cv_by_model_kind[model + "_" + to_string(kind)][codes[c]] =
                    summary.at("total_ultimate").at("cv").get<double>();
            }

            const double rmse = rmse_pct(outcomes);
            const double mae = mae_pct(outcomes);
            const BacktestResult uni = kupiec_test(outcomes, kAlpha, KupiecWeighting::Uniform);
            const BacktestResult sdw = kupiec_test(outcomes, kAlpha, KupiecWeighting::SdWeighted);

            csv << opt.lob << ',' << model << ',' << to_string(kind) << ',' << codes.size() << ','
                << fixed(rmse, 4) << ',' << fixed(mae, 4) << ',' << fixed(uni.p_value, 6) << ','
                << fixed(sdw.p_value, 6) << ',' << fixed(uni.weighted_breach_rate, 6) << '\n';
            txt << model << '\t' << to_string(kind) << '\t' << fixed(rmse, 2) << '\t'
                << fixed(mae, 2) << '\t' << fixed(uni.p_value, 3) << '\t' << fixed(sdw.p_value, 3)
                << '\n';
            Json row;
            row["model"] = model;
            row["kind"] = to_string(kind);
            row["rmse_pct"] = rmse;
            row["mae_pct"] = mae;
            row["kupiec_p_uniform"] = uni.p_value;
            row["kupiec_p_sd_weighted"] = sdw.p_value;
            row["breach_rate_uniform"] = uni.weighted_breach_rate;
            json_rows.push_back(std::move(row));
        }
    }

    // Share of companies where the hybrid CV is below the classic CV.
    if (std::find(models.begin(), models.end(), std::string("mack")) != models.end() &&
        std::find(models.begin(), models.end(), std::string("macknet")) != models.end()) {
        for (TriangleKind kind : kinds) {
            const auto& mack_cv = cv_by_model_kind["mack_" + to_string(kind)];
            const auto& net_cv = cv_by_model_kind["macknet_" + to_string(kind)];
            std::size_t lower = 0;
            for (const auto& code : codes)
                if (net_cv.at(code) < mack_cv.at(code)) ++lower;
            const double share =
                100.0 * static_cast<double>(lower) / static_cast<double>(codes.size());
            csv << opt.lob << ",cv_share_macknet_lower," << to_string(kind) << ','
                << codes.size() << ',' << fixed(share, 2) << ",,,,\n";
            txt << "share of companies with macknet CV < mack CV (" << to_string(kind)
                << "): " << fixed(share, 1) << "%\n";
            json_report["cv_share_macknet_lower_" + to_string(kind)] = share;
        }
    }
    json_report["models"] = std::move(json_rows);

    const std::string base = (fs::path(opt.out) / (opt.lob + "_report")).string();
    write_text_atomic(base + ".csv", csv.str());
    write_text_atomic(base + ".txt", txt.str());
    write_text_atomic(base + ".json", json_report.dump(2) + "\n");
    out << txt.str();
    out << "wrote " << base << ".{csv,txt,json}\n";
    return 0;
}

// ----------------------------------------------------------------------
// bench: training time and error versus input size (5..10 years)

CompanyDataSet truncate_dataset(const CompanyDataSet& data, std::size_t years) {
    CompanyDataSet sub;
    sub.company_code = data.company_code;
    sub.company_name = data.company_name;
    sub.lob = data.lob;
    const auto cut = [&](const Triangle& t, bool as_reported) {
        Triangle s(years, years, t.basis(), t.kind());
        s.first_origin_year = t.first_origin_year;
        for (std::size_t i = 1; i <= years; ++i)
            for (std::size_t j = 1; j <= years; ++j) {
                const bool keep = as_reported ? i + j <= years + 1 : true;
                if (keep) s.set(i, j, t.at(i, j), true);
            }
        return s;
    };
    sub.paid = cut(data.paid, true);
    sub.incurred = cut(data.incurred, true);
    sub.exposure.premiums.assign(data.exposure.premiums.begin(),
                                 data.exposure.premiums.begin() + static_cast<long>(years));
    if (data.has_full_square()) {
        sub.paid_full = cut(data.paid_full, false);
        sub.incurred_full = cut(data.incurred_full, false);
    }
    return sub;
}

int cmd_bench(const Options& opt, std::ostream& out, std::ostream& err) {
    fs::create_directories(opt.out);
    const auto codes = resolve_companies(opt, err);
    const LineOfBusiness lob = lob_from_string(opt.lob);
    const TriangleKind kind = kinds_of(opt).front();

    constexpr std::size_t kMinYears = 5;
    const std::size_t max_years = 10;
    std::vector<double> time_s(max_years - kMinYears + 1, 0.0);
    std::vector<double> err_pct(max_years - kMinYears + 1, 0.0);

    for (const auto& code : codes) {
        const CompanyDataSet data = load_schedule_p(opt.data, lob, code, schedule_p_options(opt));
        if (!data.has_full_square())
            throw MissingArtifactError("bench requires the developed square for company " + code);
        const std::uint64_t cseed = company_seed(opt, code);

        for (std::size_t y = kMinYears; y <= max_years; ++y) {
            const CompanyDataSet sub = truncate_dataset(data, y);
            const std::uint64_t ens_seed = derive_seed(cseed, kEnsembleStreamBase + 8 + y);
            const auto t0 = std::chrono::steady_clock::now();
            const FeatureSet features = build_features(sub, kind);
            const EnsembleResult ens = train_ensemble(features.train, features.test,
                                                      ensemble_config(opt, ens_seed, opt.threads));
            std::vector<CompletedSquare> squares(ens.members.size());
            for (std::size_t k = 0; k < squares.size(); ++k)
                squares[k] = complete_square(ens.members[k].net, sub, kind);
            const CompletedSquare dbar = average_square(squares);
            const auto t1 = std::chrono::steady_clock::now();

            const Triangle& full =
                kind == TriangleKind::Paid ? data.paid_full : data.incurred_full;
            double predicted = 0.0, realized = 0.0;
            for (std::size_t i = 1; i <= y; ++i) {
                predicted += dbar.at(i, y);
                realized += full.at(i, y);
            }
            time_s[y - kMinYears] += std::chrono::duration<double>(t1 - t0).count();
            err_pct[y - kMinYears] += 100.0 * std::abs(predicted - realized) / realized;
        }
    }
    for (auto& v : time_s) v /= static_cast<double>(codes.size());
    for (auto& v : err_pct) v /= static_cast<double>(codes.size());

    std::ostringstream csv;
    csv << "years,time_seconds,error_pct,time_index,error_index\n";
    out << "years\ttime_s\terror%\ttime_idx\terror_idx\n";
    for (std::size_t y = kMinYears; y <= max_years; ++y) {
        const double ti = 100.0 * time_s[y - kMinYears] / time_s[0];
        const double ei = err_pct[0] != 0.0 ? 100.0 * err_pct[y - kMinYears] / err_pct[0] : 0.0;
        csv << y << ',' << fixed(time_s[y - kMinYears], 4) << ','
            << fixed(err_pct[y - kMinYears], 4) << ',' << fixed(ti, 2) << ',' << fixed(ei, 2)
            << '\n';
        out << y << '\t' << fixed(time_s[y - kMinYears], 3) << '\t'
            << fixed(err_pct[y - kMinYears], 2) << '\t' << fixed(ti, 1) << '\t' << fixed(ei, 1)
            << '\n';
    }
    const std::string path =
        (fs::path(opt.out) / (opt.lob + "_bench_" + to_string(kind) + ".csv")).string();
    write_text_atomic(path, csv.str());
    out << "wrote " << path << "\n";
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Stochastic claims reserving: Mack chain-ladder bootstrap and the "
                 "LSTM-ensemble hybrid (Mack-Net)"};
    app.option_defaults()->always_capture_default();
    app.set_config("--config", "", "read options from a config file");
    bool show_config = false;
    app.add_flag("--show-config", show_config, "print the effective configuration and exit");

    Options opt;
    std::string command;

    const auto add_common = [&](CLI::App* sub, bool needs_seed) {
        sub->add_option("--data", opt.data, "Schedule P CSV file")->required();
        sub->add_option("--lob", opt.lob, "line of business: CA, PA, WC or OL")
            ->check(CLI::IsMember({"CA", "PA", "WC", "OL"}));
        sub->add_option("--companies", opt.companies,
                        "company codes: 'all', comma-separated list, or @file");
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--threads", opt.threads, "worker threads");
        sub->add_flag("--no-net-bulk", opt.no_net_bulk,
                      "keep bulk+IBNR reserves inside incurred losses");
        sub->add_flag("--no-timestamp", opt.no_timestamp, "omit timestamps from outputs");
        auto* seed = sub->add_option("--seed", opt.seed, "master seed");
        if (needs_seed) seed->required();
    };
    const auto add_model_opts = [&](CLI::App* sub) {
        sub->add_option("--kind", opt.kind, "triangle kind: paid, incurred or both")
            ->check(CLI::IsMember({"paid", "incurred", "both"}));
        sub->add_option("--model", opt.model, "model: mack, macknet or both")
            ->check(CLI::IsMember({"mack", "macknet", "both"}));
        sub->add_option("--members", opt.members, "ensemble size K");
        sub->add_option("--epochs", opt.epochs, "training epochs");
        sub->add_option("--patience", opt.patience, "early-stopping patience (0 disables)");
        sub->add_option("--hidden", opt.hidden, "LSTM hidden size");
        sub->add_option("--width", opt.width, "dense layer width");
        sub->add_option("--learning-rate", opt.learning_rate, "ADAM learning rate");
        sub->add_option("--dropout", opt.dropout, "dropout rate");
    };

    auto* ingest = app.add_subcommand("ingest", "parse Schedule P data into canonical triangles");
    add_common(ingest, false);

    auto* fit = app.add_subcommand("fit", "estimate model parameters");
    add_common(fit, false);
    add_model_opts(fit);
    fit->add_flag("--bench", opt.bench, "run the time/error vs input size sweep instead");

    auto* simulate = app.add_subcommand("simulate", "bootstrap reserve distributions");
    add_common(simulate, true);
    add_model_opts(simulate);
    simulate->add_option("--sims", opt.sims, "bootstrap simulations B");
    simulate->add_flag("--no-process-variance", opt.no_process_variance,
                       "omit process variance from projections");

    auto* report = app.add_subcommand("report", "accuracy and risk metrics vs realized ultimates");
    add_common(report, false);
    add_model_opts(report);
    report->add_option("--in", opt.in, "directory with simulate outputs (default: --out)");

    app.require_subcommand(0, 1);

    std::vector<std::string> argv_copy = args;
    std::reverse(argv_copy.begin(), argv_copy.end());
    try {
        app.parse(argv_copy);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    if (show_config) {
        out << app.config_to_str(true, true);
        return 0;
    }

    try {
        if (ingest->parsed()) return cmd_ingest(opt, out, err);
        if (fit->parsed()) return cmd_fit(opt, out, err);
        if (simulate->parsed()) return cmd_simulate(opt, out, err);
        if (report->parsed()) return cmd_report(opt, out, err);
        err << app.help();
        return 0;
    } catch (const MissingArtifactError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << "\n";
        return 4;
    } catch (const DataError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace macknet::cli
