#include "macknet/io.hpp"
#include "macknet/errors.hpp"
#include "macknet/eval.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace macknet {

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Json block_summary(std::vector<double> values) {
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var_pop = 0.0;
    for (double v : values) var_pop += (v - mean) * (v - mean);
    const double sd_sample = n > 1 ? std::sqrt(var_pop / (n - 1.0)) : 0.0;
    const double sd_pop = std::sqrt(var_pop / n);

    Json q;
    for (double alpha : {0.005, 0.01, 0.05, 0.5, 0.95, 0.99, 0.995}) {
        std::ostringstream key;
        key << alpha;
        q[key.str()] = quantile(values, alpha);
    }
    Json block;
    block["mean"] = mean;
    block["sd"] = sd_sample; // sample (n-1) convention
    block["cv"] = mean != 0.0 ? sd_pop / mean : 0.0;
    block["quantiles"] = q;
    return block;
}

} // namespace

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write '" + tmp + "'");
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

Json triangle_to_json(const Triangle& t, const std::string& company, LineOfBusiness lob) {
    Json j;
    j["company"] = company;
    j["lob"] = to_string(lob);
    j["kind"] = to_string(t.kind());
    j["basis"] = t.basis() == Basis::Cumulative ? "cumulative" : "incremental";
    std::vector<int> origin_years, dev_lags;
    for (std::size_t i = 1; i <= t.origins(); ++i)
        origin_years.push_back(t.first_origin_year != 0
                                   ? t.first_origin_year + static_cast<int>(i) - 1
                                   : static_cast<int>(i));
    for (std::size_t d = 1; d <= t.devs(); ++d) dev_lags.push_back(static_cast<int>(d));
    j["origin_years"] = origin_years;
    j["dev_lags"] = dev_lags;
    std::vector<double> values;
    std::vector<int> mask;
    for (std::size_t i = 1; i <= t.origins(); ++i) {
        for (std::size_t d = 1; d <= t.devs(); ++d) {
            values.push_back(t.observed(i, d) ? t.at(i, d) : 0.0);
            mask.push_back(t.observed(i, d) ? 1 : 0);
        }
    }
    j["values"] = values;
    j["mask"] = mask;
    return j;
}

Triangle triangle_from_json(const Json& j) {
    const auto origin_years = j.at("origin_years").get<std::vector<int>>();
    const auto dev_lags = j.at("dev_lags").get<std::vector<int>>();
    const auto values = j.at("values").get<std::vector<double>>();
    const auto mask = j.at("mask").get<std::vector<int>>();
    const std::size_t I = origin_years.size();
    const std::size_t J = dev_lags.size();
    if (values.size() != I * J || mask.size() != I * J)
        throw DataError("triangle_from_json: value/mask size mismatch");

    Triangle t(I, J,
               j.at("basis").get<std::string>() == "cumulative" ? Basis::Cumulative
                                                                : Basis::Incremental,
               kind_from_string(j.at("kind").get<std::string>()));
    if (!origin_years.empty() && origin_years.front() > 1900) t.first_origin_year = origin_years.front();
    for (std::size_t i = 1; i <= I; ++i)
        for (std::size_t d = 1; d <= J; ++d) {
            const std::size_t k = (i - 1) * J + (d - 1);
            t.set(i, d, values[k], mask[k] != 0);
        }
    return t;
}

std::string triangle_to_csv(const Triangle& t) {
    std::ostringstream out;
    out << "origin,dev,value\n";
    for (std::size_t i = 1; i <= t.origins(); ++i)
        for (std::size_t d = 1; d <= t.devs(); ++d)
            if (t.observed(i, d)) {
                const int origin = t.first_origin_year != 0
                                       ? t.first_origin_year + static_cast<int>(i) - 1
                                       : static_cast<int>(i);
                out << origin << ',' << d << ',' << fmt_double(t.at(i, d)) << '\n';
            }
    return out.str();
}

std::string distribution_to_csv(const ReserveDistribution& dist) {
    std::ostringstream out;
    out << "sim,total_reserve";
    for (std::size_t i = 1; i <= dist.n_origins; ++i) out << ",ultimate_origin_" << i;
    out << '\n';
    for (std::size_t b = 0; b < dist.n_sims(); ++b) {
        out << b << ',' << fmt_double(dist.total_reserve[b]);
        for (std::size_t i = 1; i <= dist.n_origins; ++i)
            out << ',' << fmt_double(dist.ultimate(b, i));
        out << '\n';
    }
    return out.str();
}

ReserveDistribution distribution_from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("cannot open distribution file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty distribution file");

    std::size_t n_cols = 1;
    for (char c : line)
        if (c == ',') ++n_cols;
    if (n_cols < 3) throw DataError(path + ": expected sim,total_reserve,ultimate... columns");
    const std::size_t n_origins = n_cols - 2;

    ReserveDistribution dist;
    dist.n_origins = n_origins;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        std::getline(row, field, ',');
        std::getline(row, field, ',');
        dist.total_reserve.push_back(std::stod(field));
        for (std::size_t i = 0; i < n_origins; ++i) {
            if (!std::getline(row, field, ','))
                throw DataError(path + ": truncated row in distribution file");
            dist.ultimate_by_origin.push_back(std::stod(field));
        }
    }
    return dist;
}

Json distribution_summary_json(const ReserveDistribution& dist, const std::string& timestamp) {
    std::vector<double> reserves = dist.total_reserve;
    std::vector<double> ultimates(dist.n_sims());
    for (std::size_t b = 0; b < dist.n_sims(); ++b) ultimates[b] = dist.total_ultimate(b);

    Json j;
    j["model"] = to_string(dist.model_kind);
    j["seed"] = dist.seed;
    j["n_sims"] = dist.n_sims();
    j["deterministic_reserve"] = dist.deterministic_reserve;
    j["deterministic_ultimate"] = dist.deterministic_ultimate;
    j["negative_cumulative_count"] = dist.negative_cumulative_count;
    j["total_reserve"] = block_summary(std::move(reserves));
    j["total_ultimate"] = block_summary(std::move(ultimates));
    if (!timestamp.empty()) j["generated_at"] = timestamp;
    return j;
}

Json ensemble_diagnostics_json(const std::vector<MemberDiagnostics>& members) {
    Json arr = Json::array();
    for (std::size_t k = 0; k < members.size(); ++k) {
        Json m;
        m["member"] = k;
        m["seed"] = members[k].seed;
        m["epochs_run"] = members[k].epochs_run;
        m["best_test_mse"] = members[k].best_test_mse;
        m["final_train_mse"] = members[k].final_train_mse;
        m["retrained"] = members[k].retrained;
        arr.push_back(std::move(m));
    }
    return Json{{"members", arr}};
}

Json network_to_json(const Network& net) {
    Json tensors;
    for (std::size_t k = 0; k < net.tensors().size(); ++k) {
        const auto& spec = net.tensors()[k];
        std::vector<double> data;
        data.reserve(spec.rows * spec.cols);
        const auto m = net.mat(k);
        for (std::size_t r = 0; r < spec.rows; ++r)
            for (std::size_t c = 0; c < spec.cols; ++c)
                data.push_back(m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
        tensors[spec.name] = Json{{"shape", {spec.rows, spec.cols}}, {"data", data}};
    }
    Json j;
    j["format"] = "macknet-weights-v1";
    j["input"] = net.input_size();
    j["hidden"] = net.hidden_size();
    j["width"] = net.width();
    j["tensors"] = std::move(tensors);
    return j;
}

Network network_from_json(const Json& j) {
    if (j.at("format").get<std::string>() != "macknet-weights-v1")
        throw DataError("network_from_json: unknown checkpoint format");
    Network net(j.at("input").get<std::size_t>(), j.at("hidden").get<std::size_t>(),
                j.at("width").get<std::size_t>());
    const Json& tensors = j.at("tensors");
    for (std::size_t k = 0; k < net.tensors().size(); ++k) {
        const auto& spec = net.tensors()[k];
        const Json& tj = tensors.at(spec.name);
        const auto shape = tj.at("shape").get<std::vector<std::size_t>>();
        const auto data = tj.at("data").get<std::vector<double>>();
        if (shape.size() != 2 || shape[0] != spec.rows || shape[1] != spec.cols ||
            data.size() != spec.rows * spec.cols)
            throw DataError("network_from_json: shape mismatch for tensor '" + spec.name + "'");
        auto m = net.mmat(k);
        std::size_t idx = 0;
        for (std::size_t r = 0; r < spec.rows; ++r)
            for (std::size_t c = 0; c < spec.cols; ++c)
                m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = data[idx++];
    }
    return net;
}

} // namespace macknet
