#include "macknet/schedule_p.hpp"
#include "macknet/errors.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace macknet {
namespace {

constexpr int kFirstAccidentYear = 1988;
constexpr int kLastAccidentYear = 1997;
constexpr std::size_t kSize = 10;

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

/// Splits one CSV record; honors double-quoted fields (company names).
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        const char c = line[k];
        if (quoted) {
            if (c == '"') {
                if (k + 1 < line.size() && line[k + 1] == '"') {
                    cur += '"';
                    ++k;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

struct Columns {
    std::size_t grcode = 0;
    std::optional<std::size_t> grname;
    std::size_t accident_year = 0;
    std::size_t development_lag = 0;
    std::size_t incur_loss = 0;
    std::size_t bulk_loss = 0;
    std::size_t cum_paid_loss = 0;
    std::size_t earned_prem_net = 0;
};

std::size_t find_column(const std::vector<std::string>& header, const std::string& name,
                        bool prefix, const std::string& path) {
    const std::string want = lower(name);
    for (std::size_t k = 0; k < header.size(); ++k) {
        const std::string h = lower(header[k]);
        if (prefix ? h.rfind(want, 0) == 0 : h == want) return k;
    }
    throw DataError(path + ": required column '" + name + "' not found in header");
}

Columns resolve_columns(const std::vector<std::string>& header, const std::string& path) {
    Columns c;
    c.grcode = find_column(header, "GRCODE", false, path);
    c.accident_year = find_column(header, "AccidentYear", false, path);
    c.development_lag = find_column(header, "DevelopmentLag", false, path);
    c.incur_loss = find_column(header, "IncurLoss", true, path);
    c.bulk_loss = find_column(header, "BulkLoss", true, path);
    c.cum_paid_loss = find_column(header, "CumPaidLoss", true, path);
    c.earned_prem_net = find_column(header, "EarnedPremNet", true, path);
    for (std::size_t k = 0; k < header.size(); ++k)
        if (lower(header[k]) == "grname") c.grname = k;
    return c;
}

double parse_number(const std::string& s, std::size_t line_no, const std::string& path) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError(path + ":" + std::to_string(line_no) + ": malformed numeric field '" + s +
                        "'");
    }
}

struct Record {
    int accident_year;
    int lag;
    double incurred;
    double bulk;
    double paid;
    double premium;
    std::string name;
};

template <typename RowFn>
void for_each_row(const std::string& path, Columns& cols, RowFn&& fn) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open Schedule P file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    cols = resolve_columns(split_csv(line), path);
    const std::size_t need = 1 + std::max({cols.grcode, cols.accident_year, cols.development_lag,
                                           cols.incur_loss, cols.bulk_loss, cols.cum_paid_loss,
                                           cols.earned_prem_net});

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() < need)
            throw DataError(path + ":" + std::to_string(line_no) + ": expected at least " +
                            std::to_string(need) + " fields, got " +
                            std::to_string(fields.size()));
        fn(fields, line_no);
    }
}

} // namespace

CompanyDataSet load_schedule_p(const std::string& path, LineOfBusiness lob,
                               const std::string& company_code, const SchedulePOptions& options) {
    Columns cols;
    std::vector<Record> records;
    std::string company_name;

    for_each_row(path, cols, [&](const std::vector<std::string>& fields, std::size_t line_no) {
        if (fields[cols.grcode] != company_code) return;
        Record r;
        r.accident_year = static_cast<int>(parse_number(fields[cols.accident_year], line_no, path));
        r.lag = static_cast<int>(parse_number(fields[cols.development_lag], line_no, path));
        r.incurred = parse_number(fields[cols.incur_loss], line_no, path);
        r.bulk = parse_number(fields[cols.bulk_loss], line_no, path);
        r.paid = parse_number(fields[cols.cum_paid_loss], line_no, path);
        r.premium = parse_number(fields[cols.earned_prem_net], line_no, path);
        if (cols.grname) r.name = fields[*cols.grname];
        if (r.accident_year < kFirstAccidentYear || r.accident_year > kLastAccidentYear)
            throw DataError(path + ":" + std::to_string(line_no) + ": accident year " +
                            std::to_string(r.accident_year) + " outside 1988-1997");
        if (r.lag < 1 || r.lag > static_cast<int>(kSize))
            throw DataError(path + ":" + std::to_string(line_no) + ": development lag " +
                            std::to_string(r.lag) + " outside 1-10");
        records.push_back(std::move(r));
    });

    if (records.empty())
        throw DataError(path + ": company '" + company_code + "' not found");

    // Determine the shape covered by this company: full 10x10 for the real
    // database, smaller synthetic fixtures are accepted as long as the
    // origin years are contiguous from 1988.
    int max_year = kFirstAccidentYear, max_lag = 1;
    for (const auto& r : records) {
        max_year = std::max(max_year, r.accident_year);
        max_lag = std::max(max_lag, r.lag);
    }
    const std::size_t n_origins = static_cast<std::size_t>(max_year - kFirstAccidentYear + 1);
    const std::size_t n_devs = static_cast<std::size_t>(max_lag);
    const std::size_t I = std::max(n_origins, n_devs);

    Triangle paid_full(I, I, Basis::Cumulative, TriangleKind::Paid);
    Triangle incurred_full(I, I, Basis::Cumulative, TriangleKind::Incurred);
    paid_full.first_origin_year = kFirstAccidentYear;
    incurred_full.first_origin_year = kFirstAccidentYear;
    std::vector<double> premiums(I, 0.0);
    std::vector<std::uint8_t> premium_seen(I, 0);

    for (const auto& r : records) {
        const std::size_t i = static_cast<std::size_t>(r.accident_year - kFirstAccidentYear + 1);
        const std::size_t j = static_cast<std::size_t>(r.lag);
        if (paid_full.observed(i, j))
            throw DataError(path + ": duplicate record for company '" + company_code +
                            "', accident year " + std::to_string(r.accident_year) + ", lag " +
                            std::to_string(r.lag));
        paid_full.set(i, j, r.paid, true);
        const double net = options.net_bulk_reserve ? r.incurred - r.bulk : r.incurred;
        incurred_full.set(i, j, net, true);
        if (premium_seen[i - 1] && premiums[i - 1] != r.premium)
            throw DataError(path + ": inconsistent premium for company '" + company_code +
                            "', accident year " + std::to_string(r.accident_year));
        premiums[i - 1] = r.premium;
        premium_seen[i - 1] = 1;
        if (company_name.empty()) company_name = r.name;
    }

    for (std::size_t i = 1; i <= I; ++i) {
        if (!premium_seen[i - 1])
            throw DataError(path + ": company '" + company_code + "' has no records for origin " +
                            std::to_string(kFirstAccidentYear + static_cast<int>(i) - 1));
        if (!(premiums[i - 1] > 0.0))
            throw DataError(path + ": company '" + company_code + "' has non-positive premium " +
                            std::to_string(premiums[i - 1]) + " for origin " +
                            std::to_string(kFirstAccidentYear + static_cast<int>(i) - 1));
    }

    // Upper-triangle views for fitting.
    Triangle paid = paid_full;
    Triangle incurred = incurred_full;
    for (std::size_t i = 1; i <= I; ++i) {
        for (std::size_t j = 1; j <= I; ++j) {
            const bool keep = i + j <= I + 1;
            if (keep && !paid_full.observed(i, j))
                throw DataError(path + ": company '" + company_code +
                                "' is missing upper-triangle cell (origin " + std::to_string(i) +
                                ", lag " + std::to_string(j) + ")");
            paid.set_observed(i, j, keep);
            incurred.set_observed(i, j, keep);
        }
    }

    // Paid cumulative rows decreasing is legal (recoveries) but unusual.
    for (std::size_t i = 1; i <= I; ++i)
        for (std::size_t j = 2; j <= I + 1 - i; ++j)
            if (paid.at(i, j) < paid.at(i, j - 1)) {
                std::cerr << "warning: " << path << ": company " << company_code
                          << " paid triangle decreases at origin " << i << ", lag " << j << "\n";
                break;
            }

    CompanyDataSet data;
    data.company_code = company_code;
    data.company_name = company_name;
    data.lob = lob;
    data.paid = std::move(paid);
    data.incurred = std::move(incurred);
    data.exposure.premiums = std::move(premiums);
    const bool full = paid_full.observed_count() == I * I;
    if (full) {
        data.paid_full = std::move(paid_full);
        data.incurred_full = std::move(incurred_full);
    }
    return data;
}

std::vector<SchedulePSummaryRow> scan_schedule_p(const std::string& path) {
    Columns cols;
    std::map<std::string, SchedulePSummaryRow> by_code;
    std::vector<std::string> order;
    std::map<std::string, std::map<int, double>> premiums; // code -> year -> premium

    for_each_row(path, cols, [&](const std::vector<std::string>& fields, std::size_t line_no) {
        const std::string code = fields[cols.grcode];
        auto it = by_code.find(code);
        if (it == by_code.end()) {
            SchedulePSummaryRow row;
            row.company_code = code;
            if (cols.grname) row.company_name = fields[*cols.grname];
            it = by_code.emplace(code, std::move(row)).first;
            order.push_back(code);
        }
        it->second.cell_count += 1;
        const int year = static_cast<int>(parse_number(fields[cols.accident_year], line_no, path));
        premiums[code][year] = parse_number(fields[cols.earned_prem_net], line_no, path);
    });

    std::vector<SchedulePSummaryRow> rows;
    rows.reserve(order.size());
    for (const auto& code : order) {
        SchedulePSummaryRow row = by_code[code];
        for (const auto& [year, prem] : premiums[code]) row.premium_total += prem;
        row.complete_square = row.cell_count == kSize * kSize;
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace macknet
