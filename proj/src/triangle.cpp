#include "macknet/triangle.hpp"
#include "macknet/errors.hpp"

#include <algorithm>
#include <iostream>

namespace macknet {

std::string to_string(LineOfBusiness lob) {
    switch (lob) {
        case LineOfBusiness::CA: return "CA";
        case LineOfBusiness::PA: return "PA";
        case LineOfBusiness::WC: return "WC";
        case LineOfBusiness::OL: return "OL";
    }
    return "?";
}

std::string to_string(TriangleKind kind) {
    return kind == TriangleKind::Paid ? "paid" : "incurred";
}

LineOfBusiness lob_from_string(const std::string& s) {
    if (s == "CA") return LineOfBusiness::CA;
    if (s == "PA") return LineOfBusiness::PA;
    if (s == "WC") return LineOfBusiness::WC;
    if (s == "OL") return LineOfBusiness::OL;
    throw DataError("unknown line of business '" + s + "' (expected CA, PA, WC or OL)");
}

TriangleKind kind_from_string(const std::string& s) {
    if (s == "paid") return TriangleKind::Paid;
    if (s == "incurred") return TriangleKind::Incurred;
    throw DataError("unknown triangle kind '" + s + "' (expected paid or incurred)");
}

Triangle::Triangle(std::size_t origins, std::size_t devs, Basis basis, TriangleKind kind)
    : origins_(origins),
      devs_(devs),
      basis_(basis),
      kind_(kind),
      values_(origins * devs, 0.0),
      mask_(origins * devs, 0) {}

std::size_t Triangle::last_observed_dev(std::size_t i) const {
    for (std::size_t j = devs_; j >= 1; --j) {
        if (observed(i, j)) return j;
    }
    return 0;
}

bool Triangle::is_as_reported() const {
    if (origins_ != devs_) return false;
    for (std::size_t i = 1; i <= origins_; ++i) {
        for (std::size_t j = 1; j <= devs_; ++j) {
            const bool expect = i + j <= origins_ + 1;
            if (observed(i, j) != expect) return false;
        }
    }
    return true;
}

std::size_t Triangle::observed_count() const {
    std::size_t n = 0;
    for (std::size_t i = 1; i <= origins_; ++i)
        for (std::size_t j = 1; j <= devs_; ++j)
            if (observed(i, j)) ++n;
    return n;
}

Triangle incremental_to_cumulative(const Triangle& t) {
    if (t.basis() != Basis::Incremental)
        throw DataError("incremental_to_cumulative: triangle is not on incremental basis");
    Triangle out(t.origins(), t.devs(), Basis::Cumulative, t.kind());
    out.first_origin_year = t.first_origin_year;
    for (std::size_t i = 1; i <= t.origins(); ++i) {
        double run = 0.0;
        for (std::size_t j = 1; j <= t.devs(); ++j) {
            if (t.observed(i, j)) {
                run += t.at(i, j);
                out.set(i, j, run, true);
            } else {
                out.set(i, j, 0.0, false);
            }
        }
    }
    return out;
}

Triangle cumulative_to_incremental(const Triangle& t) {
    if (t.basis() != Basis::Cumulative)
        throw DataError("cumulative_to_incremental: triangle is not on cumulative basis");
    Triangle out(t.origins(), t.devs(), Basis::Incremental, t.kind());
    out.first_origin_year = t.first_origin_year;
    for (std::size_t i = 1; i <= t.origins(); ++i) {
        double prev = 0.0;
        bool have_prev = false;
        for (std::size_t j = 1; j <= t.devs(); ++j) {
            if (t.observed(i, j)) {
                const double inc = have_prev ? t.at(i, j) - prev : t.at(i, j);
                out.set(i, j, inc, true);
                prev = t.at(i, j);
                have_prev = true;
            } else {
                out.set(i, j, 0.0, false);
            }
        }
    }
    return out;
}

Triangle scale_by_exposure(const Triangle& t, const Exposure& e) {
    if (e.size() != t.origins())
        throw DataError("scale_by_exposure: premium vector length " + std::to_string(e.size()) +
                        " does not match origin count " + std::to_string(t.origins()));
    for (std::size_t i = 1; i <= e.size(); ++i) {
        if (!(e.at(i) > 0.0))
            throw DataError("scale_by_exposure: non-positive premium " + std::to_string(e.at(i)) +
                            " for origin " + std::to_string(i));
    }
    Triangle out = t;
    for (std::size_t i = 1; i <= t.origins(); ++i)
        for (std::size_t j = 1; j <= t.devs(); ++j)
            out.set(i, j, t.at(i, j) / e.at(i), t.observed(i, j));
    return out;
}

DiagonalSplit split_last_diagonal(const Triangle& t) {
    const std::size_t I = t.origins();
    if (I < 3) throw DataError("split_last_diagonal: need at least 3 origin years, got " +
                               std::to_string(I));
    if (!t.is_as_reported())
        throw DataError("split_last_diagonal: triangle is not as-reported (mask must cover "
                        "exactly the upper triangle)");

    DiagonalSplit split;
    split.train = t;
    for (std::size_t i = 1; i < I; ++i) {
        const std::size_t j = I + 1 - i;
        split.test.push_back({i, j, t.at(i, j)});
        split.train.set_observed(i, j, false);
    }
    // (I, 1) has no prediction target; it stays observable for training.
    return split;
}

} // namespace macknet
