#ifndef MACKNET_TRIANGLE_HPP
#define MACKNET_TRIANGLE_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace macknet {

enum class Basis { Cumulative, Incremental };
enum class TriangleKind { Paid, Incurred };
enum class LineOfBusiness { CA, PA, WC, OL };

std::string to_string(LineOfBusiness lob);
std::string to_string(TriangleKind kind);
LineOfBusiness lob_from_string(const std::string& s);
TriangleKind kind_from_string(const std::string& s);

/// Run-off triangle of monetary amounts indexed by origin year i and
/// development year j, both 1-based to match the standard actuarial
/// convention. Cells carry an observed flag; as-reported data occupies
/// the region i + j <= I + 1.
///
/// Immutable by convention after construction and filling: none of the
/// operations below mutate their input.
class Triangle {
public:
    Triangle() = default;
    Triangle(std::size_t origins, std::size_t devs, Basis basis, TriangleKind kind);

    std::size_t origins() const { return origins_; }
    std::size_t devs() const { return devs_; }
    Basis basis() const { return basis_; }
    TriangleKind kind() const { return kind_; }

    /// 1-based access, i in [1, origins], j in [1, devs].
    double at(std::size_t i, std::size_t j) const { return values_[idx(i, j)]; }
    bool observed(std::size_t i, std::size_t j) const { return mask_[idx(i, j)] != 0; }

    void set(std::size_t i, std::size_t j, double value, bool obs = true) {
        values_[idx(i, j)] = value;
        mask_[idx(i, j)] = obs ? 1 : 0;
    }
    void set_observed(std::size_t i, std::size_t j, bool obs) { mask_[idx(i, j)] = obs ? 1 : 0; }

    /// Largest observed dev year of origin i, 0 if the row is empty.
    std::size_t last_observed_dev(std::size_t i) const;

    /// True if the observed region is exactly {(i,j): i + j <= I + 1}.
    bool is_as_reported() const;

    std::size_t observed_count() const;

    /// First accident year covered by row 1; 0 when unknown (synthetic data).
    int first_origin_year = 0;

private:
    std::size_t idx(std::size_t i, std::size_t j) const { return (i - 1) * devs_ + (j - 1); }

    std::size_t origins_ = 0;
    std::size_t devs_ = 0;
    Basis basis_ = Basis::Cumulative;
    TriangleKind kind_ = TriangleKind::Paid;
    std::vector<double> values_;
    std::vector<std::uint8_t> mask_;
};

/// Origin-year earned premiums, the exposure measure used for scaling.
/// All entries must be strictly positive.
struct Exposure {
    std::vector<double> premiums;

    std::size_t size() const { return premiums.size(); }
    double at(std::size_t i) const { return premiums[i - 1]; } // 1-based
};

/// One company's triangles for a single line of business. `paid` and
/// `incurred` are cumulative and masked to the as-reported upper triangle.
/// When the source file carries the developed lower triangle as well (the
/// Schedule P files do), `paid_full` / `incurred_full` hold the complete
/// squares for validation against realized ultimates.
struct CompanyDataSet {
    std::string company_code;
    std::string company_name;
    LineOfBusiness lob = LineOfBusiness::CA;
    Triangle paid;
    Triangle incurred;
    Exposure exposure;
    Triangle paid_full;     // empty if unavailable
    Triangle incurred_full; // empty if unavailable

    bool has_full_square() const { return paid_full.origins() > 0; }
};

/// Row-wise prefix sums over observed cells. Mask is preserved.
Triangle incremental_to_cumulative(const Triangle& t);

/// Inverse of incremental_to_cumulative; first observed cell of each row
/// is unchanged.
Triangle cumulative_to_incremental(const Triangle& t);

/// Divides every cell of origin i by the origin's premium, turning
/// amounts into dimensionless loss ratios.
Triangle scale_by_exposure(const Triangle& t, const Exposure& e);

struct DiagonalCell {
    std::size_t origin = 0;
    std::size_t dev = 0;
    double value = 0.0;
};

struct DiagonalSplit {
    Triangle train;                  // mask restricted to i + j <= I, plus (I, 1)
    std::vector<DiagonalCell> test;  // the I - 1 cells with i + j = I + 1, i < I
};

/// Holds out the latest calendar-year diagonal as a test set. The (I, 1)
/// cell stays in the training mask: it is the only observation of the
/// newest origin and has no lagged history to predict it from.
DiagonalSplit split_last_diagonal(const Triangle& t);

} // namespace macknet

#endif
