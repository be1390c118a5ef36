#ifndef MACKNET_SCHEDULE_P_HPP
#define MACKNET_SCHEDULE_P_HPP

#include "macknet/triangle.hpp"

#include <string>
#include <vector>

namespace macknet {

/// Loader options for the CAS Schedule P loss development files.
struct SchedulePOptions {
    /// Incurred = IncurLoss - BulkLoss. The raw IncurLoss column includes
    /// bulk+IBNR reserves, which are not case incurred; netting them out is
    /// the common treatment of this database. Set false to use IncurLoss
    /// as published.
    bool net_bulk_reserve = true;
};

/// One company's worth of parsed rows, keyed (accident year, lag).
struct SchedulePSummaryRow {
    std::string company_code;
    std::string company_name;
    std::size_t cell_count = 0;   // (accident year, lag) records present
    double premium_total = 0.0;   // sum of earned net premiums over origins
    bool complete_square = false; // all 10x10 records present
};

/// Loads one company from a CAS Schedule P CSV (one file per line of
/// business; columns GRCODE, GRNAME, AccidentYear, DevelopmentLag,
/// IncurLoss_*, CumPaidLoss_*, BulkLoss_*, EarnedPremNet_*; header names
/// matched case-insensitively and suffix-agnostically).
///
/// Returns 10x10 cumulative paid and incurred triangles masked to the
/// as-reported upper triangle (accident years 1988-1997), the net earned
/// premiums, and the full developed squares for validation.
CompanyDataSet load_schedule_p(const std::string& path, LineOfBusiness lob,
                               const std::string& company_code,
                               const SchedulePOptions& options = {});

/// Scans a Schedule P CSV and summarizes every company in it, in file order.
std::vector<SchedulePSummaryRow> scan_schedule_p(const std::string& path);

} // namespace macknet

#endif
