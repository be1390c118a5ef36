#ifndef MACKNET_IO_HPP
#define MACKNET_IO_HPP

#include "macknet/ensemble.hpp"
#include "macknet/mack.hpp"
#include "macknet/neural.hpp"
#include "macknet/triangle.hpp"

#include <nlohmann/json_fwd.hpp>

#include <string>
#include <vector>

namespace macknet {

using Json = nlohmann::json;

/// Writes content to path via a temporary file and rename, so readers
/// never see a partial file.
void write_text_atomic(const std::string& path, const std::string& content);

/// Canonical triangle JSON: origin years, dev lags, row-major values and
/// observed mask.
Json triangle_to_json(const Triangle& t, const std::string& company, LineOfBusiness lob);
Triangle triangle_from_json(const Json& j);

/// Long-format CSV of the observed cells: origin,dev,value.
std::string triangle_to_csv(const Triangle& t);

/// Per-simulation CSV: sim index, total reserve, one ultimate column per
/// origin year. Values are %.17g so a round trip is exact.
std::string distribution_to_csv(const ReserveDistribution& dist);
ReserveDistribution distribution_from_csv(const std::string& path);

/// Summary JSON: mean/sd/cv and the quantile grid (0.5%, 1%, 5%, 50%,
/// 95%, 99%, 99.5%) of the total reserve and total ultimate, plus the
/// central scenario. `timestamp` is added as a metadata field when
/// nonempty.
Json distribution_summary_json(const ReserveDistribution& dist, const std::string& timestamp);

/// Per-member training diagnostics.
Json ensemble_diagnostics_json(const std::vector<MemberDiagnostics>& members);

/// Flat named-tensor checkpoint of all network parameters (row-major data
/// with explicit shapes).
Json network_to_json(const Network& net);
Network network_from_json(const Json& j);

} // namespace macknet

#endif
