#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nidsgen/flow.hpp"

namespace nidsgen {

enum class FeatureFamily {
    meta,
    count,
    length,
    iat,
    flags,
    header,
    rate,
    ratio,
    bulk,
    subflow,
    window,
    active_idle,
    duration,
};
std::string_view to_string(FeatureFamily f) noexcept;

struct FeatureColumn {
    std::string name;
    FeatureFamily family;
    std::string unit;
    /// Canonical formula identifier; distinct for every column.
    std::string formula;
    /// Identifier columns (flow id, addresses, timestamp) are not model inputs.
    bool identifier = false;
};

/// Ordered, versioned column list. The hash covers the version string and
/// every column's (name, family, unit, formula).
class FeatureSchema {
public:
    FeatureSchema(std::string version, std::vector<FeatureColumn> columns);

    const std::string& version() const noexcept { return version_; }
    std::uint64_t hash() const noexcept { return hash_; }
    std::string hash_hex() const;
    const std::vector<FeatureColumn>& columns() const noexcept { return columns_; }
    std::vector<std::string> names() const;
    /// Columns that carry FeatureVector::values, in order.
    std::vector<std::string> model_names() const;
    std::size_t model_count() const noexcept { return model_count_; }
    std::optional<std::size_t> index_of(std::string_view name) const;

private:
    std::string version_;
    std::vector<FeatureColumn> columns_;
    std::size_t model_count_ = 0;
    std::uint64_t hash_ = 0;
};

/// Identifier columns followed by the 77 model features, as written by `extract`.
const FeatureSchema& extraction_schema();
/// The 77 model features only.
const FeatureSchema& model_schema();

/// Identifier columns of the extraction schema.
inline constexpr std::string_view kIdentifierColumns[] = {"flow_id", "src_ip", "src_port", "dst_ip", "timestamp"};

struct FeatureConfig {
    /// Gaps above this split active periods; each such gap is an idle sample.
    double activity_timeout_s = 5.0;
    /// Maximum gap between consecutive packets of one bulk.
    double bulk_gap_s = 1.0;
    std::size_t bulk_min_packets = 4;
    /// Gaps above this separate subflows.
    double subflow_gap_s = 1.0;
};

struct FlowMeta {
    std::int64_t first_ts_ns = 0;
    FlowKey key;
    Endpoint initiator;
    Endpoint responder;
    Termination terminated_by = Termination::end_of_capture;
};

/// values are aligned with the schema's model (non-identifier) columns.
struct FeatureVector {
    std::uint64_t schema_hash = 0;
    std::vector<double> values;
    std::optional<FlowMeta> meta;
};

/// Computes every model feature of a terminated flow.
///
/// Conventions:
///  - packet length is the on-wire IP length;
///  - std/var are population statistics, 0 for fewer than two samples;
///  - every per-second rate is 0 when the flow duration is 0;
///  - empty sample sets (no backward packets, no idle gaps) give 0;
///  - init-window features are -1 when absent or when the flow is not TCP.
/// Throws EmptyFlow for a flow without packets.
FeatureVector finalize(const FlowState& flow, const FeatureConfig& cfg = {});

/// Drops identifier columns, keeping dst_port and ip_prot. Idempotent on
/// model-schema vectors; any other schema hash is a SchemaMismatch.
FeatureVector project_cic_compatible(const FeatureVector& v);

/// %.17g: shortest fixed width that round-trips every double.
std::string format_real(double v);
/// Seconds with nanosecond precision, e.g. "1518600000.000123456".
std::string format_timestamp(std::int64_t ts_ns);
std::optional<std::int64_t> parse_timestamp(std::string_view text);

/// Writes the features CSV: a schema comment line, a header row, one row per flow.
class FeatureCsvWriter {
public:
    FeatureCsvWriter(std::ostream& out, const FeatureSchema& schema);
    void write(const FeatureVector& v);

private:
    std::ostream& out_;
    const FeatureSchema& schema_;
};

/// "# schema=<version> hash=<hex>"
std::string schema_comment(const FeatureSchema& schema);

}  // namespace nidsgen
