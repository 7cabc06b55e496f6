#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nidsgen/dataset.hpp"
#include "nidsgen/net.hpp"

namespace nidsgen {

inline constexpr std::string_view kDropLabel = "DROP";

struct IpSet {
    bool any = false;  // "*"
    std::vector<IpAddress> addresses;  // sorted

    bool contains(const IpAddress& ip) const;
};

/// One line of an attack schedule. The window is inclusive on both ends.
struct AttackScheduleRule {
    std::string label;
    std::int64_t start_ns = 0;
    std::int64_t end_ns = 0;
    IpSet attackers;
    IpSet victims;
    /// Empty = any port. Matched against the victim-side port.
    std::vector<std::uint16_t> dst_ports;
    std::optional<std::uint8_t> ip_protocol;
    std::size_t line = 0;

    bool is_drop() const { return label == kDropLabel; }
};

/// "2018-02-14T10:32:00", optional fraction, optional "Z" or "+hh:mm".
/// A space may replace the 'T'. Times without an offset are UTC.
std::optional<std::int64_t> parse_iso8601(std::string_view text);

/// Schedule file: label,start,end,attackers,victims[,dst_ports][,protocol]
/// with ';' separating list items, '#' comments, DROP for exclusion windows.
std::vector<AttackScheduleRule> parse_schedule(std::istream& in);
std::vector<AttackScheduleRule> load_schedule(const std::filesystem::path& path);

struct FlowEndpoints {
    std::int64_t first_ts_ns = 0;
    Endpoint initiator;
    Endpoint responder;
    std::uint8_t ip_protocol = 0;
};

struct LabelOutcome {
    enum class Kind { attack, benign, drop };
    Kind kind = Kind::benign;
    std::string label;
    /// Index of the deciding rule, absent for Benign.
    std::optional<std::size_t> rule;
};

/// Immutable interval index over a rule list. Where rules overlap, the first
/// one in file order whose predicates match wins.
class ScheduleMatcher {
public:
    /// Throws MalformedRule on end < start or a Benign label.
    static ScheduleMatcher compile(std::vector<AttackScheduleRule> rules);

    /// Window containment is tested on first_ts only; a rule matches when
    /// attacker->victim holds in either flow direction.
    LabelOutcome label(const FlowEndpoints& flow) const;

    std::size_t rule_count() const noexcept { return rules_.size(); }
    /// Number of elementary intervals in the index.
    std::size_t segment_count() const noexcept { return segments_.size(); }
    const std::vector<AttackScheduleRule>& rules() const noexcept { return rules_; }

private:
    std::vector<AttackScheduleRule> rules_;
    std::vector<std::int64_t> bounds_;                // segment i = [bounds_[i], bounds_[i+1])
    std::vector<std::vector<std::size_t>> segments_;  // rule indices, ascending
};

/// Per-class counts in the layout of a dataset composition table:
/// "Class,<dataset>" header, one row per class (Benign first), then Total.
std::string class_count_report(const std::map<std::string, std::size_t>& counts, std::string_view dataset_name);

}  // namespace nidsgen
