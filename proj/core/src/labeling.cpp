#include "nidsgen/labeling.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <sstream>

#include "nidsgen/csv.hpp"
#include "nidsgen/error.hpp"

namespace nidsgen {
namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto pos = s.find(';', start);
        if (pos == std::string_view::npos) pos = s.size();
        auto item = trim(s.substr(start, pos - start));
        if (!item.empty()) out.push_back(item);
        start = pos + 1;
    }
    return out;
}

template <typename T>
bool parse_int(std::string_view s, T& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

[[noreturn]] void malformed(std::size_t line, const std::string& why) {
    throw Error(ErrorCode::malformed_rule, "line " + std::to_string(line) + ": " + why);
}

IpSet parse_ip_set(std::string_view text, std::size_t line, const char* what) {
    IpSet set;
    for (const auto& item : split_list(text)) {
        if (item == "*") {
            set.any = true;
            continue;
        }
        auto ip = IpAddress::parse(item);
        if (!ip) malformed(line, std::string("bad ") + what + " address '" + item + "'");
        set.addresses.push_back(*ip);
    }
    if (!set.any && set.addresses.empty()) malformed(line, std::string("empty ") + what + " set");
    std::sort(set.addresses.begin(), set.addresses.end());
    set.addresses.erase(std::unique(set.addresses.begin(), set.addresses.end()), set.addresses.end());
    return set;
}

bool port_ok(const AttackScheduleRule& r, std::uint16_t port) {
    return r.dst_ports.empty() || std::binary_search(r.dst_ports.begin(), r.dst_ports.end(), port);
}

bool rule_matches(const AttackScheduleRule& r, const FlowEndpoints& f) {
    if (r.ip_protocol && *r.ip_protocol != f.ip_protocol) return false;
    const bool forward = r.attackers.contains(f.initiator.ip) && r.victims.contains(f.responder.ip) &&
                         port_ok(r, f.responder.port);
    if (forward) return true;
    return r.attackers.contains(f.responder.ip) && r.victims.contains(f.initiator.ip) && port_ok(r, f.initiator.port);
}

}  // namespace

bool IpSet::contains(const IpAddress& ip) const {
    return any || std::binary_search(addresses.begin(), addresses.end(), ip);
}

std::optional<std::int64_t> parse_iso8601(std::string_view s) {
    using namespace std::chrono;
    s = std::string_view(s).substr(0, s.find_last_not_of(" \t") + 1);
    if (s.size() < 19) return std::nullopt;
    int y, mo, d, h, mi, sec;
    if (!parse_int(s.substr(0, 4), y) || s[4] != '-' || !parse_int(s.substr(5, 2), mo) || s[7] != '-' ||
        !parse_int(s.substr(8, 2), d) || (s[10] != 'T' && s[10] != ' ') || !parse_int(s.substr(11, 2), h) ||
        s[13] != ':' || !parse_int(s.substr(14, 2), mi) || s[16] != ':' || !parse_int(s.substr(17, 2), sec)) {
        return std::nullopt;
    }
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;
    std::size_t i = 19;
    std::int64_t frac_ns = 0;
    if (i < s.size() && s[i] == '.') {
        ++i;
        int digits = 0;
        while (i < s.size() && s[i] >= '0' && s[i] <= '9') {
            if (digits < 9) {
                frac_ns = frac_ns * 10 + (s[i] - '0');
                ++digits;
            }
            ++i;
        }
        if (digits == 0) return std::nullopt;
        for (; digits < 9; ++digits) frac_ns *= 10;
    }
    std::int64_t offset_s = 0;
    if (i < s.size()) {
        if (s[i] == 'Z') {
            ++i;
        } else if (s[i] == '+' || s[i] == '-') {
            const int sign = s[i] == '+' ? 1 : -1;
            int oh, om;
            if (s.size() - i != 6 || !parse_int(s.substr(i + 1, 2), oh) || s[i + 3] != ':' ||
                !parse_int(s.substr(i + 4, 2), om)) {
                return std::nullopt;
            }
            offset_s = sign * (oh * 3600 + om * 60);
            i = s.size();
        }
        if (i != s.size()) return std::nullopt;
    }
    const auto days = sys_days(ymd).time_since_epoch().count();
    const std::int64_t secs = static_cast<std::int64_t>(days) * 86400 + h * 3600 + mi * 60 + sec - offset_s;
    return secs * 1'000'000'000 + frac_ns;
}

std::vector<AttackScheduleRule> parse_schedule(std::istream& in) {
    std::vector<AttackScheduleRule> rules;
    CsvReader reader(in);
    std::vector<std::string> f;
    while (reader.next(f)) {
        const std::size_t line = reader.line();
        if (f.size() < 5 || f.size() > 7) {
            malformed(line, "expected 5 to 7 fields, got " + std::to_string(f.size()));
        }
        AttackScheduleRule r;
        r.line = line;
        r.label = trim(f[0]);
        if (r.label.empty()) malformed(line, "empty label");
        auto start = parse_iso8601(trim(f[1]));
        auto end = parse_iso8601(trim(f[2]));
        if (!start) malformed(line, "bad start time '" + f[1] + "'");
        if (!end) malformed(line, "bad end time '" + f[2] + "'");
        r.start_ns = *start;
        r.end_ns = *end;
        r.attackers = parse_ip_set(f[3], line, "attacker");
        r.victims = parse_ip_set(f[4], line, "victim");
        if (f.size() > 5) {
            for (const auto& p : split_list(f[5])) {
                std::uint16_t port;
                if (!parse_int(p, port)) malformed(line, "bad port '" + p + "'");
                r.dst_ports.push_back(port);
            }
            std::sort(r.dst_ports.begin(), r.dst_ports.end());
        }
        if (f.size() > 6 && !trim(f[6]).empty()) {
            unsigned proto;
            if (!parse_int(trim(f[6]), proto) || proto > 255) malformed(line, "bad protocol '" + f[6] + "'");
            r.ip_protocol = static_cast<std::uint8_t>(proto);
        }
        rules.push_back(std::move(r));
    }
    return rules;
}

std::vector<AttackScheduleRule> load_schedule(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open schedule " + path.string());
    return parse_schedule(in);
}

ScheduleMatcher ScheduleMatcher::compile(std::vector<AttackScheduleRule> rules) {
    for (std::size_t i = 0; i < rules.size(); ++i) {
        const auto& r = rules[i];
        const std::size_t line = r.line ? r.line : i + 1;
        if (r.end_ns < r.start_ns) malformed(line, "window ends before it starts");
        if (is_benign(r.label)) malformed(line, "Benign is implicit and cannot be a rule label");
    }
    ScheduleMatcher m;
    m.rules_ = std::move(rules);
    for (const auto& r : m.rules_) {
        m.bounds_.push_back(r.start_ns);
        m.bounds_.push_back(r.end_ns + 1);
    }
    std::sort(m.bounds_.begin(), m.bounds_.end());
    m.bounds_.erase(std::unique(m.bounds_.begin(), m.bounds_.end()), m.bounds_.end());
    if (m.bounds_.size() >= 2) m.segments_.resize(m.bounds_.size() - 1);
    for (std::size_t ri = 0; ri < m.rules_.size(); ++ri) {
        const auto& r = m.rules_[ri];
        auto lo = std::lower_bound(m.bounds_.begin(), m.bounds_.end(), r.start_ns) - m.bounds_.begin();
        auto hi = std::lower_bound(m.bounds_.begin(), m.bounds_.end(), r.end_ns + 1) - m.bounds_.begin();
        for (auto s = lo; s < hi; ++s) m.segments_[static_cast<std::size_t>(s)].push_back(ri);
    }
    return m;
}

LabelOutcome ScheduleMatcher::label(const FlowEndpoints& flow) const {
    LabelOutcome out;
    out.label = std::string(kBenignLabel);
    if (segments_.empty() || flow.first_ts_ns < bounds_.front() || flow.first_ts_ns >= bounds_.back()) return out;
    const auto seg = static_cast<std::size_t>(
        std::upper_bound(bounds_.begin(), bounds_.end(), flow.first_ts_ns) - bounds_.begin() - 1);
    for (std::size_t ri : segments_[seg]) {
        const auto& r = rules_[ri];
        if (!rule_matches(r, flow)) continue;
        out.rule = ri;
        out.label = r.label;
        out.kind = r.is_drop() ? LabelOutcome::Kind::drop : LabelOutcome::Kind::attack;
        return out;
    }
    return out;
}

std::string class_count_report(const std::map<std::string, std::size_t>& counts, std::string_view dataset_name) {
    std::ostringstream os;
    std::vector<std::string> row{"Class", std::string(dataset_name)};
    write_csv_row(os, row);
    std::size_t total = 0;
    for (const auto& [label, n] : counts) {
        if (!is_benign(label)) continue;
        row = {label, std::to_string(n)};
        write_csv_row(os, row);
        total += n;
    }
    for (const auto& [label, n] : counts) {
        if (is_benign(label)) continue;
        row = {label, std::to_string(n)};
        write_csv_row(os, row);
        total += n;
    }
    row = {"Total", std::to_string(total)};
    write_csv_row(os, row);
    return os.str();
}

}  // namespace nidsgen
