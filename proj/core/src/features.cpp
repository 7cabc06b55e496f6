#include "nidsgen/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "nidsgen/csv.hpp"
#include "nidsgen/error.hpp"
#include "nidsgen/rng.hpp"

namespace nidsgen {

std::string_view to_string(FeatureFamily f) noexcept {
    switch (f) {
        case FeatureFamily::meta: return "meta";
        case FeatureFamily::count: return "count";
        case FeatureFamily::length: return "length";
        case FeatureFamily::iat: return "iat";
        case FeatureFamily::flags: return "flags";
        case FeatureFamily::header: return "header";
        case FeatureFamily::rate: return "rate";
        case FeatureFamily::ratio: return "ratio";
        case FeatureFamily::bulk: return "bulk";
        case FeatureFamily::subflow: return "subflow";
        case FeatureFamily::window: return "window";
        case FeatureFamily::active_idle: return "active_idle";
        case FeatureFamily::duration: return "duration";
    }
    return "unknown";
}

FeatureSchema::FeatureSchema(std::string version, std::vector<FeatureColumn> columns)
    : version_(std::move(version)), columns_(std::move(columns)) {
    std::uint64_t h = fnv1a64(version_);
    for (const auto& c : columns_) {
        if (!c.identifier) ++model_count_;
        h = fnv1a64(c.name + '|' + std::string(to_string(c.family)) + '|' + c.unit + '|' + c.formula + '|' +
                        (c.identifier ? "id" : "model") + ';',
                    h);
    }
    hash_ = h;
}

std::string FeatureSchema::hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_));
    return buf;
}

std::vector<std::string> FeatureSchema::names() const {
    std::vector<std::string> out;
    for (const auto& c : columns_) out.push_back(c.name);
    return out;
}

std::vector<std::string> FeatureSchema::model_names() const {
    std::vector<std::string> out;
    for (const auto& c : columns_) {
        if (!c.identifier) out.push_back(c.name);
    }
    return out;
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].name == name) return i;
    }
    return std::nullopt;
}

namespace {

using F = FeatureFamily;

std::vector<FeatureColumn> identifier_columns() {
    return {
        {"flow_id", F::meta, "", "id(key,first_ts)", true},
        {"src_ip", F::meta, "", "ip(initiator)", true},
        {"src_port", F::meta, "", "port(initiator)", true},
        {"dst_ip", F::meta, "", "ip(responder)", true},
        {"timestamp", F::meta, "s", "first_ts", true},
    };
}

// Order here is the order finalize() emits values in.
std::vector<FeatureColumn> model_columns() {
    std::vector<FeatureColumn> c = {
        {"dst_port", F::meta, "", "port(responder)"},
        {"ip_prot", F::meta, "", "ip_protocol"},
        {"flow_duration", F::duration, "s", "last_ts-first_ts"},
        {"fwd_pkt_cnt", F::count, "pkt", "count(fwd)"},
        {"bwd_pkt_cnt", F::count, "pkt", "count(bwd)"},
        {"fwd_tot_bytes", F::length, "B", "sum(len,fwd)"},
        {"bwd_tot_bytes", F::length, "B", "sum(len,bwd)"},
        {"pkt_len_min", F::length, "B", "min(len,all)"},
        {"pkt_len_max", F::length, "B", "max(len,all)"},
        {"pkt_len_mean", F::length, "B", "mean(len,all)"},
        {"pkt_len_std", F::length, "B", "std(len,all)"},
        {"pkt_len_var", F::length, "B^2", "var(len,all)"},
    };
    for (const char* dir : {"fwd", "bwd"}) {
        const std::string d = dir;
        for (const char* stat : {"min", "max", "mean", "std"}) {
            c.push_back({d + "_pkt_len_" + stat, F::length, "B", std::string(stat) + "(len," + d + ")"});
        }
    }
    for (const char* stat : {"mean", "std", "min", "max"}) {
        c.push_back({std::string("iat_") + stat, F::iat, "s", std::string(stat) + "(iat,all)"});
    }
    for (const char* dir : {"fwd", "bwd"}) {
        const std::string d = dir;
        for (const char* stat : {"tot", "mean", "std", "min", "max"}) {
            c.push_back({d + "_iat_" + stat, F::iat, "s", std::string(stat) + "(iat," + d + ")"});
        }
    }
    for (const char* flag : {"fin", "syn", "rst", "psh", "ack", "urg", "ece", "cwr"}) {
        c.push_back({std::string("flag_") + flag, F::flags, "pkt", std::string("count(") + flag + ",all)"});
    }
    c.push_back({"fwd_flag_psh", F::flags, "pkt", "count(psh,fwd)"});
    c.push_back({"bwd_flag_psh", F::flags, "pkt", "count(psh,bwd)"});
    c.push_back({"fwd_flag_urg", F::flags, "pkt", "count(urg,fwd)"});
    c.push_back({"bwd_flag_urg", F::flags, "pkt", "count(urg,bwd)"});
    c.push_back({"fwd_hdr_len_tot", F::header, "B", "sum(hdr,fwd)"});
    c.push_back({"bwd_hdr_len_tot", F::header, "B", "sum(hdr,bwd)"});
    c.push_back({"fwd_pkt_hdr_len_min", F::header, "B", "min(hdr,fwd)"});
    c.push_back({"bwd_pkt_hdr_len_min", F::header, "B", "min(hdr,bwd)"});
    c.push_back({"pkt_per_s", F::rate, "pkt/s", "count(all)/duration"});
    c.push_back({"byte_per_s", F::rate, "B/s", "sum(len,all)/duration"});
    c.push_back({"fwd_pkt_per_s", F::rate, "pkt/s", "count(fwd)/duration"});
    c.push_back({"bwd_pkt_per_s", F::rate, "pkt/s", "count(bwd)/duration"});
    c.push_back({"down_up_ratio", F::ratio, "", "count(bwd)/count(fwd)"});
    c.push_back({"fwd_non_empty_pkt_cnt", F::count, "pkt", "count(payload>0,fwd)"});
    c.push_back({"bwd_non_empty_pkt_cnt", F::count, "pkt", "count(payload>0,bwd)"});
    for (const char* dir : {"fwd", "bwd"}) {
        const std::string d = dir;
        c.push_back({d + "_bulk_bytes_mean", F::bulk, "B", "mean(bulk_bytes," + d + ")"});
        c.push_back({d + "_bulk_pkts_mean", F::bulk, "pkt", "mean(bulk_pkts," + d + ")"});
        c.push_back({d + "_bulk_rate_mean", F::bulk, "B/s", "mean(bulk_rate," + d + ")"});
    }
    c.push_back({"subflow_fwd_pkts_mean", F::subflow, "pkt", "count(fwd)/subflows"});
    c.push_back({"subflow_fwd_bytes_mean", F::subflow, "B", "sum(len,fwd)/subflows"});
    c.push_back({"subflow_bwd_pkts_mean", F::subflow, "pkt", "count(bwd)/subflows"});
    c.push_back({"subflow_bwd_bytes_mean", F::subflow, "B", "sum(len,bwd)/subflows"});
    c.push_back({"fwd_tcp_init_win_bytes", F::window, "B", "window(first syn,fwd)"});
    c.push_back({"bwd_tcp_init_win_bytes", F::window, "B", "window(first,bwd)"});
    for (const char* kind : {"active", "idle"}) {
        for (const char* stat : {"mean", "std", "max", "min"}) {
            c.push_back({std::string(kind) + "_" + stat, F::active_idle, "s",
                         std::string(stat) + "(" + kind + "_periods)"});
        }
    }
    return c;
}

struct Summary {
    double min = 0, max = 0, mean = 0, std = 0, var = 0, sum = 0;
};

Summary summarize(std::span<const double> xs) {
    Summary s;
    if (xs.empty()) return s;
    s.min = xs[0];
    s.max = xs[0];
    for (double x : xs) {
        s.sum += x;
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
    }
    const double n = static_cast<double>(xs.size());
    s.mean = std::clamp(s.sum / n, s.min, s.max);
    if (xs.size() > 1) {
        double ss = 0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.var = ss / n;
        s.std = std::sqrt(s.var);
    }
    return s;
}

double seconds_between(std::int64_t a_ns, std::int64_t b_ns) { return static_cast<double>(b_ns - a_ns) * 1e-9; }

std::int64_t to_ns(double s) { return static_cast<std::int64_t>(std::llround(s * 1e9)); }

struct BulkTotals {
    std::vector<double> bytes, pkts, rate;
};

}  // namespace

const FeatureSchema& extraction_schema() {
    static const FeatureSchema schema = [] {
        auto ids = identifier_columns();
        auto model = model_columns();
        std::vector<FeatureColumn> cols;
        // flow_id, src_ip, src_port, dst_ip, dst_port, ip_prot, timestamp, ...
        cols.push_back(ids[0]);
        cols.push_back(ids[1]);
        cols.push_back(ids[2]);
        cols.push_back(ids[3]);
        cols.push_back(model[0]);
        cols.push_back(model[1]);
        cols.push_back(ids[4]);
        cols.insert(cols.end(), model.begin() + 2, model.end());
        return FeatureSchema("nidsgen-flow-v1", std::move(cols));
    }();
    return schema;
}

const FeatureSchema& model_schema() {
    static const FeatureSchema schema("nidsgen-flow-v1-model", model_columns());
    return schema;
}

FeatureVector finalize(const FlowState& flow, const FeatureConfig& cfg) {
    const auto& ps = flow.packets;
    if (ps.empty()) throw Error(ErrorCode::empty_flow, "flow " + flow.key.to_string() + " has no packets");

    std::vector<double> len_all, len_fwd, len_bwd, iat_all, iat_fwd, iat_bwd;
    double fwd_n = 0, bwd_n = 0, fwd_bytes = 0, bwd_bytes = 0;
    double fwd_hdr = 0, bwd_hdr = 0, fwd_hdr_min = 0, bwd_hdr_min = 0;
    double fwd_nonempty = 0, bwd_nonempty = 0;
    double fwd_psh = 0, bwd_psh = 0, fwd_urg = 0, bwd_urg = 0;
    std::array<double, 8> flag_counts{};
    std::optional<std::int64_t> last_fwd_ts, last_bwd_ts;
    double fwd_win = -1, bwd_win = -1;
    const bool tcp = flow.key.ip_protocol == kProtoTcp;

    for (std::size_t i = 0; i < ps.size(); ++i) {
        const auto& p = ps[i];
        const double len = p.total_len;
        len_all.push_back(len);
        if (i > 0) iat_all.push_back(seconds_between(ps[i - 1].ts_ns, p.ts_ns));
        for (int b = 0; b < 8; ++b) {
            if (p.flags.bits & (1u << b)) flag_counts[b] += 1;
        }
        if (p.forward) {
            len_fwd.push_back(len);
            fwd_bytes += len;
            fwd_hdr += p.header_len;
            fwd_hdr_min = fwd_n == 0 ? p.header_len : std::min<double>(fwd_hdr_min, p.header_len);
            fwd_n += 1;
            if (p.payload_len > 0) fwd_nonempty += 1;
            if (p.flags.psh()) fwd_psh += 1;
            if (p.flags.urg()) fwd_urg += 1;
            if (last_fwd_ts) iat_fwd.push_back(seconds_between(*last_fwd_ts, p.ts_ns));
            last_fwd_ts = p.ts_ns;
            if (tcp && fwd_win < 0 && p.flags.syn()) fwd_win = p.window;
        } else {
            len_bwd.push_back(len);
            bwd_bytes += len;
            bwd_hdr += p.header_len;
            bwd_hdr_min = bwd_n == 0 ? p.header_len : std::min<double>(bwd_hdr_min, p.header_len);
            bwd_n += 1;
            if (p.payload_len > 0) bwd_nonempty += 1;
            if (p.flags.psh()) bwd_psh += 1;
            if (p.flags.urg()) bwd_urg += 1;
            if (last_bwd_ts) iat_bwd.push_back(seconds_between(*last_bwd_ts, p.ts_ns));
            last_bwd_ts = p.ts_ns;
            if (tcp && bwd_win < 0) bwd_win = p.window;
        }
    }

    const double duration = flow.duration_seconds();
    auto rate = [duration](double x) { return duration > 0 ? x / duration : 0.0; };

    // Bulks: maximal same-direction runs of payload-carrying packets whose
    // consecutive gaps stay within bulk_gap.
    std::array<BulkTotals, 2> bulks;
    {
        const std::int64_t gap_ns = to_ns(cfg.bulk_gap_s);
        std::size_t run_start = 0, run_len = 0;
        bool run_fwd = true;
        std::int64_t run_first = 0, run_last = 0;
        double run_bytes = 0;
        auto close_run = [&] {
            if (run_len >= cfg.bulk_min_packets) {
                auto& b = bulks[run_fwd ? 0 : 1];
                const double dur = seconds_between(run_first, run_last);
                b.bytes.push_back(run_bytes);
                b.pkts.push_back(static_cast<double>(run_len));
                b.rate.push_back(dur > 0 ? run_bytes / dur : 0.0);
            }
            run_len = 0;
        };
        for (std::size_t i = 0; i < ps.size(); ++i) {
            const auto& p = ps[i];
            if (p.payload_len == 0) continue;
            if (run_len > 0 && p.forward == run_fwd && p.ts_ns - run_last <= gap_ns) {
                ++run_len;
                run_last = p.ts_ns;
                run_bytes += p.payload_len;
                continue;
            }
            close_run();
            run_start = i;
            run_len = 1;
            run_fwd = p.forward;
            run_first = run_last = p.ts_ns;
            run_bytes = p.payload_len;
        }
        close_run();
        (void)run_start;
    }

    // Subflows and active/idle periods both segment the packet sequence on gaps.
    double subflows = 1;
    std::vector<double> active, idle;
    {
        const std::int64_t subflow_gap_ns = to_ns(cfg.subflow_gap_s);
        const std::int64_t activity_ns = to_ns(cfg.activity_timeout_s);
        std::int64_t active_start = ps[0].ts_ns;
        for (std::size_t i = 1; i < ps.size(); ++i) {
            const std::int64_t gap = ps[i].ts_ns - ps[i - 1].ts_ns;
            if (gap > subflow_gap_ns) subflows += 1;
            if (gap > activity_ns) {
                active.push_back(seconds_between(active_start, ps[i - 1].ts_ns));
                idle.push_back(seconds_between(ps[i - 1].ts_ns, ps[i].ts_ns));
                active_start = ps[i].ts_ns;
            }
        }
        active.push_back(seconds_between(active_start, ps.back().ts_ns));
    }

    const Summary all = summarize(len_all);
    const Summary fwd = summarize(len_fwd);
    const Summary bwd = summarize(len_bwd);
    const Summary iat = summarize(iat_all);
    const Summary fiat = summarize(iat_fwd);
    const Summary biat = summarize(iat_bwd);
    const Summary act = summarize(active);
    const Summary idl = summarize(idle);
    auto mean_of = [](const std::vector<double>& xs) { return summarize(xs).mean; };

    FeatureVector v;
    v.schema_hash = extraction_schema().hash();
    auto& out = v.values;
    out.reserve(77);
    out.push_back(flow.responder.port);
    out.push_back(flow.key.ip_protocol);
    out.push_back(duration);
    out.push_back(fwd_n);
    out.push_back(bwd_n);
    out.push_back(fwd_bytes);
    out.push_back(bwd_bytes);
    for (double x : {all.min, all.max, all.mean, all.std, all.var}) out.push_back(x);
    for (const Summary* s : {&fwd, &bwd}) {
        for (double x : {s->min, s->max, s->mean, s->std}) out.push_back(x);
    }
    for (double x : {iat.mean, iat.std, iat.min, iat.max}) out.push_back(x);
    for (const Summary* s : {&fiat, &biat}) {
        for (double x : {s->sum, s->mean, s->std, s->min, s->max}) out.push_back(x);
    }
    for (double x : flag_counts) out.push_back(x);
    for (double x : {fwd_psh, bwd_psh, fwd_urg, bwd_urg}) out.push_back(x);
    for (double x : {fwd_hdr, bwd_hdr, fwd_hdr_min, bwd_hdr_min}) out.push_back(x);
    out.push_back(rate(fwd_n + bwd_n));
    out.push_back(rate(fwd_bytes + bwd_bytes));
    out.push_back(rate(fwd_n));
    out.push_back(rate(bwd_n));
    out.push_back(bwd_n / fwd_n);
    out.push_back(fwd_nonempty);
    out.push_back(bwd_nonempty);
    for (const auto& b : bulks) {
        out.push_back(mean_of(b.bytes));
        out.push_back(mean_of(b.pkts));
        out.push_back(mean_of(b.rate));
    }
    out.push_back(fwd_n / subflows);
    out.push_back(fwd_bytes / subflows);
    out.push_back(bwd_n / subflows);
    out.push_back(bwd_bytes / subflows);
    out.push_back(fwd_win);
    out.push_back(bwd_win);
    for (double x : {act.mean, act.std, act.max, act.min, idl.mean, idl.std, idl.max, idl.min}) out.push_back(x);

    for (double& x : out) {
        if (!std::isfinite(x)) x = 0.0;
    }
    FlowMeta meta;
    meta.first_ts_ns = flow.first_ts_ns;
    meta.key = flow.key;
    meta.initiator = flow.initiator;
    meta.responder = flow.responder;
    meta.terminated_by = flow.terminated_by;
    v.meta = meta;
    return v;
}

FeatureVector project_cic_compatible(const FeatureVector& v) {
    if (v.schema_hash == model_schema().hash()) return v;
    if (v.schema_hash != extraction_schema().hash()) {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v.schema_hash));
        throw Error(ErrorCode::schema_mismatch, std::string("unknown feature schema hash ") + buf);
    }
    // Values already exclude identifier columns and the schema has no
    // duplicated header-length column, so projection only detaches meta.
    FeatureVector out;
    out.schema_hash = model_schema().hash();
    out.values = v.values;
    return out;
}

std::string format_real(double v) {
    if (v == 0.0) return "0";  // also folds -0
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_timestamp(std::int64_t ts_ns) {
    const bool neg = ts_ns < 0;
    const std::uint64_t mag = neg ? static_cast<std::uint64_t>(-(ts_ns + 1)) + 1 : static_cast<std::uint64_t>(ts_ns);
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%llu.%09llu", neg ? "-" : "", static_cast<unsigned long long>(mag / 1'000'000'000),
                  static_cast<unsigned long long>(mag % 1'000'000'000));
    return buf;
}

std::optional<std::int64_t> parse_timestamp(std::string_view text) {
    if (text.empty()) return std::nullopt;
    bool neg = false;
    if (text[0] == '-') {
        neg = true;
        text.remove_prefix(1);
    }
    std::int64_t sec = 0, frac = 0;
    std::size_t i = 0;
    if (i >= text.size()) return std::nullopt;
    for (; i < text.size() && text[i] != '.'; ++i) {
        if (text[i] < '0' || text[i] > '9') return std::nullopt;
        sec = sec * 10 + (text[i] - '0');
    }
    int digits = 0;
    if (i < text.size()) {
        for (++i; i < text.size(); ++i) {
            if (text[i] < '0' || text[i] > '9') return std::nullopt;
            if (digits < 9) {
                frac = frac * 10 + (text[i] - '0');
                ++digits;
            }
        }
    }
    for (; digits < 9; ++digits) frac *= 10;
    const std::int64_t ns = sec * 1'000'000'000 + frac;
    return neg ? -ns : ns;
}

std::string schema_comment(const FeatureSchema& schema) {
    return "# schema=" + schema.version() + " hash=" + schema.hash_hex();
}

FeatureCsvWriter::FeatureCsvWriter(std::ostream& out, const FeatureSchema& schema) : out_(out), schema_(schema) {
    out_ << schema_comment(schema_) << '\n';
    const auto names = schema_.names();
    write_csv_row(out_, names);
}

void FeatureCsvWriter::write(const FeatureVector& v) {
    std::vector<std::string> row;
    row.reserve(schema_.columns().size());
    std::size_t model_idx = 0;
    for (const auto& col : schema_.columns()) {
        if (!col.identifier) {
            row.push_back(format_real(v.values.at(model_idx++)));
            continue;
        }
        if (!v.meta) throw Error(ErrorCode::schema_mismatch, "identifier column " + col.name + " needs flow meta");
        const auto& m = *v.meta;
        if (col.name == "flow_id") {
            row.push_back(m.key.to_string() + "-" + format_timestamp(m.first_ts_ns));
        } else if (col.name == "src_ip") {
            row.push_back(m.initiator.ip.to_string());
        } else if (col.name == "src_port") {
            row.push_back(std::to_string(m.initiator.port));
        } else if (col.name == "dst_ip") {
            row.push_back(m.responder.ip.to_string());
        } else if (col.name == "timestamp") {
            row.push_back(format_timestamp(m.first_ts_ns));
        }
    }
    write_csv_row(out_, row);
}

}  // namespace nidsgen
