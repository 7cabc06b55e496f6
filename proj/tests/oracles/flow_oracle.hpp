#pragma once
// Brute-force flow grouping and feature recomputation over oracle::Packet
// lists. Open flows live in a plain vector searched linearly; every feature
// is recomputed from the flow's packet list by its written definition.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pcap_oracle.hpp"

namespace oracle {

enum : std::uint8_t { FIN = 1, SYN = 2, RST = 4, PSH = 8, ACK = 16, URG = 32, ECE = 64, CWR = 128 };

struct Flow {
    std::string a_ip, b_ip;  // unordered endpoint pair
    std::uint16_t a_port = 0, b_port = 0;
    int proto = 0;
    std::string init_ip;
    std::uint16_t init_port = 0;
    std::uint16_t resp_port = 0;
    std::vector<Packet> pkts;  // timestamps as used for the flow (after clamping)
    std::vector<bool> fwd;
    std::size_t first_index = 0;
    bool fin_a = false, fin_b = false;  // FIN from initiator / responder
    std::string end;                    // fin, rst, idle_timeout, hard_timeout, end_of_capture

    bool same_key(const Packet& p) const {
        return p.proto == proto && ((p.src == a_ip && p.sport == a_port && p.dst == b_ip && p.dport == b_port) ||
                                    (p.dst == a_ip && p.dport == a_port && p.src == b_ip && p.sport == b_port));
    }
    std::int64_t first_ts() const { return pkts.front().ts_ns; }
    std::int64_t last_ts() const {
        std::int64_t m = pkts.front().ts_ns;
        for (const auto& p : pkts) m = std::max(m, p.ts_ns);
        return m;
    }
};

struct FlowRules {
    std::int64_t idle_ns = 120'000'000'000LL;
    std::optional<std::int64_t> hard_ns;
    std::int64_t tolerance_ns = 1'000'000;
};

/// Flows in order of their first packet.
inline std::vector<Flow> group_flows(const std::vector<Packet>& packets, const FlowRules& r = {}) {
    std::vector<Flow> open, done;
    for (std::size_t i = 0; i < packets.size(); ++i) {
        Packet p = packets[i];
        Flow* cur = nullptr;
        std::size_t cur_idx = 0;
        for (std::size_t k = 0; k < open.size(); ++k) {
            if (open[k].same_key(p)) {
                cur = &open[k];
                cur_idx = k;
            }
        }
        if (cur) {
            const std::int64_t last = cur->last_ts();
            if (p.ts_ns < last - r.tolerance_ns) p.ts_ns = last;
            std::string why;
            if (p.ts_ns - last > r.idle_ns) why = "idle_timeout";
            else if (r.hard_ns && p.ts_ns - cur->first_ts() > *r.hard_ns) why = "hard_timeout";
            else if (p.proto == 6 && cur->fin_a && cur->fin_b && (p.flags & SYN) && !(p.flags & ACK)) why = "fin";
            if (!why.empty()) {
                cur->end = why;
                done.push_back(*cur);
                open.erase(open.begin() + static_cast<std::ptrdiff_t>(cur_idx));
                cur = nullptr;
            }
        }
        if (!cur) {
            Flow f;
            f.a_ip = p.src;
            f.a_port = p.sport;
            f.b_ip = p.dst;
            f.b_port = p.dport;
            f.proto = p.proto;
            f.init_ip = p.src;
            f.init_port = p.sport;
            f.resp_port = p.dport;
            f.first_index = i;
            open.push_back(f);
            cur = &open.back();
            cur_idx = open.size() - 1;
        }
        const bool forward = p.src == cur->init_ip && p.sport == cur->init_port;
        const bool both_before = cur->fin_a && cur->fin_b;
        cur->pkts.push_back(p);
        cur->fwd.push_back(forward);
        if (p.proto != 6) continue;
        bool close = false;
        if (p.flags & RST) {
            cur->end = "rst";
            close = true;
        } else {
            if (p.flags & FIN) (forward ? cur->fin_a : cur->fin_b) = true;
            const bool pure_ack = (p.flags & ACK) && !(p.flags & (SYN | FIN | RST)) && p.payload == 0;
            if (both_before && (pure_ack || (p.flags & FIN))) {
                cur->end = "fin";
                close = true;
            }
        }
        if (close) {
            done.push_back(*cur);
            open.erase(open.begin() + static_cast<std::ptrdiff_t>(cur_idx));
        }
    }
    for (auto& f : open) {
        f.end = "end_of_capture";
        done.push_back(f);
    }
    std::sort(done.begin(), done.end(), [](const Flow& x, const Flow& y) { return x.first_index < y.first_index; });
    return done;
}

struct Stats {
    double min = 0, max = 0, mean = 0, std = 0, var = 0, sum = 0;
};

/// Population statistics by direct two-pass definition; empty input gives zeros.
inline Stats stats_of(const std::vector<double>& x) {
    Stats s;
    if (x.empty()) return s;
    s.min = *std::min_element(x.begin(), x.end());
    s.max = *std::max_element(x.begin(), x.end());
    long double sum = 0;
    for (double v : x) sum += v;
    s.sum = static_cast<double>(sum);
    s.mean = static_cast<double>(sum / x.size());
    long double ss = 0;
    for (double v : x) ss += (v - (long double)s.mean) * (v - (long double)s.mean);
    s.var = static_cast<double>(ss / x.size());
    s.std = std::sqrt(s.var);
    return s;
}

struct FeatureParams {
    double activity_timeout_s = 5.0;
    double bulk_gap_s = 1.0;
    std::size_t bulk_min = 4;
    double subflow_gap_s = 1.0;
};

/// Every model feature of one flow, keyed by column name.
inline std::map<std::string, double> features(const Flow& f, const FeatureParams& fp = {}) {
    std::map<std::string, double> out;
    const auto& P = f.pkts;
    auto secs = [](std::int64_t ns) { return static_cast<double>(ns) * 1e-9; };
    const double dur = secs(f.last_ts() - f.first_ts());
    auto rate = [&](double x) { return dur > 0 ? x / dur : 0.0; };

    std::vector<double> len_all, len_f, len_b;
    std::vector<std::int64_t> ts_all, ts_f, ts_b;
    for (std::size_t i = 0; i < P.size(); ++i) {
        len_all.push_back(P[i].ip_len);
        ts_all.push_back(P[i].ts_ns);
        (f.fwd[i] ? len_f : len_b).push_back(P[i].ip_len);
        (f.fwd[i] ? ts_f : ts_b).push_back(P[i].ts_ns);
    }
    auto gaps = [&](const std::vector<std::int64_t>& ts) {
        std::vector<double> g;
        for (std::size_t i = 1; i < ts.size(); ++i) g.push_back(secs(ts[i] - ts[i - 1]));
        return g;
    };
    const Stats sa = stats_of(len_all), sf = stats_of(len_f), sb = stats_of(len_b);
    const Stats ia = stats_of(gaps(ts_all)), ifw = stats_of(gaps(ts_f)), ibw = stats_of(gaps(ts_b));
    const double nf = static_cast<double>(len_f.size()), nb = static_cast<double>(len_b.size());

    out["dst_port"] = f.resp_port;
    out["ip_prot"] = f.proto;
    out["flow_duration"] = dur;
    out["fwd_pkt_cnt"] = nf;
    out["bwd_pkt_cnt"] = nb;
    out["fwd_tot_bytes"] = sf.sum;
    out["bwd_tot_bytes"] = sb.sum;
    out["pkt_len_min"] = sa.min;
    out["pkt_len_max"] = sa.max;
    out["pkt_len_mean"] = sa.mean;
    out["pkt_len_std"] = sa.std;
    out["pkt_len_var"] = sa.var;
    for (auto [d, s] : {std::pair{"fwd", sf}, std::pair{"bwd", sb}}) {
        const std::string p = std::string(d) + "_pkt_len_";
        out[p + "min"] = s.min;
        out[p + "max"] = s.max;
        out[p + "mean"] = s.mean;
        out[p + "std"] = s.std;
    }
    out["iat_mean"] = ia.mean;
    out["iat_std"] = ia.std;
    out["iat_min"] = ia.min;
    out["iat_max"] = ia.max;
    for (auto [d, s] : {std::pair{"fwd", ifw}, std::pair{"bwd", ibw}}) {
        const std::string p = std::string(d) + "_iat_";
        out[p + "tot"] = s.sum;
        out[p + "mean"] = s.mean;
        out[p + "std"] = s.std;
        out[p + "min"] = s.min;
        out[p + "max"] = s.max;
    }
    const char* names[] = {"fin", "syn", "rst", "psh", "ack", "urg", "ece", "cwr"};
    for (int b = 0; b < 8; ++b) {
        double n = 0;
        for (const auto& p : P) n += (p.flags >> b) & 1;
        out[std::string("flag_") + names[b]] = n;
    }
    auto count_dir = [&](bool fwd, auto pred) {
        double n = 0;
        for (std::size_t i = 0; i < P.size(); ++i) n += (f.fwd[i] == fwd && pred(P[i])) ? 1 : 0;
        return n;
    };
    out["fwd_flag_psh"] = count_dir(true, [](const Packet& p) { return (p.flags & PSH) != 0; });
    out["bwd_flag_psh"] = count_dir(false, [](const Packet& p) { return (p.flags & PSH) != 0; });
    out["fwd_flag_urg"] = count_dir(true, [](const Packet& p) { return (p.flags & URG) != 0; });
    out["bwd_flag_urg"] = count_dir(false, [](const Packet& p) { return (p.flags & URG) != 0; });
    std::vector<double> hf, hb;
    for (std::size_t i = 0; i < P.size(); ++i) (f.fwd[i] ? hf : hb).push_back(P[i].hdr_len);
    out["fwd_hdr_len_tot"] = stats_of(hf).sum;
    out["bwd_hdr_len_tot"] = stats_of(hb).sum;
    out["fwd_pkt_hdr_len_min"] = stats_of(hf).min;
    out["bwd_pkt_hdr_len_min"] = stats_of(hb).min;
    out["pkt_per_s"] = rate(nf + nb);
    out["byte_per_s"] = rate(sa.sum);
    out["fwd_pkt_per_s"] = rate(nf);
    out["bwd_pkt_per_s"] = rate(nb);
    out["down_up_ratio"] = nb / nf;
    out["fwd_non_empty_pkt_cnt"] = count_dir(true, [](const Packet& p) { return p.payload > 0; });
    out["bwd_non_empty_pkt_cnt"] = count_dir(false, [](const Packet& p) { return p.payload > 0; });

    // Bulks: split the payload-carrying packets into maximal runs of one
    // direction with gaps within bulk_gap; runs of at least bulk_min count.
    {
        std::vector<std::size_t> data;
        for (std::size_t i = 0; i < P.size(); ++i) {
            if (P[i].payload > 0) data.push_back(i);
        }
        std::vector<std::vector<std::size_t>> runs;
        for (std::size_t k = 0; k < data.size(); ++k) {
            const std::size_t i = data[k];
            bool extend = false;
            if (!runs.empty()) {
                const std::size_t j = runs.back().back();
                extend = f.fwd[i] == f.fwd[j] && secs(P[i].ts_ns - P[j].ts_ns) <= fp.bulk_gap_s + 1e-12;
            }
            if (extend) runs.back().push_back(i);
            else runs.push_back({i});
        }
        for (bool d : {true, false}) {
            std::vector<double> bytes, pk, rt;
            for (const auto& run : runs) {
                if (run.size() < fp.bulk_min || f.fwd[run[0]] != d) continue;
                double b = 0;
                for (auto i : run) b += P[i].payload;
                const double t = secs(P[run.back()].ts_ns - P[run.front()].ts_ns);
                bytes.push_back(b);
                pk.push_back(static_cast<double>(run.size()));
                rt.push_back(t > 0 ? b / t : 0.0);
            }
            const std::string p = d ? "fwd_bulk_" : "bwd_bulk_";
            out[p + "bytes_mean"] = stats_of(bytes).mean;
            out[p + "pkts_mean"] = stats_of(pk).mean;
            out[p + "rate_mean"] = stats_of(rt).mean;
        }
    }

    double subflows = 1;
    for (double g : gaps(ts_all)) subflows += g > fp.subflow_gap_s + 1e-12 ? 1 : 0;
    out["subflow_fwd_pkts_mean"] = nf / subflows;
    out["subflow_fwd_bytes_mean"] = sf.sum / subflows;
    out["subflow_bwd_pkts_mean"] = nb / subflows;
    out["subflow_bwd_bytes_mean"] = sb.sum / subflows;

    double fw = -1, bw = -1;
    if (f.proto == 6) {
        for (std::size_t i = 0; i < P.size(); ++i) {
            if (f.fwd[i] && (P[i].flags & SYN) && fw < 0) fw = P[i].window;
            if (!f.fwd[i] && bw < 0) bw = P[i].window;
        }
    }
    out["fwd_tcp_init_win_bytes"] = fw;
    out["bwd_tcp_init_win_bytes"] = bw;

    // Active periods are the stretches between gaps above activity_timeout;
    // those gaps are the idle samples.
    std::vector<double> active, idle;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= P.size(); ++i) {
        const bool cut = i == P.size() || secs(P[i].ts_ns - P[i - 1].ts_ns) > fp.activity_timeout_s + 1e-12;
        if (!cut) continue;
        active.push_back(secs(P[i - 1].ts_ns - P[start].ts_ns));
        if (i < P.size()) idle.push_back(secs(P[i].ts_ns - P[i - 1].ts_ns));
        start = i;
    }
    for (auto [k, v] : {std::pair{"active", &active}, std::pair{"idle", &idle}}) {
        const Stats s = stats_of(*v);
        out[std::string(k) + "_mean"] = s.mean;
        out[std::string(k) + "_std"] = s.std;
        out[std::string(k) + "_max"] = s.max;
        out[std::string(k) + "_min"] = s.min;
    }
    return out;
}

}  // namespace oracle
