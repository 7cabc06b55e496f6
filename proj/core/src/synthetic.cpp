#include "nidsgen/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include "nidsgen/error.hpp"
#include "nidsgen/rng.hpp"

namespace nidsgen {

namespace {

constexpr std::uint32_t kMss = 1460;
constexpr std::int64_t kMs = 1'000'000;
constexpr std::int64_t kSec = 1'000'000'000;

FrameSpec tcp(Endpoint src, Endpoint dst, std::uint8_t flags, std::uint16_t window, std::uint32_t payload = 0,
              std::uint8_t options = 0) {
    FrameSpec f;
    f.src = src;
    f.dst = dst;
    f.protocol = kProtoTcp;
    f.tcp_flags = flags;
    f.tcp_window = window;
    f.payload_len = payload;
    f.tcp_option_words = options;
    return f;
}

std::string iso_utc(std::int64_t ts_ns) {
    const std::time_t secs = static_cast<std::time_t>(ts_ns / kSec);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

std::int64_t TrafficScript::tcp_session(std::int64_t t, Endpoint c, Endpoint s, const TcpSessionShape& shape) {
    using F = TcpFlags;
    const std::int64_t half = std::max<std::int64_t>(shape.rtt_ns / 2, 1);
    add(t, tcp(c, s, F::kSyn, shape.client_window, 0, 5));
    t += half;
    add(t, tcp(s, c, F::kSyn | F::kAck, shape.server_window, 0, 5));
    t += half;
    add(t, tcp(c, s, F::kAck, shape.client_window));
    for (std::size_t r = 0; r < shape.requests; ++r) {
        t += shape.think_ns;
        add(t, tcp(c, s, F::kPsh | F::kAck, shape.client_window, shape.request_len));
        t += half;
        std::uint32_t left = shape.response_len;
        while (left > 0) {
            const std::uint32_t seg = std::min(left, kMss);
            left -= seg;
            add(t, tcp(s, c, left == 0 ? F::kPsh | F::kAck : F::kAck, shape.server_window, seg));
            if (left > 0) t += 50'000;
        }
        t += half;
        add(t, tcp(c, s, F::kAck, shape.client_window));
    }
    t += shape.idle_before_close_ns;
    switch (shape.close) {
        case SessionClose::fin:
            t += half;
            add(t, tcp(c, s, F::kFin | F::kAck, shape.client_window));
            t += half;
            add(t, tcp(s, c, F::kFin | F::kAck, shape.server_window));
            t += half;
            add(t, tcp(c, s, F::kAck, shape.client_window));
            break;
        case SessionClose::rst:
            t += half;
            add(t, tcp(c, s, F::kRst, 0));
            break;
        case SessionClose::none: break;
    }
    return t;
}

std::int64_t TrafficScript::udp_exchange(std::int64_t t, Endpoint c, Endpoint s, std::size_t requests,
                                         std::uint32_t request_len, std::uint32_t response_len, std::int64_t gap_ns) {
    for (std::size_t r = 0; r < requests; ++r) {
        if (r) t += gap_ns;
        FrameSpec q;
        q.src = c;
        q.dst = s;
        q.protocol = kProtoUdp;
        q.payload_len = request_len;
        add(t, q);
        t += kMs / 2;
        FrameSpec a = q;
        std::swap(a.src, a.dst);
        a.payload_len = response_len;
        add(t, a);
    }
    return t;
}

std::int64_t TrafficScript::icmp_echo(std::int64_t t, const IpAddress& a, const IpAddress& b, std::size_t count,
                                      std::int64_t interval_ns, std::uint32_t payload_len) {
    for (std::size_t i = 0; i < count; ++i) {
        if (i) t += interval_ns;
        FrameSpec q;
        q.src = {a, 0};
        q.dst = {b, 0};
        q.protocol = a.family == IpAddress::Family::v4 ? kProtoIcmp : kProtoIcmpV6;
        q.payload_len = payload_len + 8;
        add(t, q);
        FrameSpec r = q;
        std::swap(r.src, r.dst);
        add(t + kMs / 4, r);
    }
    return t + kMs / 4;
}

std::vector<ScriptedPacket> TrafficScript::sorted() const {
    auto out = packets_;
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.ts_ns < b.ts_ns; });
    return out;
}

void write_capture(std::span<const ScriptedPacket> packets, std::ostream& out) {
    CaptureHeader h;
    h.timestamp_unit = TimestampUnit::nanosecond;
    auto stream = std::make_unique<std::ostringstream>();
    auto* raw = stream.get();
    {
        CaptureWriter w(std::move(stream), h);
        for (const auto& p : packets) w.write(p.ts_ns, build_ethernet_frame(p.spec));
        w.flush();
        out << raw->str();
    }
}

void TrafficScript::write(std::ostream& out) const {
    const auto s = sorted();
    write_capture(s, out);
}

void TrafficScript::write(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
    write(out);
}

// ---- labelled corpus ---------------------------------------------------------------

Corpus generate_corpus(const CorpusConfig& cfg) {
    if (cfg.packets == 0) throw Error(ErrorCode::invalid_argument, "corpus needs at least one packet");
    Rng rng(cfg.seed);
    TrafficScript script;
    const std::int64_t t0 = cfg.start_ns;
    const auto span_ns = static_cast<std::int64_t>(cfg.duration_s * 1e9);
    auto at = [&](double frac) { return t0 + static_cast<std::int64_t>(frac * static_cast<double>(span_ns)); };
    auto between = [&](std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(std::max<std::int64_t>(hi - lo, 1))));
    };
    auto eph = [&] { return static_cast<std::uint16_t>(32768 + rng.below(28000)); };
    auto range = [&](std::uint32_t lo, std::uint32_t hi) { return lo + static_cast<std::uint32_t>(rng.below(hi - lo + 1)); };

    const auto web = [](std::uint8_t i) { return IpAddress::v4(192, 168, 20, i); };
    const auto dns = IpAddress::v4(192, 168, 20, 53);
    const auto client = [](std::uint8_t i) { return IpAddress::v4(192, 168, 10, static_cast<std::uint8_t>(10 + i)); };

    struct Episode {
        std::string label;
        std::int64_t start, end;
        std::vector<IpAddress> attackers;
        IpAddress victim;
        std::uint16_t port;
        double share;
    };
    const std::vector<Episode> episodes = {
        {"DoS Hulk", at(0.16), at(0.36), {IpAddress::v4(172, 16, 0, 1)}, web(1), 80, 0.15},
        {"SSH-Patator", at(0.43), at(0.63), {IpAddress::v4(172, 16, 0, 2)}, web(5), 22, 0.15},
        {"Bot", at(0.70), at(0.90), {IpAddress::v4(192, 168, 10, 50), IpAddress::v4(192, 168, 10, 51)},
         IpAddress::v4(10, 99, 0, 1), 8080, 0.12},
    };

    for (const auto& ep : episodes) {
        const auto budget = static_cast<std::size_t>(ep.share * static_cast<double>(cfg.packets));
        const std::size_t before = script.size();
        while (script.size() - before < budget) {
            const auto& attacker = ep.attackers[rng.below(ep.attackers.size())];
            TcpSessionShape s;
            s.rtt_ns = 2 * kMs;
            if (ep.label == "DoS Hulk") {
                s.requests = 1;
                s.request_len = range(250, 450);
                s.response_len = range(0, 1) ? range(100, 300) : 0;
                s.think_ns = 0;
                s.client_window = 29200;
                s.close = rng.below(3) == 0 ? SessionClose::rst : SessionClose::fin;
            } else if (ep.label == "SSH-Patator") {
                s.requests = range(4, 6);
                s.request_len = range(40, 100);
                s.response_len = range(40, 100);
                s.think_ns = range(50, 200) * kMs;
                s.client_window = 64240;
                s.server_window = 29200;
            } else {
                s.requests = range(1, 2);
                s.request_len = range(150, 250);
                s.response_len = range(300, 800);
                s.think_ns = kSec;
                s.client_window = 8192;
                s.server_window = 16384;
            }
            script.tcp_session(between(ep.start, ep.end), {attacker, eph()}, {ep.victim, ep.port}, s);
        }
    }

    // Benign background across the whole day until the packet target is met.
    while (script.size() < cfg.packets + cfg.packets / 20) {
        const std::int64_t start = between(t0, t0 + span_ns);
        const auto c = client(static_cast<std::uint8_t>(rng.below(20)));
        const auto kind = rng.below(10);
        if (kind < 6) {
            TcpSessionShape s;
            s.requests = range(1, 5);
            s.request_len = range(100, 600);
            s.response_len = range(300, 4000);
            s.think_ns = range(20, 500) * kMs;
            s.rtt_ns = range(1, 40) * kMs;
            s.client_window = rng.below(2) ? 64240 : 65535;
            s.server_window = 28960;
            s.close = rng.below(10) == 0 ? SessionClose::rst : SessionClose::fin;
            const std::uint16_t port = rng.below(2) ? 80 : 443;
            script.tcp_session(start, {c, eph()}, {web(static_cast<std::uint8_t>(1 + rng.below(4))), port}, s);
        } else if (kind < 9) {
            script.udp_exchange(start, {c, eph()}, {dns, 53}, 1, range(30, 60), range(60, 200), 0);
        } else {
            script.icmp_echo(start, c, web(static_cast<std::uint8_t>(1 + rng.below(4))), range(2, 4), kSec, 56);
        }
    }

    Corpus corpus;
    corpus.packets = script.sorted();
    corpus.packets.resize(cfg.packets);

    std::ostringstream sched;
    sched << "# label,start,end,attackers,victims,dst_ports,protocol\n";
    for (const auto& ep : episodes) {
        sched << ep.label << ',' << iso_utc(ep.start) << ',' << iso_utc(ep.end + kSec) << ',';
        for (std::size_t i = 0; i < ep.attackers.size(); ++i) sched << (i ? ";" : "") << ep.attackers[i].to_string();
        sched << ',' << ep.victim.to_string() << ',' << ep.port << ",6\n";
    }
    corpus.schedule_csv = sched.str();
    return corpus;
}

// ---- feature-space pair --------------------------------------------------------------

std::pair<DatasetTable, DatasetTable> generate_shifted_pair(const ShiftedPairConfig& cfg) {
    if (cfg.features == 0) throw Error(ErrorCode::invalid_argument, "need at least one feature");
    std::vector<std::string> names;
    for (std::size_t j = 0; j < cfg.features; ++j) names.push_back("f" + std::to_string(j));

    auto make = [&](const std::string& name, double direction) {
        Rng rng(derive_seed(cfg.seed, {"shifted-pair", name}));
        std::vector<std::vector<double>> rows;
        std::vector<std::string> labels;
        auto base = [](std::size_t j) { return std::pow(10.0, 1.0 + static_cast<double>(j % 3)); };
        for (std::size_t i = 0; i < cfg.benign; ++i) {
            std::vector<double> r(cfg.features);
            for (std::size_t j = 0; j < cfg.features; ++j) r[j] = base(j) * std::exp(cfg.benign_sigma * rng.normal());
            rows.push_back(std::move(r));
            labels.emplace_back(kBenignLabel);
        }
        for (std::size_t k = 0; k < cfg.attacks.size(); ++k) {
            const auto& [label, count] = cfg.attacks[k];
            for (std::size_t i = 0; i < count; ++i) {
                std::vector<double> r(cfg.features);
                for (std::size_t j = 0; j < cfg.features; ++j) {
                    const bool hit = j == k % cfg.features || j == (k + 1) % cfg.features;
                    r[j] = hit ? base(j) * std::pow(cfg.scale, direction) * std::exp(cfg.attack_sigma * rng.normal())
                               : base(j) * std::exp(cfg.benign_sigma * rng.normal());
                }
                rows.push_back(std::move(r));
                labels.push_back(label);
            }
        }
        std::vector<std::size_t> order(rows.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(std::span<std::size_t>(order));
        std::vector<double> values;
        std::vector<std::string> ordered_labels;
        for (auto i : order) {
            values.insert(values.end(), rows[i].begin(), rows[i].end());
            ordered_labels.push_back(labels[i]);
        }
        Provenance p;
        p.source = name;
        return DatasetTable(names, std::move(values), std::move(ordered_labels), p);
    };
    return {make("synthA", 1.0), make("synthB", -1.0)};
}

}  // namespace nidsgen
