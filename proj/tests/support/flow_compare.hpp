#pragma once
// Runs the library and the brute-force reference over one capture file and
// lists every disagreement.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles/flow_oracle.hpp"
#include "../oracles/pcap_oracle.hpp"
#include "nidsgen/features.hpp"
#include "nidsgen/flow.hpp"
#include "nidsgen/pcap.hpp"

namespace testsupport {

struct FlowComparison {
    std::size_t flows = 0;
    std::size_t packets = 0;
    std::size_t features_checked = 0;
    std::vector<std::string> mismatches;
};

inline bool close_enough(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

inline FlowComparison compare_with_oracle(const std::filesystem::path& pcap, std::optional<double> hard_timeout_s = {},
                                          std::size_t jobs = 1, double tol = 1e-9) {
    using namespace nidsgen;
    FlowComparison out;
    auto fail = [&](const std::string& m) {
        if (out.mismatches.size() < 20) out.mismatches.push_back(m);
    };

    const auto decoded = read_capture(pcap);
    const auto ref = oracle::read_pcap(pcap.string());
    if (decoded.packets.size() != ref.packets.size()) fail("decoded packet count differs");
    if (decoded.stats.total_len_sum != ref.ip_len_sum) fail("IP length sum differs");

    FlowConfig cfg;
    cfg.hard_timeout_s = hard_timeout_s;
    auto flows = assemble_flows(decoded.packets, cfg, jobs);
    oracle::FlowRules rules;
    if (hard_timeout_s) rules.hard_ns = static_cast<std::int64_t>(*hard_timeout_s * 1e9);
    const auto ref_flows = oracle::group_flows(ref.packets, rules);

    std::size_t conserved = 0;
    for (const auto& f : flows) conserved += f.packets.size();
    out.packets = conserved;
    if (conserved != decoded.packets.size()) fail("packets not conserved: " + std::to_string(conserved));

    out.flows = flows.size();
    if (flows.size() != ref_flows.size()) {
        fail("flow count " + std::to_string(flows.size()) + " vs " + std::to_string(ref_flows.size()));
        return out;
    }
    std::sort(flows.begin(), flows.end(),
              [](const FlowState& a, const FlowState& b) { return a.first_packet_index < b.first_packet_index; });

    const auto names = model_schema().model_names();
    for (std::size_t i = 0; i < flows.size(); ++i) {
        const auto& f = flows[i];
        const auto& r = ref_flows[i];
        const std::string where = "flow " + std::to_string(i) + ": ";
        if (f.first_packet_index != r.first_index) fail(where + "first packet index");
        if (f.packets.size() != r.pkts.size()) fail(where + "packet count");
        if (std::string(to_string(f.terminated_by)) != r.end) {
            fail(where + "termination " + std::string(to_string(f.terminated_by)) + " vs " + r.end);
        }
        if (f.initiator.port != r.init_port || f.responder.port != r.resp_port) fail(where + "direction");
        const auto v = finalize(f);
        const auto expect = oracle::features(r);
        for (std::size_t j = 0; j < names.size(); ++j) {
            auto it = expect.find(names[j]);
            if (it == expect.end()) {
                fail("reference lacks column " + names[j]);
                continue;
            }
            ++out.features_checked;
            if (!close_enough(v.values[j], it->second, tol)) {
                std::ostringstream m;
                m.precision(17);
                m << where << names[j] << " = " << v.values[j] << ", reference " << it->second;
                fail(m.str());
            }
        }
    }
    return out;
}

}  // namespace testsupport
