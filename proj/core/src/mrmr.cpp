#include "nidsgen/mrmr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <ostream>
#include <unordered_map>

#include "nidsgen/csv.hpp"
#include "nidsgen/error.hpp"
#include "nidsgen/features.hpp"
#include "nidsgen/parallel.hpp"

namespace nidsgen {

std::vector<std::uint32_t> discretize(std::span<const double> x, std::size_t bins) {
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> distinct = sorted;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    std::vector<double> edges;
    if (distinct.size() <= bins) {
        edges.assign(distinct.begin() + (distinct.empty() ? 0 : 1), distinct.end());
    } else {
        const std::size_t n = sorted.size();
        for (std::size_t i = 1; i < bins; ++i) edges.push_back(sorted[i * n / bins]);
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    }
    // code = number of edges <= x
    std::vector<std::uint32_t> codes(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        codes[i] = static_cast<std::uint32_t>(std::upper_bound(edges.begin(), edges.end(), x[i]) - edges.begin());
    }
    return codes;
}

double mutual_information_codes(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
    if (a.size() != b.size()) throw Error(ErrorCode::invalid_argument, "mutual information of unequal lengths");
    if (a.empty()) return 0.0;
    const std::uint32_t ka = *std::max_element(a.begin(), a.end()) + 1;
    const std::uint32_t kb = *std::max_element(b.begin(), b.end()) + 1;
    std::vector<double> joint(static_cast<std::size_t>(ka) * kb, 0.0), pa(ka, 0.0), pb(kb, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[static_cast<std::size_t>(a[i]) * kb + b[i]] += 1;
        pa[a[i]] += 1;
        pb[b[i]] += 1;
    }
    const double n = static_cast<double>(a.size());
    double mi = 0;
    for (std::uint32_t i = 0; i < ka; ++i) {
        for (std::uint32_t j = 0; j < kb; ++j) {
            const double c = joint[static_cast<std::size_t>(i) * kb + j];
            if (c == 0) continue;
            mi += (c / n) * std::log2(c * n / (pa[i] * pb[j]));
        }
    }
    return std::max(0.0, mi);
}

double mutual_information(std::span<const double> x, std::span<const std::uint32_t> labels, std::size_t bins) {
    const auto codes = discretize(x, bins);
    return mutual_information_codes(codes, labels);
}

std::vector<std::uint32_t> encode_labels(std::span<const std::string> labels) {
    std::unordered_map<std::string, std::uint32_t> ids;
    std::vector<std::uint32_t> out;
    out.reserve(labels.size());
    for (const auto& l : labels) {
        auto [it, inserted] = ids.emplace(l, static_cast<std::uint32_t>(ids.size()));
        out.push_back(it->second);
    }
    return out;
}

FeatureRanking mrmr_rank_codes(const std::vector<std::vector<std::uint32_t>>& features,
                               std::span<const std::uint32_t> labels, std::span<const std::string> names, std::size_t k,
                               MrmrVariant variant, std::size_t jobs) {
    const std::size_t d = features.size();
    if (k < 1 || k > d) {
        throw Error(ErrorCode::k_out_of_range, "k=" + std::to_string(k) + " outside [1, " + std::to_string(d) + "]");
    }
    std::vector<double> relevance(d);
    parallel_for(d, jobs, [&](std::size_t j) { relevance[j] = mutual_information_codes(features[j], labels); });

    FeatureRanking r;
    r.variant = variant;
    std::vector<bool> chosen(d, false);
    std::vector<double> redundancy_sum(d, 0.0);
    for (std::size_t step = 0; step < k; ++step) {
        if (step > 0) {
            const std::size_t last = r.indices.back();
            parallel_for(d, jobs, [&](std::size_t j) {
                if (!chosen[j]) redundancy_sum[j] += mutual_information_codes(features[j], features[last]);
            });
        }
        std::size_t best = d;
        double best_score = 0, best_red = 0;
        for (std::size_t j = 0; j < d; ++j) {
            if (chosen[j]) continue;
            const double red = step == 0 ? 0.0 : redundancy_sum[j] / static_cast<double>(step);
            double score = relevance[j];
            if (step > 0) {
                score = variant == MrmrVariant::mid ? relevance[j] - red : relevance[j] / std::max(red, 1e-12);
            }
            // Rounding noise must not break ties between equal scores.
            if (best == d || score > best_score + kScoreTieTolerance * std::max(1.0, std::abs(best_score))) {
                best = j;
                best_score = score;
                best_red = red;
            }
        }
        chosen[best] = true;
        r.indices.push_back(best);
        r.names.push_back(best < names.size() ? names[best] : std::to_string(best));
        r.relevance.push_back(relevance[best]);
        r.redundancy.push_back(best_red);
        r.score.push_back(best_score);
    }
    return r;
}

FeatureRanking mrmr_rank(const DatasetTable& table, std::size_t k, const MrmrConfig& cfg) {
    if (k < 1 || k > table.cols()) {
        throw Error(ErrorCode::k_out_of_range,
                    "k=" + std::to_string(k) + " outside [1, " + std::to_string(table.cols()) + "]");
    }
    std::vector<std::vector<std::uint32_t>> codes(table.cols());
    parallel_for(table.cols(), cfg.jobs, [&](std::size_t j) { codes[j] = discretize(table.column(j), cfg.bins); });
    const auto labels = encode_labels(table.labels());
    auto r = mrmr_rank_codes(codes, labels, table.feature_names(), k, cfg.variant, cfg.jobs);
    r.bins = cfg.bins;
    return r;
}

std::vector<std::vector<std::string>> sweep_counts(const FeatureRanking& ranking, std::span<const std::size_t> counts) {
    std::vector<std::vector<std::string>> out;
    for (std::size_t c : counts) {
        if (c < 1 || c > ranking.names.size()) {
            throw Error(ErrorCode::k_out_of_range, "feature count " + std::to_string(c) + " exceeds ranking of " +
                                                       std::to_string(ranking.names.size()));
        }
        out.emplace_back(ranking.names.begin(), ranking.names.begin() + static_cast<std::ptrdiff_t>(c));
    }
    return out;
}

void write_ranking_csv(const FeatureRanking& ranking, std::ostream& out) {
    out << "# mrmr variant=" << (ranking.variant == MrmrVariant::mid ? "mid" : "miq") << " bins=" << ranking.bins
        << '\n';
    const std::vector<std::string> header{"rank", "feature", "column", "relevance", "redundancy", "score"};
    write_csv_row(out, header);
    for (std::size_t i = 0; i < ranking.names.size(); ++i) {
        const std::vector<std::string> row{std::to_string(i + 1),         ranking.names[i],
                                           std::to_string(ranking.indices[i]), format_real(ranking.relevance[i]),
                                           format_real(ranking.redundancy[i]), format_real(ranking.score[i])};
        write_csv_row(out, row);
    }
}

FeatureRanking read_ranking_csv(std::istream& in) {
    CsvReader reader(in);
    std::vector<std::string> f;
    FeatureRanking r;
    if (!reader.next(f) || f.size() != 6 || f[0] != "rank") {
        throw Error(ErrorCode::header_mismatch, "not a ranking file");
    }
    auto num = [&](const std::string& s) {
        double v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc()) throw Error(ErrorCode::parse_error, "line " + std::to_string(reader.line()));
        return v;
    };
    while (reader.next(f)) {
        if (f.size() != 6) throw Error(ErrorCode::ragged_row, "line " + std::to_string(reader.line()));
        r.names.push_back(f[1]);
        r.indices.push_back(static_cast<std::size_t>(num(f[2])));
        r.relevance.push_back(num(f[3]));
        r.redundancy.push_back(num(f[4]));
        r.score.push_back(num(f[5]));
    }
    for (const auto& c : reader.comments()) {
        if (c.find("variant=miq") != std::string::npos) r.variant = MrmrVariant::miq;
        if (auto p = c.find("bins="); p != std::string::npos) r.bins = static_cast<std::size_t>(std::stoul(c.substr(p + 5)));
    }
    return r;
}

}  // namespace nidsgen
