#include "nidsgen/analysis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <set>

#include "nidsgen/csv.hpp"
#include "nidsgen/error.hpp"
#include "nidsgen/features.hpp"
#include "nidsgen/parallel.hpp"

namespace nidsgen {

namespace {

std::vector<std::size_t> resolve_columns(const DatasetTable& table, std::span<const std::string> features) {
    std::vector<std::size_t> idx;
    for (const auto& f : features) {
        auto c = table.column_index(f);
        if (!c) throw Error(ErrorCode::schema_mismatch, "no feature named '" + f + "'");
        idx.push_back(*c);
    }
    return idx;
}

}  // namespace

std::vector<UniqueValueCount> unique_value_counts(const DatasetTable& table, std::span<const std::string> features) {
    const auto idx = resolve_columns(table, features);
    std::map<std::string, std::vector<std::size_t>> rows_by_label;
    for (std::size_t i = 0; i < table.rows(); ++i) rows_by_label[table.labels()[i]].push_back(i);
    std::vector<UniqueValueCount> out;
    for (const auto& [label, rows] : rows_by_label) {
        for (std::size_t k = 0; k < idx.size(); ++k) {
            std::vector<double> v;
            v.reserve(rows.size());
            for (auto i : rows) v.push_back(table.at(i, idx[k]));
            std::sort(v.begin(), v.end());
            const auto distinct = static_cast<std::size_t>(std::unique(v.begin(), v.end()) - v.begin());
            out.push_back({label, features[k], distinct, rows.size()});
        }
    }
    return out;
}

std::map<std::string, std::size_t> unique_row_counts(const DatasetTable& table, std::span<const std::string> features) {
    std::vector<std::size_t> idx;
    if (features.empty()) {
        idx.resize(table.cols());
        for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = j;
    } else {
        idx = resolve_columns(table, features);
    }
    std::map<std::string, std::set<std::vector<double>>> seen;
    for (std::size_t i = 0; i < table.rows(); ++i) {
        std::vector<double> key(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) key[k] = table.at(i, idx[k]);
        seen[table.labels()[i]].insert(std::move(key));
    }
    std::map<std::string, std::size_t> out;
    for (const auto& [label, s] : seen) out[label] = s.size();
    return out;
}

void write_unique_counts_csv(const std::vector<UniqueValueCount>& counts, std::ostream& out) {
    const std::vector<std::string> header{"label", "feature", "distinct", "rows"};
    write_csv_row(out, header);
    for (const auto& c : counts) {
        const std::vector<std::string> row{c.label, c.feature, std::to_string(c.distinct), std::to_string(c.rows)};
        write_csv_row(out, row);
    }
}

// ---- KDE ----------------------------------------------------------------------------

double DensityGrid::integral() const {
    double s = 0;
    for (double v : density) s += v;
    return s * dx() * dy();
}

DensityGrid kde_density(std::span<const Point2> points, const KdeConfig& cfg) {
    const std::size_t n = points.size();
    if (n == 0) throw Error(ErrorCode::invalid_argument, "density of an empty sample");
    if (cfg.resolution < 2) throw Error(ErrorCode::invalid_argument, "grid resolution below 2");

    double mx = 0, my = 0;
    double lo_x = points[0][0], hi_x = lo_x, lo_y = points[0][1], hi_y = lo_y;
    for (const auto& p : points) {
        mx += p[0];
        my += p[1];
        lo_x = std::min(lo_x, p[0]);
        hi_x = std::max(hi_x, p[0]);
        lo_y = std::min(lo_y, p[1]);
        hi_y = std::max(hi_y, p[1]);
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double vx = 0, vy = 0, cxy = 0;
    for (const auto& p : points) {
        vx += (p[0] - mx) * (p[0] - mx);
        vy += (p[1] - my) * (p[1] - my);
        cxy += (p[0] - mx) * (p[1] - my);
    }
    if (n > 1) {
        vx /= static_cast<double>(n - 1);
        vy /= static_cast<double>(n - 1);
        cxy /= static_cast<double>(n - 1);
    }

    DensityGrid g;
    const double corr = (vx > 0 && vy > 0) ? cxy / std::sqrt(vx * vy) : 0.0;
    if (n < 2 || !(vx > 0) || !(vy > 0) || std::abs(corr) >= 1.0 - 1e-12) {
        g.mode = DensityMode::scatter;
        g.points.assign(points.begin(), points.end());
        auto pad = [](double lo, double hi) {
            const double w = hi - lo;
            return w > 0 ? 0.05 * w : 0.5;
        };
        const double px = pad(lo_x, hi_x), py = pad(lo_y, hi_y);
        g.x_min = lo_x - px;
        g.x_max = hi_x + px;
        g.y_min = lo_y - py;
        g.y_max = hi_y + py;
        g.resolution = cfg.resolution;
        return g;
    }

    const double factor = std::pow(static_cast<double>(n), -1.0 / 6.0) * cfg.bandwidth_scale;
    const double f2 = factor * factor;
    const double hxx = f2 * vx, hyy = f2 * vy, hxy = f2 * cxy;
    const double det = hxx * hyy - hxy * hxy;
    const double ixx = hyy / det, iyy = hxx / det, ixy = -hxy / det;
    const double sx = std::sqrt(hxx), sy = std::sqrt(hyy);

    g.mode = DensityMode::kde;
    g.bandwidth = {hxx, hxy, hxy, hyy};
    g.resolution = cfg.resolution;
    g.x_min = lo_x - cfg.padding * sx;
    g.x_max = hi_x + cfg.padding * sx;
    g.y_min = lo_y - cfg.padding * sy;
    g.y_max = hi_y + cfg.padding * sy;
    const std::size_t r = cfg.resolution;
    g.density.assign(r * r, 0.0);

    // Contributions beyond Mahalanobis distance^2 = 40 (about e^-20 relative) are skipped.
    constexpr double kCut = 40.0;
    const double bx = std::sqrt(kCut * hxx), by = std::sqrt(kCut * hyy);
    const double norm = 1.0 / (2.0 * std::numbers::pi * std::sqrt(det) * static_cast<double>(n));
    const double dx = g.dx();
    parallel_for(r, cfg.jobs, [&](std::size_t iy) {
        const double y = g.y_center(iy);
        double* row = g.density.data() + iy * r;
        for (const auto& p : points) {
            const double ey = y - p[1];
            if (std::abs(ey) > by) continue;
            const auto first = static_cast<std::ptrdiff_t>(std::floor((p[0] - bx - g.x_min) / dx - 0.5));
            const auto last = static_cast<std::ptrdiff_t>(std::ceil((p[0] + bx - g.x_min) / dx - 0.5));
            for (std::ptrdiff_t ix = std::max<std::ptrdiff_t>(first, 0);
                 ix <= std::min<std::ptrdiff_t>(last, static_cast<std::ptrdiff_t>(r) - 1); ++ix) {
                const double ex = g.x_center(static_cast<std::size_t>(ix)) - p[0];
                const double q = ixx * ex * ex + 2.0 * ixy * ex * ey + iyy * ey * ey;
                if (q <= kCut) row[ix] += norm * std::exp(-0.5 * q);
            }
        }
    });
    return g;
}

// ---- PCA --------------------------------------------------------------------------

PcaProjection pca_fit(const DatasetTable& table) {
    const std::size_t n = table.rows(), d = table.cols();
    if (n < 2) throw Error(ErrorCode::invalid_argument, "PCA needs at least 2 rows");
    if (d == 0) throw Error(ErrorCode::invalid_argument, "PCA needs at least 1 feature");
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = table.at(i, j);
    }
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    const Eigen::MatrixXd cov = x.transpose() * x / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(0.0);
    const double total = ev.sum();

    PcaProjection p;
    p.features = table.feature_names();
    p.mean.assign(mean.data(), mean.data() + d);
    for (int c = 0; c < 2; ++c) {
        p.components[static_cast<std::size_t>(c)].assign(d, 0.0);
        const Eigen::Index k = static_cast<Eigen::Index>(d) - 1 - c;
        if (k < 0) continue;
        Eigen::VectorXd v = eig.eigenvectors().col(k);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0) v = -v;
        p.components[static_cast<std::size_t>(c)].assign(v.data(), v.data() + d);
        p.explained[static_cast<std::size_t>(c)] = total > 0 ? ev(k) / total : 0.0;
    }
    return p;
}

std::vector<Point2> pca_project(const DatasetTable& table, const PcaProjection& pca) {
    if (table.feature_names() != pca.features) {
        throw Error(ErrorCode::schema_mismatch, "projection table features differ from the fitted ones");
    }
    std::vector<Point2> out(table.rows());
    for (std::size_t i = 0; i < table.rows(); ++i) {
        auto r = table.row(i);
        for (std::size_t c = 0; c < 2; ++c) {
            double s = 0;
            for (std::size_t j = 0; j < r.size(); ++j) s += (r[j] - pca.mean[j]) * pca.components[c][j];
            out[i][c] = s;
        }
    }
    return out;
}

std::vector<double> pca_reconstruct(std::span<const Point2> points, const PcaProjection& pca) {
    const std::size_t d = pca.mean.size();
    std::vector<double> out(points.size() * d);
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            out[i * d + j] = pca.mean[j] + points[i][0] * pca.components[0][j] + points[i][1] * pca.components[1][j];
        }
    }
    return out;
}

void write_density_csv(const DensityGrid& grid, std::ostream& out) {
    if (grid.mode == DensityMode::scatter) {
        out << "# mode=scatter points=" << grid.points.size() << '\n';
        out << "x,y\n";
        for (const auto& p : grid.points) out << format_real(p[0]) << ',' << format_real(p[1]) << '\n';
        return;
    }
    out << "# mode=kde resolution=" << grid.resolution << " bandwidth=" << format_real(grid.bandwidth[0]) << ';'
        << format_real(grid.bandwidth[1]) << ';' << format_real(grid.bandwidth[3]) << '\n';
    out << "x,y,density\n";
    for (std::size_t iy = 0; iy < grid.resolution; ++iy) {
        for (std::size_t ix = 0; ix < grid.resolution; ++ix) {
            out << format_real(grid.x_center(ix)) << ',' << format_real(grid.y_center(iy)) << ','
                << format_real(grid.at(ix, iy)) << '\n';
        }
    }
}

void write_projection_csv(std::span<const Point2> points, std::span<const std::string> labels, std::ostream& out) {
    out << "pc1,pc2,label\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        const std::vector<std::string> row{format_real(points[i][0]), format_real(points[i][1]),
                                           i < labels.size() ? labels[i] : std::string()};
        write_csv_row(out, row);
    }
}

}  // namespace nidsgen
