#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nidsgen/dataset.hpp"

namespace nidsgen {

using Point2 = std::array<double, 2>;

struct UniqueValueCount {
    std::string label;
    std::string feature;
    std::size_t distinct = 0;
    std::size_t rows = 0;
};

/// Distinct values of each feature within each label, labels in sorted order.
/// Throws SchemaMismatch for an unknown feature.
std::vector<UniqueValueCount> unique_value_counts(const DatasetTable& table, std::span<const std::string> features);
/// Distinct rows over `features` (all columns when empty) per label.
std::map<std::string, std::size_t> unique_row_counts(const DatasetTable& table,
                                                     std::span<const std::string> features = {});
void write_unique_counts_csv(const std::vector<UniqueValueCount>& counts, std::ostream& out);

enum class DensityMode { kde, scatter };

/// Density on an r x r grid of cell centres, or the raw points when the
/// sample is degenerate.
struct DensityGrid {
    DensityMode mode = DensityMode::kde;
    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
    std::size_t resolution = 0;
    /// Row-major by y then x: density[iy * resolution + ix]. Empty in scatter mode.
    std::vector<double> density;
    /// Kernel covariance [h_xx, h_xy, h_yx, h_yy].
    std::array<double, 4> bandwidth{};
    std::vector<Point2> points;

    double dx() const { return (x_max - x_min) / static_cast<double>(resolution); }
    double dy() const { return (y_max - y_min) / static_cast<double>(resolution); }
    double x_center(std::size_t ix) const { return x_min + (static_cast<double>(ix) + 0.5) * dx(); }
    double y_center(std::size_t iy) const { return y_min + (static_cast<double>(iy) + 0.5) * dy(); }
    double at(std::size_t ix, std::size_t iy) const { return density[iy * resolution + ix]; }
    /// Riemann sum of the density over the grid.
    double integral() const;
};

struct KdeConfig {
    std::size_t resolution = 200;
    /// Multiplies Scott's factor n^(-1/6).
    double bandwidth_scale = 1.0;
    /// Grid padding around the data, in kernel standard deviations.
    double padding = 3.0;
    std::size_t jobs = 1;
};

/// Gaussian KDE with full-covariance Scott bandwidth. Falls back to scatter
/// mode when a marginal variance is 0 or |correlation| is 1. Throws
/// InvalidArgument for an empty sample.
DensityGrid kde_density(std::span<const Point2> points, const KdeConfig& cfg = {});

struct PcaProjection {
    std::vector<std::string> features;
    std::vector<double> mean;
    std::array<std::vector<double>, 2> components;
    /// Variance fractions of the two components.
    std::array<double, 2> explained{};
};

/// Top two principal axes of the covariance. Each component's largest-magnitude
/// entry is made positive. Throws InvalidArgument for fewer than 2 rows.
PcaProjection pca_fit(const DatasetTable& table);
/// Throws SchemaMismatch unless the table has the fitted features, in order.
std::vector<Point2> pca_project(const DatasetTable& table, const PcaProjection& pca);
/// Maps projected points back to feature space, row-major n x d.
std::vector<double> pca_reconstruct(std::span<const Point2> points, const PcaProjection& pca);

/// x,y,density rows (kde) or x,y rows (scatter) after a mode comment.
void write_density_csv(const DensityGrid& grid, std::ostream& out);
void write_projection_csv(std::span<const Point2> points, std::span<const std::string> labels, std::ostream& out);

}  // namespace nidsgen
