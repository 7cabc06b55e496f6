#pragma once

#include <string>
#include <vector>

#include "nidsgen/analysis.hpp"

namespace nidsgen {

struct FigureLayer {
    std::string label;
    DensityGrid grid;
    /// CSS colour; empty picks from the default palette.
    std::string color;
};

struct Figure {
    std::string title;
    std::string x_label = "x";
    std::string y_label = "y";
    std::vector<FigureLayer> layers;
    int width = 640;
    int height = 480;
    /// Contour levels as fractions of each layer's peak density.
    std::vector<double> levels{0.1, 0.3, 0.5, 0.7, 0.9};
    /// Scatter layers draw at most this many points (evenly strided).
    std::size_t max_points = 5000;
};

/// Self-contained SVG 1.1 document: KDE layers as contour lines, scatter
/// layers as dots, one legend entry per layer naming its representation.
/// Throws InvalidArgument when there are no layers.
std::string render_svg(const Figure& figure);

}  // namespace nidsgen
