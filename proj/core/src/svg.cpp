#include "nidsgen/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "nidsgen/error.hpp"

namespace nidsgen {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
constexpr int kLeft = 70, kRight = 190, kTop = 40, kBottom = 55;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf) == "-0.00" ? "0.00" : buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Frame {
    double x0, x1, y0, y1;  // data range
    double px0, px1, py0, py1;  // pixel box, py0 at the top
    double sx(double x) const { return px0 + (x - x0) / (x1 - x0) * (px1 - px0); }
    double sy(double y) const { return py1 - (y - y0) / (y1 - y0) * (py1 - py0); }
};

/// Marching squares over cell centres. Saddles are split by the mean of the
/// four corners.
std::string contour_path(const DensityGrid& g, double level, const Frame& f) {
    std::ostringstream d;
    const std::size_t r = g.resolution;
    auto point = [&](std::size_t ix, std::size_t iy) { return std::pair{g.x_center(ix), g.y_center(iy)}; };
    for (std::size_t iy = 0; iy + 1 < r; ++iy) {
        for (std::size_t ix = 0; ix + 1 < r; ++ix) {
            const double va = g.at(ix, iy), vb = g.at(ix + 1, iy), vc = g.at(ix + 1, iy + 1), vd = g.at(ix, iy + 1);
            const int c = (va >= level ? 1 : 0) | (vb >= level ? 2 : 0) | (vc >= level ? 4 : 0) | (vd >= level ? 8 : 0);
            if (c == 0 || c == 15) continue;
            const auto pa = point(ix, iy), pb = point(ix + 1, iy), pc = point(ix + 1, iy + 1), pd = point(ix, iy + 1);
            auto lerp = [&](std::pair<double, double> p, double v1, std::pair<double, double> q, double v2) {
                const double t = (level - v1) / (v2 - v1);
                return std::pair{p.first + t * (q.first - p.first), p.second + t * (q.second - p.second)};
            };
            auto edge = [&](int e) {
                switch (e) {
                    case 0: return lerp(pa, va, pb, vb);
                    case 1: return lerp(pb, vb, pc, vc);
                    case 2: return lerp(pc, vc, pd, vd);
                    default: return lerp(pd, vd, pa, va);
                }
            };
            auto seg = [&](int e1, int e2) {
                const auto p = edge(e1), q = edge(e2);
                d << 'M' << num(f.sx(p.first)) << ' ' << num(f.sy(p.second)) << 'L' << num(f.sx(q.first)) << ' '
                  << num(f.sy(q.second));
            };
            const bool centre = (va + vb + vc + vd) / 4.0 >= level;
            switch (c) {
                case 1: case 14: seg(3, 0); break;
                case 2: case 13: seg(0, 1); break;
                case 3: case 12: seg(3, 1); break;
                case 4: case 11: seg(1, 2); break;
                case 6: case 9: seg(0, 2); break;
                case 7: case 8: seg(3, 2); break;
                case 5:
                    if (centre) { seg(0, 1); seg(2, 3); } else { seg(3, 0); seg(1, 2); }
                    break;
                case 10:
                    if (centre) { seg(3, 0); seg(1, 2); } else { seg(0, 1); seg(2, 3); }
                    break;
                default: break;
            }
        }
    }
    return d.str();
}

}  // namespace

std::string render_svg(const Figure& fig) {
    if (fig.layers.empty()) throw Error(ErrorCode::invalid_argument, "figure has no layers");
    Frame f{};
    f.x0 = fig.layers[0].grid.x_min;
    f.x1 = fig.layers[0].grid.x_max;
    f.y0 = fig.layers[0].grid.y_min;
    f.y1 = fig.layers[0].grid.y_max;
    for (const auto& l : fig.layers) {
        f.x0 = std::min(f.x0, l.grid.x_min);
        f.x1 = std::max(f.x1, l.grid.x_max);
        f.y0 = std::min(f.y0, l.grid.y_min);
        f.y1 = std::max(f.y1, l.grid.y_max);
    }
    if (!(f.x1 > f.x0)) f.x1 = f.x0 + 1;
    if (!(f.y1 > f.y0)) f.y1 = f.y0 + 1;
    f.px0 = kLeft;
    f.px1 = fig.width - kRight;
    f.py0 = kTop;
    f.py1 = fig.height - kBottom;

    std::ostringstream s;
    s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fig.width << "\" height=\""
      << fig.height << "\" viewBox=\"0 0 " << fig.width << ' ' << fig.height << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << fig.width << "\" height=\"" << fig.height << "\" fill=\"white\"/>\n";
    if (!fig.title.empty()) {
        s << "<text x=\"" << num((f.px0 + f.px1) / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          << "font-size=\"14\">" << escape(fig.title) << "</text>\n";
    }
    s << "<rect x=\"" << num(f.px0) << "\" y=\"" << num(f.py0) << "\" width=\"" << num(f.px1 - f.px0)
      << "\" height=\"" << num(f.py1 - f.py0) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0, yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
        s << "<line x1=\"" << num(f.sx(xv)) << "\" y1=\"" << num(f.py1) << "\" x2=\"" << num(f.sx(xv)) << "\" y2=\""
          << num(f.py1 + 5) << "\" stroke=\"black\"/>"
          << "<text x=\"" << num(f.sx(xv)) << "\" y=\"" << num(f.py1 + 18)
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << tick(xv) << "</text>\n";
        s << "<line x1=\"" << num(f.px0 - 5) << "\" y1=\"" << num(f.sy(yv)) << "\" x2=\"" << num(f.px0) << "\" y2=\""
          << num(f.sy(yv)) << "\" stroke=\"black\"/>"
          << "<text x=\"" << num(f.px0 - 8) << "\" y=\"" << num(f.sy(yv) + 3)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << tick(yv) << "</text>\n";
    }
    s << "<text x=\"" << num((f.px0 + f.px1) / 2) << "\" y=\"" << num(f.py1 + 40)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << escape(fig.x_label) << "</text>\n";
    s << "<text x=\"18\" y=\"" << num((f.py0 + f.py1) / 2) << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"12\" transform=\"rotate(-90 18 " << num((f.py0 + f.py1) / 2) << ")\">" << escape(fig.y_label)
      << "</text>\n";

    for (std::size_t li = 0; li < fig.layers.size(); ++li) {
        const auto& layer = fig.layers[li];
        const std::string color = layer.color.empty() ? kPalette[li % std::size(kPalette)] : layer.color;
        s << "<g id=\"layer" << li << "\">\n";
        if (layer.grid.mode == DensityMode::kde) {
            double peak = 0;
            for (double v : layer.grid.density) peak = std::max(peak, v);
            for (double frac : fig.levels) {
                if (!(peak > 0)) break;
                const auto d = contour_path(layer.grid, frac * peak, f);
                if (d.empty()) continue;
                s << "<path d=\"" << d << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1\"/>\n";
            }
        } else {
            const auto& pts = layer.grid.points;
            const std::size_t stride = std::max<std::size_t>(1, (pts.size() + fig.max_points - 1) / std::max<std::size_t>(fig.max_points, 1));
            for (std::size_t i = 0; i < pts.size(); i += stride) {
                s << "<circle cx=\"" << num(f.sx(pts[i][0])) << "\" cy=\"" << num(f.sy(pts[i][1]))
                  << "\" r=\"2\" fill=\"" << color << "\" fill-opacity=\"0.6\"/>\n";
            }
        }
        s << "</g>\n";
    }

    // Legend: one entry per layer, naming how the layer is drawn.
    s << "<g id=\"legend\">\n";
    for (std::size_t li = 0; li < fig.layers.size(); ++li) {
        const auto& layer = fig.layers[li];
        const std::string color = layer.color.empty() ? kPalette[li % std::size(kPalette)] : layer.color;
        const double y = f.py0 + 10 + 20.0 * static_cast<double>(li);
        const char* kind = layer.grid.mode == DensityMode::kde ? "KDE" : "scatter";
        s << "<g class=\"legend-entry\"><rect x=\"" << num(f.px1 + 15) << "\" y=\"" << num(y - 8) << "\" width=\"12\" height=\"12\" fill=\""
          << color << "\"/><text x=\"" << num(f.px1 + 32) << "\" y=\"" << num(y + 2)
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(layer.label) << " (" << kind
          << ")</text></g>\n";
    }
    s << "</g>\n</svg>\n";
    return s.str();
}

}  // namespace nidsgen
