#include "cathrod/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>

namespace cathrod {

namespace {
const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
}

void write_svg_plot(const std::string& path, const std::vector<Centerline2D>& curves,
                    const std::string& title) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write svg file: " + path);

    double xmin = std::numeric_limits<double>::max(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& c : curves)
        for (const auto& p : c.points) {
            xmin = std::min(xmin, p.x());
            xmax = std::max(xmax, p.x());
            ymin = std::min(ymin, p.y());
            ymax = std::max(ymax, p.y());
        }
    if (curves.empty() || !(xmax >= xmin)) { xmin = ymin = 0.0; xmax = ymax = 1.0; }
    const double spanx = std::max(xmax - xmin, 1e-9);
    const double spany = std::max(ymax - ymin, 1e-9);

    const double W = 720, H = 540, m = 60;
    const double scale = std::min((W - 2 * m) / spanx, (H - 2 * m) / spany);
    auto X = [&](double x) { return m + (x - xmin) * scale; };
    auto Y = [&](double y) { return H - m - (y - ymin) * scale; };  // y up

    char buf[256];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    snprintf(buf, sizeof(buf),
             "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" "
             "stroke=\"#444\"/>\n",
             m, m, W - 2 * m, H - 2 * m);
    out << buf;
    snprintf(buf, sizeof(buf), "<text x=\"%.1f\" y=\"%.1f\" font-size=\"15\" fill=\"#222\">%s</text>\n",
             m, m - 14.0, title.c_str());
    out << buf;
    // axis extents
    snprintf(buf, sizeof(buf),
             "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" fill=\"#555\">x: %.4g .. %.4g m</text>\n",
             m, H - m + 26.0, xmin, xmax);
    out << buf;
    snprintf(buf, sizeof(buf),
             "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" fill=\"#555\">y: %.4g .. %.4g m</text>\n",
             8.0, m - 2.0, ymin, ymax);
    out << buf;

    int ci = 0;
    for (const auto& c : curves) {
        const char* color = kColors[ci % 6];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& p : c.points) {
            snprintf(buf, sizeof(buf), "%.2f,%.2f ", X(p.x()), Y(p.y()));
            out << buf;
        }
        out << "\"/>\n";
        snprintf(buf, sizeof(buf),
                 "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" fill=\"%s\">%s</text>\n",
                 W - m - 170.0, m + 18.0 + 16.0 * ci, color, c.label.c_str());
        out << buf;
        ++ci;
    }
    out << "</svg>\n";
}

}  // namespace cathrod
