#ifndef CATHROD_SVG_HPP
#define CATHROD_SVG_HPP

#include <string>
#include <vector>

#include "cathrod/metrics.hpp"

namespace cathrod {

// Minimal polyline plot: frame, tick labels, one colored path per curve plus
// a legend. Enough for centerline comparisons, not a charting stack.
void write_svg_plot(const std::string& path, const std::vector<Centerline2D>& curves,
                    const std::string& title);

}  // namespace cathrod

#endif
