#pragma once

#include <functional>
#include <string>
#include <vector>

#include "splitree/chrono_tree.hpp"

namespace splitree {

// Two panels: the tree drawn as vertical lifetimes with dashed birth links,
// and its contour with drift segments and vertical jumps (class "jump").
std::string tree_contour_svg(const ChronologicalTree& tree);

// Cumulative histogram of a sample on [0, x_max] with an analytic CDF
// overlay.
std::string cdf_overlay_svg(std::vector<double> sample, const std::function<double(double)>& cdf, double x_max,
                            std::size_t bins, const std::string& title);

}  // namespace splitree
