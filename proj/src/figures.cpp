#include "splitree/figures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "splitree/contour.hpp"

namespace splitree {
namespace {

constexpr double kPanelW = 420.0;
constexpr double kPanelH = 300.0;
constexpr double kMargin = 40.0;

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

// Maps data coordinates into a panel whose left edge is at x0.
struct Frame {
  double x0, x_span, y_span;
  double px(double x) const { return x0 + kMargin + (x_span > 0 ? x / x_span : 0.0) * (kPanelW - 2 * kMargin); }
  double py(double y) const { return kPanelH - kMargin - (y_span > 0 ? y / y_span : 0.0) * (kPanelH - 2 * kMargin); }
};

void line(std::ostream& out, const std::string& cls, double x1, double y1, double x2, double y2) {
  out << "<line class=\"" << cls << "\" x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2)
      << "\" y2=\"" << num(y2) << "\"/>\n";
}

void axes(std::ostream& out, const Frame& f, const std::string& title) {
  line(out, "axis", f.px(0), f.py(0), f.x0 + kPanelW - kMargin, f.py(0));
  line(out, "axis", f.px(0), f.py(0), f.px(0), kMargin);
  out << "<text x=\"" << num(f.x0 + kMargin) << "\" y=\"" << num(kMargin / 2) << "\">" << title << "</text>\n";
}

void header(std::ostream& out, double width) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(kPanelH)
      << "\" viewBox=\"0 0 " << num(width) << ' ' << num(kPanelH) << "\">\n"
      << "<style>line{stroke:#222;stroke-width:1.5}.axis{stroke:#888;stroke-width:1}"
         ".birth{stroke-dasharray:4 3;stroke-width:1}.jump{stroke:#c33}"
         "polyline{fill:none;stroke:#c33;stroke-width:1.5}rect{fill:#9bd;stroke:#fff}"
         "text{font:12px sans-serif}</style>\n";
}

// Horizontal slot of each vertex: order of first visit by the contour,
// which enters daughters from the highest birth level down.
std::vector<double> visit_slots(const ChronologicalTree& tree) {
  std::vector<double> slot(tree.size(), 0.0);
  std::vector<VertexId> stack{tree.root()};
  double next = 0.0;
  while (!stack.empty()) {
    const VertexId v = stack.back();
    stack.pop_back();
    slot[v] = next++;
    auto kids = tree.vertex(v).children;
    std::stable_sort(kids.begin(), kids.end(),
                     [&](VertexId a, VertexId b) { return tree.vertex(a).alpha < tree.vertex(b).alpha; });
    for (VertexId c : kids) stack.push_back(c);
  }
  return slot;
}

}  // namespace

std::string tree_contour_svg(const ChronologicalTree& tree) {
  std::ostringstream out;
  header(out, 2 * kPanelW);
  double top = 0.0;
  for (const auto& v : tree.vertices()) top = std::max(top, v.omega);

  const auto slot = visit_slots(tree);
  const Frame tf{0.0, static_cast<double>(std::max<std::size_t>(tree.size(), 2) - 1), top};
  axes(out, tf, "tree");
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const auto& v = tree.vertex(static_cast<VertexId>(i));
    line(out, "life", tf.px(slot[i]), tf.py(v.alpha), tf.px(slot[i]), tf.py(v.omega));
    if (v.parent != kNoVertex) line(out, "birth", tf.px(slot[v.parent]), tf.py(v.alpha), tf.px(slot[i]), tf.py(v.alpha));
  }

  const ContourPath path = jccp(tree);
  const Frame cf{kPanelW, path.kill_time, top};
  axes(out, cf, "contour");
  double t = 0.0, level = path.start_level;
  for (const auto& j : path.jumps) {
    line(out, "drift", cf.px(t), cf.py(level), cf.px(j.time), cf.py(j.from));
    line(out, "jump", cf.px(j.time), cf.py(j.from), cf.px(j.time), cf.py(j.to));
    t = j.time;
    level = j.to;
  }
  line(out, "drift", cf.px(t), cf.py(level), cf.px(path.kill_time), cf.py(0.0));
  out << "</svg>\n";
  return out.str();
}

std::string cdf_overlay_svg(std::vector<double> sample, const std::function<double(double)>& cdf, double x_max,
                            std::size_t bins, const std::string& title) {
  std::sort(sample.begin(), sample.end());
  bins = std::max<std::size_t>(bins, 1);
  std::ostringstream out;
  header(out, kPanelW);
  const Frame f{0.0, x_max, 1.0};
  axes(out, f, title);
  const double width = x_max / static_cast<double>(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    const double right = width * static_cast<double>(k + 1);
    const auto below = std::upper_bound(sample.begin(), sample.end(), right) - sample.begin();
    const double frac = sample.empty() ? 0.0 : static_cast<double>(below) / static_cast<double>(sample.size());
    const double x = f.px(right - width);
    out << "<rect x=\"" << num(x) << "\" y=\"" << num(f.py(frac)) << "\" width=\"" << num(f.px(right) - x)
        << "\" height=\"" << num(f.py(0.0) - f.py(frac)) << "\"/>\n";
  }
  out << "<polyline class=\"analytic\" points=\"";
  constexpr int kCurve = 200;
  for (int i = 0; i <= kCurve; ++i) {
    const double x = x_max * i / kCurve;
    out << (i ? " " : "") << num(f.px(x)) << ',' << num(f.py(std::clamp(cdf(x), 0.0, 1.0)));
  }
  out << "\"/>\n</svg>\n";
  return out.str();
}

}  // namespace splitree
