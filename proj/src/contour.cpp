#include "splitree/contour.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace splitree {
namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string at_time(double t) { return " (time " + fmt(t) + ")"; }

// Children of v ordered by decreasing birth level.
std::vector<VertexId> visit_order(const ChronologicalTree& tree, VertexId v) {
  std::vector<VertexId> order = tree.vertex(v).children;
  std::sort(order.begin(), order.end(),
            [&](VertexId a, VertexId b) { return tree.vertex(a).alpha > tree.vertex(b).alpha; });
  return order;
}

}  // namespace

double ContourPath::level_at(double t) const {
  if (t < 0.0 || t > kill_time) throw std::out_of_range("time outside [0, kill_time]");
  const auto it = std::upper_bound(jumps.begin(), jumps.end(), t,
                                   [](double x, const ContourJump& j) { return x < j.time; });
  if (it == jumps.begin()) return std::max(0.0, start_level - t);
  const auto& j = *(it - 1);
  return std::max(0.0, j.to - (t - j.time));
}

void validate(const ContourPath& path) {
  if (!(path.start_level > 0.0) || !std::isfinite(path.start_level))
    throw std::invalid_argument("start level must be positive and finite");
  double t = 0.0;
  double level = path.start_level;
  for (const auto& j : path.jumps) {
    if (!(j.time > t)) throw std::invalid_argument("jump times must increase" + at_time(j.time));
    if (!(j.to > j.from) || !std::isfinite(j.to)) throw std::invalid_argument("jump sizes must be positive" + at_time(j.time));
    if (!(j.from > 0.0)) throw std::invalid_argument("path reached 0 before this jump" + at_time(j.time));
    const double expected = t + (level - j.from);
    if (std::fabs(expected - j.time) > 1e-9 * std::max(1.0, j.time))
      throw std::invalid_argument("jump level inconsistent with slope -1" + at_time(j.time));
    t = j.time;
    level = j.to;
  }
  const double expected_kill = t + level;
  if (std::fabs(expected_kill - path.kill_time) > 1e-9 * std::max(1.0, path.kill_time))
    throw std::invalid_argument("kill time inconsistent with the path" + at_time(path.kill_time));
  double total = path.start_level;
  for (const auto& j : path.jumps) total += j.size();
  if (std::fabs(total - path.kill_time) > 1e-9 * std::max(1.0, path.kill_time))
    throw std::invalid_argument("kill time differs from start level plus jump sizes");
}

// ----- encode / decode --------------------------------------------------

std::pair<ContourPath, VisitSchedule> jccp_with_schedule(const ChronologicalTree& tree) {
  const auto& vs = tree.vertices();
  for (const auto& v : vs)
    if (!std::isfinite(v.omega)) throw std::invalid_argument("contour needs a finite tree; truncate first");
  ContourPath path;
  VisitSchedule sched;
  sched.first_visit.assign(vs.size(), 0.0);
  sched.subtree_length.assign(vs.size(), 0.0);
  path.start_level = vs[0].omega;
  path.jumps.reserve(vs.size() - 1);

  struct Frame {
    VertexId v;
    std::vector<VertexId> order;
    std::size_t next;
    double level;
    double start;
  };
  std::vector<Frame> stack;
  stack.push_back({0, visit_order(tree, 0), 0, vs[0].omega, 0.0});
  double t = 0.0;
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.order.size()) {
      const VertexId c = f.order[f.next++];
      const auto& cv = vs[c];
      t += f.level - cv.alpha;
      f.level = cv.alpha;
      path.jumps.push_back({t, cv.alpha, cv.omega});
      stack.push_back({c, visit_order(tree, c), 0, cv.omega, t});
    } else {
      t += f.level - vs[f.v].alpha;
      sched.first_visit[f.v] = f.start;
      sched.subtree_length[f.v] = t - f.start;
      stack.pop_back();
    }
  }
  path.kill_time = t;
  return {std::move(path), std::move(sched)};
}

ContourPath jccp(const ChronologicalTree& tree) { return jccp_with_schedule(tree).first; }

ChronologicalTree decode(const ContourPath& path) {
  validate(path);
  TreeBuilder builder(path.start_level);
  struct Entry {
    VertexId id;
    double alpha;
    double level;
  };
  std::vector<Entry> stack{{0, 0.0, path.start_level}};
  for (const auto& j : path.jumps) {
    while (stack.back().alpha > j.from) stack.pop_back();
    Entry& top = stack.back();
    if (top.alpha == j.from)
      throw std::invalid_argument("jump starts exactly at a closing birth level" + at_time(j.time));
    if (j.from > top.level) throw std::invalid_argument("jump lands on a level already closed" + at_time(j.time));
    const VertexId child = builder.add_child(top.id, j.from, j.to);
    top.level = j.from;
    stack.push_back({child, j.from, j.to});
  }
  return builder.finish(TreeBuilder::SiblingOrder::AsAdded);
}

double exploration_time(const ChronologicalTree& tree, const VisitSchedule& schedule, const TreePoint& x) {
  if (!is_valid_point(tree, x)) throw std::invalid_argument("point is not in the tree");
  const VertexId v = tree.require(x.label);
  const auto& vx = tree.vertex(v);
  double t = schedule.first_visit[v] + (vx.omega - x.level);
  for (VertexId c : vx.children)
    if (tree.vertex(c).alpha >= x.level) t += schedule.subtree_length[c];
  return t;
}

TreePoint explored_point(const ChronologicalTree& tree, const VisitSchedule& schedule, double t) {
  if (t < 0.0 || t > schedule.subtree_length[0]) throw std::out_of_range("time outside the exploration");
  VertexId v = 0;
  for (;;) {
    const auto& vx = tree.vertex(v);
    VertexId inside = kNoVertex;
    double done = 0.0;
    for (VertexId c : vx.children) {
      const double g = schedule.first_visit[c];
      const double end = g + schedule.subtree_length[c];
      if (g <= t && t < end) {
        inside = c;
        break;
      }
      if (end <= t) done += schedule.subtree_length[c];
    }
    if (inside == kNoVertex) {
      const double level = vx.omega - (t - schedule.first_visit[v] - done);
      return {tree.label_of(v), level};
    }
    v = inside;
  }
}

// ----- height -----------------------------------------------------------

int HeightProfile::at(double t) const {
  const auto it = std::upper_bound(breaks.begin(), breaks.end(), t);
  if (it == breaks.begin()) return 0;
  return values[static_cast<std::size_t>(it - breaks.begin()) - 1];
}

HeightProfile height_profile(const ContourPath& path) {
  HeightProfile prof;
  prof.kill_time = path.kill_time;
  prof.breaks.push_back(0.0);
  prof.values.push_back(0);
  auto record = [&](double t, int h) {
    if (t == prof.breaks.back()) {
      prof.values.back() = h;
    } else {
      prof.breaks.push_back(t);
      prof.values.push_back(h);
    }
  };
  // Pre-jump levels of the jumps still counted; increasing from bottom.
  std::vector<double> stack;
  double t = 0.0;
  double level = path.start_level;
  for (const auto& j : path.jumps) {
    while (!stack.empty() && stack.back() >= j.from) {
      const double a = stack.back();
      stack.pop_back();
      record(a > j.from ? t + (level - a) : j.time, static_cast<int>(stack.size()));
    }
    stack.push_back(j.from);
    record(j.time, static_cast<int>(stack.size()));
    t = j.time;
    level = j.to;
  }
  while (!stack.empty()) {
    const double a = stack.back();
    stack.pop_back();
    record(t + (level - a), static_cast<int>(stack.size()));
  }
  if (prof.breaks.size() > 1 && prof.breaks.back() >= prof.kill_time) {
    prof.breaks.pop_back();
    prof.values.pop_back();
  }
  return prof;
}

std::vector<double> local_times(const HeightProfile& profile) {
  std::vector<double> lt;
  for (std::size_t i = 0; i < profile.breaks.size(); ++i) {
    const double end = i + 1 < profile.breaks.size() ? profile.breaks[i + 1] : profile.kill_time;
    const auto h = static_cast<std::size_t>(profile.values[i]);
    if (h >= lt.size()) lt.resize(h + 1, 0.0);
    lt[h] += end - profile.breaks[i];
  }
  return lt;
}

// ----- path functionals -------------------------------------------------

double coalescence_level(const ContourPath& path, double s, double t) {
  if (!(0.0 <= s && s <= t && t < path.kill_time)) throw std::out_of_range("need 0 <= s <= t < kill_time");
  double m = path.level_at(t);
  auto it = std::upper_bound(path.jumps.begin(), path.jumps.end(), s,
                             [](double x, const ContourJump& j) { return x < j.time; });
  for (; it != path.jumps.end() && it->time <= t; ++it) m = std::min(m, it->from);
  return m;
}

double first_visit(const ContourPath& path, double t) {
  if (!(0.0 <= t && t < path.kill_time)) throw std::out_of_range("need 0 <= t < kill_time");
  const double x = path.level_at(t);
  auto it = std::upper_bound(path.jumps.begin(), path.jumps.end(), t,
                             [](double y, const ContourJump& j) { return y < j.time; });
  while (it != path.jumps.begin()) {
    --it;
    if (it->from < x) return it->time;
  }
  return 0.0;
}

std::vector<double> level_visits(const ContourPath& path, double sigma) {
  std::vector<double> out;
  if (!(sigma > 0.0)) return out;
  double t = 0.0;
  double top = path.start_level;
  for (std::size_t k = 0; k <= path.jumps.size(); ++k) {
    const double bottom = k < path.jumps.size() ? path.jumps[k].from : 0.0;
    if (sigma <= top && sigma > bottom) out.push_back(t + (top - sigma));
    if (k < path.jumps.size()) {
      t = path.jumps[k].time;
      top = path.jumps[k].to;
    }
  }
  return out;
}

ExcursionSummary summarize(const ContourPath& path, double tau) {
  ExcursionSummary s;
  s.kill_time = path.kill_time;
  s.tau_visits = level_visits(path, tau).size();
  double low = path.start_level;
  bool reached = false;
  for (const auto& j : path.jumps) {
    low = std::min(low, j.from);
    if (j.to >= tau) {
      reached = true;
      break;
    }
  }
  s.first_excursion_min = reached ? low : 0.0;
  return s;
}

// ----- CSV --------------------------------------------------------------

void write_contour_csv(std::ostream& out, const ContourPath& path, std::optional<std::size_t> replicate, bool header) {
  const std::string prefix = replicate ? std::to_string(*replicate) + "," : "";
  if (header) out << (replicate ? "replicate," : "") << "event_type,time,level_before,level_after\n";
  out << prefix << "start,0," << "0," << fmt(path.start_level) << '\n';
  for (const auto& j : path.jumps) out << prefix << "jump," << fmt(j.time) << ',' << fmt(j.from) << ',' << fmt(j.to) << '\n';
  out << prefix << "kill," << fmt(path.kill_time) << ",0,0\n";
}

ContourPath read_contour_csv(std::istream& in) {
  ContourPath path;
  std::string line;
  bool started = false, killed = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() == 5) cells.erase(cells.begin());
    if (cells.size() != 4) throw std::invalid_argument("line " + std::to_string(lineno) + ": expected 4 columns");
    if (cells[0] == "event_type") continue;
    try {
      const double t = std::stod(cells[1]), before = std::stod(cells[2]), after = std::stod(cells[3]);
      if (cells[0] == "start") {
        path.start_level = after;
        started = true;
      } else if (cells[0] == "jump") {
        path.jumps.push_back({t, before, after});
      } else if (cells[0] == "kill") {
        path.kill_time = t;
        killed = true;
      } else {
        throw std::invalid_argument("unknown event type '" + cells[0] + "'");
      }
    } catch (const std::logic_error& e) {
      throw std::invalid_argument("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!started || !killed) throw std::invalid_argument("contour CSV needs start and kill events");
  validate(path);
  return path;
}

void write_height_csv(std::ostream& out, const HeightProfile& profile) {
  out << "t_break,H\n";
  for (std::size_t i = 0; i < profile.breaks.size(); ++i) out << fmt(profile.breaks[i]) << ',' << profile.values[i] << '\n';
}

}  // namespace splitree
