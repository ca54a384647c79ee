#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "splitree/chrono_tree.hpp"

namespace splitree {

// Jump of the contour: X_{time-} = from, X_time = to.
struct ContourJump {
  double time = 0.0;
  double from = 0.0;
  double to = 0.0;
  double size() const { return to - from; }
  friend bool operator==(const ContourJump&, const ContourJump&) = default;
};

// Slope -1 path with positive jumps, started at start_level at time 0
// and killed when it reaches 0.
struct ContourPath {
  double start_level = 0.0;
  std::vector<ContourJump> jumps;
  double kill_time = 0.0;

  // X_t for 0 <= t <= kill_time.
  double level_at(double t) const;
  friend bool operator==(const ContourPath&, const ContourPath&) = default;
};

// Throws std::invalid_argument if times or levels are inconsistent.
void validate(const ContourPath& path);

// Per-vertex first visit time and length of the explored subtree.
struct VisitSchedule {
  std::vector<double> first_visit;
  std::vector<double> subtree_length;
};

ContourPath jccp(const ChronologicalTree& tree);
std::pair<ContourPath, VisitSchedule> jccp_with_schedule(const ChronologicalTree& tree);
ChronologicalTree decode(const ContourPath& path);

// Time at which the exploration visits x, and its inverse.
double exploration_time(const ChronologicalTree& tree, const VisitSchedule& schedule, const TreePoint& x);
TreePoint explored_point(const ChronologicalTree& tree, const VisitSchedule& schedule, double t);

struct HeightProfile {
  std::vector<double> breaks;  // breaks[0] = 0
  std::vector<int> values;     // value on [breaks[i], breaks[i+1])
  double kill_time = 0.0;

  int at(double t) const;
};

HeightProfile height_profile(const ContourPath& path);
std::vector<double> local_times(const HeightProfile& profile);

double coalescence_level(const ContourPath& path, double s, double t);
double first_visit(const ContourPath& path, double t);
std::vector<double> level_visits(const ContourPath& path, double sigma);

// Functionals used to compare contours with reflected paths at barrier tau.
struct ExcursionSummary {
  double kill_time = 0.0;
  std::size_t tau_visits = 0;
  // Infimum of the path before it first reaches 0 or tau after time 0.
  double first_excursion_min = 0.0;
};
ExcursionSummary summarize(const ContourPath& path, double tau);

void write_contour_csv(std::ostream& out, const ContourPath& path, std::optional<std::size_t> replicate = {},
                       bool header = true);
ContourPath read_contour_csv(std::istream& in);
void write_height_csv(std::ostream& out, const HeightProfile& profile);

}  // namespace splitree
