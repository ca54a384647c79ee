#include "splitree/chrono_tree.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace splitree {
namespace {

constexpr double kInfLevel = std::numeric_limits<double>::infinity();

nlohmann::json level_json(double x) {
  if (x == kInfLevel) return "inf";
  return x;
}

double level_from_json(const nlohmann::json& j, const char* key) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string() && (j.get<std::string>() == "inf" || j.get<std::string>() == "+inf")) return kInfLevel;
  throw std::invalid_argument(std::string("field '") + key + "' must be a number or \"inf\"");
}

// Level at which the ancestral line of (v, level) leaves vertex w.
double branch_level(const ChronologicalTree& t, VertexId w, const UlamLabel& w_label, const TreePoint& x) {
  if (x.label.generation() == w_label.generation()) return x.level;
  const VertexId c = t.vertex(w).children.at(x.label.path[w_label.generation()] - 1);
  return t.vertex(c).alpha;
}

}  // namespace

// ----- labels -----------------------------------------------------------

UlamLabel UlamLabel::parent() const {
  if (path.empty()) throw std::invalid_argument("root label has no parent");
  return UlamLabel(std::vector<std::uint32_t>(path.begin(), path.end() - 1));
}

UlamLabel UlamLabel::child(std::uint32_t j) const {
  if (j == 0) throw std::invalid_argument("child index must be positive");
  auto p = path;
  p.push_back(j);
  return UlamLabel(std::move(p));
}

bool UlamLabel::is_prefix_of(const UlamLabel& other) const {
  return path.size() <= other.path.size() && std::equal(path.begin(), path.end(), other.path.begin());
}

std::string UlamLabel::to_string() const {
  if (path.empty()) return "()";
  std::string s;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) s += '.';
    s += std::to_string(path[i]);
  }
  return s;
}

UlamLabel common_prefix(const UlamLabel& a, const UlamLabel& b) {
  std::size_t k = 0;
  while (k < a.path.size() && k < b.path.size() && a.path[k] == b.path[k]) ++k;
  return UlamLabel(std::vector<std::uint32_t>(a.path.begin(), a.path.begin() + static_cast<std::ptrdiff_t>(k)));
}

// ----- construction -----------------------------------------------------

TreeBuilder::TreeBuilder(double root_omega, double root_omega_uncut) {
  if (!(root_omega > 0.0)) throw std::invalid_argument("root death level must be positive");
  Vertex root;
  root.alpha = 0.0;
  root.omega = root_omega;
  root.omega_uncut = root_omega_uncut < 0.0 ? root_omega : root_omega_uncut;
  tree_.vertices_.push_back(std::move(root));
}

VertexId TreeBuilder::add_child(VertexId parent, double alpha, double omega, double omega_uncut) {
  auto& vs = tree_.vertices_;
  if (vs.size() >= static_cast<std::size_t>(kNoVertex)) throw std::length_error("tree too large");
  Vertex v;
  v.alpha = alpha;
  v.omega = omega;
  v.omega_uncut = omega_uncut < 0.0 ? omega : omega_uncut;
  v.parent = parent;
  v.generation = vs.at(parent).generation + 1;
  const auto id = static_cast<VertexId>(vs.size());
  vs.push_back(std::move(v));
  vs[parent].children.push_back(id);
  return id;
}

ChronologicalTree TreeBuilder::finish(SiblingOrder order) {
  auto& vs = tree_.vertices_;
  for (auto& v : vs) {
    if (order == SiblingOrder::ByLifespan && v.children.size() > 1) {
      std::sort(v.children.begin(), v.children.end(), [&](VertexId a, VertexId b) {
        const double za = vs[a].omega - vs[a].alpha, zb = vs[b].omega - vs[b].alpha;
        if (za != zb) return za > zb;
        return vs[a].alpha < vs[b].alpha;
      });
    }
    for (std::size_t k = 0; k < v.children.size(); ++k) vs[v.children[k]].rank = static_cast<std::uint32_t>(k + 1);
  }
  return std::move(tree_);
}

ChronologicalTree ChronologicalTree::single(double omega) { return TreeBuilder(omega).finish(); }

ChronologicalTree ChronologicalTree::from_records(std::vector<VertexRecord> records) {
  if (records.empty()) throw std::invalid_argument("tree has no vertices");
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.label < b.label; });
  const auto& r0 = records.front();
  if (!r0.label.is_root()) throw std::invalid_argument("root individual is missing");
  if (r0.alpha != 0.0) throw std::invalid_argument("root must be born at level 0");
  if (!(r0.omega > 0.0)) throw std::invalid_argument("root: omega must exceed alpha");

  ChronologicalTree tree;
  std::map<UlamLabel, VertexId> index;
  for (const auto& rec : records) {
    const std::string name = rec.label.to_string();
    if (!std::isfinite(rec.alpha)) throw std::invalid_argument("vertex " + name + ": alpha must be finite");
    if (!(rec.alpha < rec.omega)) throw std::invalid_argument("vertex " + name + ": omega must exceed alpha");
    if (index.count(rec.label)) throw std::invalid_argument("vertex " + name + ": duplicate label");
    for (auto j : rec.label.path)
      if (j == 0) throw std::invalid_argument("vertex " + name + ": label entries must be positive");
    Vertex v;
    v.alpha = rec.alpha;
    v.omega = rec.omega;
    v.omega_uncut = rec.omega_uncut.value_or(rec.omega);
    if (v.omega_uncut < v.omega) throw std::invalid_argument("vertex " + name + ": omega_uncut below omega");
    const auto id = static_cast<VertexId>(tree.vertices_.size());
    if (!rec.label.is_root()) {
      const auto it = index.find(rec.label.parent());
      if (it == index.end()) throw std::invalid_argument("vertex " + name + ": parent is missing");
      Vertex& p = tree.vertices_[it->second];
      if (rec.label.path.back() != p.children.size() + 1)
        throw std::invalid_argument("vertex " + name + ": child indices must be 1..K without gaps");
      if (!(rec.alpha > p.alpha && rec.alpha < p.omega))
        throw std::invalid_argument("vertex " + name + ": birth level outside the parent's lifetime");
      for (VertexId s : p.children)
        if (tree.vertices_[s].alpha == rec.alpha)
          throw std::invalid_argument("vertex " + name + ": sibling birth levels coincide");
      v.parent = it->second;
      v.rank = rec.label.path.back();
      v.generation = static_cast<std::uint32_t>(rec.label.generation());
      p.children.push_back(id);
    }
    tree.vertices_.push_back(std::move(v));
    index.emplace(rec.label, id);
  }
  return tree;
}

std::optional<VertexId> ChronologicalTree::find(const UlamLabel& label) const {
  VertexId v = 0;
  for (auto j : label.path) {
    const auto& ch = vertices_[v].children;
    if (j == 0 || j > ch.size()) return std::nullopt;
    v = ch[j - 1];
  }
  return v;
}

VertexId ChronologicalTree::require(const UlamLabel& label) const {
  const auto v = find(label);
  if (!v) throw std::invalid_argument("unknown label " + label.to_string());
  return *v;
}

UlamLabel ChronologicalTree::label_of(VertexId v) const {
  std::vector<std::uint32_t> p(vertices_.at(v).generation);
  for (auto k = p.size(); k-- > 0;) {
    p[k] = vertices_[v].rank;
    v = vertices_[v].parent;
  }
  return UlamLabel(std::move(p));
}

std::vector<VertexRecord> ChronologicalTree::records() const {
  std::vector<VertexRecord> out;
  out.reserve(vertices_.size());
  // Depth-first in label order.
  std::vector<std::pair<VertexId, UlamLabel>> stack{{0, UlamLabel{}}};
  while (!stack.empty()) {
    auto [v, label] = std::move(stack.back());
    stack.pop_back();
    const auto& x = vertices_[v];
    VertexRecord rec{label, x.alpha, x.omega, {}};
    if (x.omega_uncut != x.omega) rec.omega_uncut = x.omega_uncut;
    for (auto k = x.children.size(); k-- > 0;) stack.emplace_back(x.children[k], label.child(static_cast<std::uint32_t>(k + 1)));
    out.push_back(std::move(rec));
  }
  return out;
}

// ----- queries ----------------------------------------------------------

double lifespan(const ChronologicalTree& tree, const UlamLabel& u) {
  const auto& v = tree.vertex(tree.require(u));
  return v.omega - v.alpha;
}

bool is_valid_point(const ChronologicalTree& tree, const TreePoint& x) {
  const auto v = tree.find(x.label);
  if (!v) return false;
  if (x.label.is_root() && x.level == 0.0) return true;
  const auto& vx = tree.vertex(*v);
  return vx.alpha < x.level && x.level <= vx.omega;
}

namespace {
void require_point(const ChronologicalTree& tree, const TreePoint& x) {
  if (!is_valid_point(tree, x))
    throw std::invalid_argument("point (" + x.label.to_string() + ", " + std::to_string(x.level) + ") is not in the tree");
}
}  // namespace

bool is_ancestor(const ChronologicalTree& tree, const TreePoint& x, const TreePoint& y) {
  require_point(tree, x);
  require_point(tree, y);
  if (!x.label.is_prefix_of(y.label)) return false;
  if (x.label == y.label) return x.level <= y.level;
  const VertexId u = tree.require(x.label);
  return x.level <= branch_level(tree, u, x.label, y);
}

TreePoint coalescence_point(const ChronologicalTree& tree, const TreePoint& x, const TreePoint& y) {
  require_point(tree, x);
  require_point(tree, y);
  UlamLabel w = common_prefix(x.label, y.label);
  const VertexId wid = tree.require(w);
  const double level = std::min(branch_level(tree, wid, w, x), branch_level(tree, wid, w, y));
  return TreePoint{std::move(w), level};
}

std::strong_ordering linear_compare(const ChronologicalTree& tree, const TreePoint& x, const TreePoint& y) {
  require_point(tree, x);
  require_point(tree, y);
  if (x == y) return std::strong_ordering::equal;
  const UlamLabel w = common_prefix(x.label, y.label);
  const VertexId wid = tree.require(w);
  const double bx = branch_level(tree, wid, w, x);
  const double by = branch_level(tree, wid, w, y);
  // The branch leaving w higher is explored first.
  if (bx > by) return std::strong_ordering::less;
  if (bx < by) return std::strong_ordering::greater;
  const bool x_on = x.label.generation() == w.generation();
  const bool y_on = y.label.generation() == w.generation();
  if (x_on && !y_on) return std::strong_ordering::greater;
  if (!x_on && y_on) return std::strong_ordering::less;
  return std::strong_ordering::equal;
}

double total_length(const ChronologicalTree& tree) {
  double s = 0.0;
  for (const auto& v : tree.vertices()) s += v.omega - v.alpha;
  return s;
}

ChronologicalTree truncate(const ChronologicalTree& tree, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("truncation level must be positive");
  const auto& vs = tree.vertices();
  TreeBuilder builder(std::min(vs[0].omega, tau), vs[0].omega_uncut);
  std::vector<std::pair<VertexId, VertexId>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [old_id, new_id] = stack.back();
    stack.pop_back();
    for (VertexId c : vs[old_id].children) {
      const auto& cv = vs[c];
      if (!(cv.alpha < tau)) continue;
      const VertexId nc = builder.add_child(new_id, cv.alpha, std::min(cv.omega, tau), cv.omega_uncut);
      stack.emplace_back(c, nc);
    }
  }
  builder.set_cap(tree.cap() ? std::min(*tree.cap(), tau) : tau);
  return builder.finish();
}

std::size_t width(const ChronologicalTree& tree, double tau) {
  std::size_t n = 0;
  for (const auto& v : tree.vertices())
    if (v.alpha < tau && tau <= v.omega) ++n;
  return n;
}

WidthIntegral width_integral(const ChronologicalTree& tree, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("level must be positive");
  std::vector<std::pair<double, int>> events;
  for (const auto& v : tree.vertices()) {
    if (!(v.alpha < tau)) continue;
    events.emplace_back(v.alpha, +1);
    events.emplace_back(std::min(v.omega, tau), -1);
  }
  std::sort(events.begin(), events.end());
  WidthIntegral out;
  long alive = 0;
  double last = 0.0;
  for (const auto& [level, delta] : events) {
    out.integral += static_cast<double>(alive) * (level - last);
    last = level;
    alive += delta;
  }
  out.truncated_length = total_length(truncate(tree, tau));
  return out;
}

ChronologicalTree graft(const ChronologicalTree& host, const ChronologicalTree& guest, const TreePoint& x,
                        std::uint32_t i) {
  if (classify_point(host, x) != PointKind::Simple) throw std::invalid_argument("graft point must be a simple point");
  const auto& u = x.label;
  const auto k_u = host.vertex(host.require(u)).children.size();
  if (i < 1 || i > k_u + 1) throw std::invalid_argument("graft child index out of range");
  std::vector<VertexRecord> recs;
  for (auto rec : host.records()) {
    if (rec.label.generation() > u.generation() && u.is_prefix_of(rec.label) && rec.label.path[u.generation()] >= i)
      ++rec.label.path[u.generation()];
    recs.push_back(std::move(rec));
  }
  const UlamLabel base = u.child(i);
  for (auto rec : guest.records()) {
    UlamLabel label = base;
    label.path.insert(label.path.end(), rec.label.path.begin(), rec.label.path.end());
    rec.label = std::move(label);
    rec.alpha += x.level;
    rec.omega += x.level;
    if (rec.omega_uncut) *rec.omega_uncut += x.level;
    recs.push_back(std::move(rec));
  }
  return ChronologicalTree::from_records(std::move(recs));
}

PointKind classify_point(const ChronologicalTree& tree, const TreePoint& x) {
  require_point(tree, x);
  if (x.label.is_root() && x.level == 0.0) return PointKind::Root;
  const auto& v = tree.vertex(tree.require(x.label));
  if (x.level == v.omega) return PointKind::Leaf;
  for (VertexId c : v.children)
    if (tree.vertex(c).alpha == x.level) return PointKind::Branching;
  return PointKind::Simple;
}

std::vector<double> generation_lengths(const ChronologicalTree& tree) {
  std::vector<double> z;
  for (const auto& v : tree.vertices()) {
    if (v.generation >= z.size()) z.resize(v.generation + 1, 0.0);
    z[v.generation] += v.omega - v.alpha;
  }
  return z;
}

// ----- serialization ----------------------------------------------------

void write_jsonl(std::ostream& out, const ChronologicalTree& tree, std::optional<std::size_t> replicate) {
  for (const auto& rec : tree.records()) {
    nlohmann::ordered_json j;
    if (replicate) j["replicate"] = *replicate;
    j["label"] = rec.label.path;
    j["alpha"] = rec.alpha;
    j["omega"] = level_json(rec.omega);
    if (rec.omega_uncut) j["omega_uncut"] = level_json(*rec.omega_uncut);
    out << j.dump() << '\n';
  }
}

namespace {

VertexRecord record_from_json(const nlohmann::json& j) {
  VertexRecord rec;
  if (!j.contains("label") || !j.at("label").is_array()) throw std::invalid_argument("record needs a 'label' array");
  for (const auto& e : j.at("label")) {
    if (!e.is_number_integer() || e.get<long long>() < 1) throw std::invalid_argument("label entries must be positive integers");
    rec.label.path.push_back(e.get<std::uint32_t>());
  }
  if (!j.contains("alpha") || !j.contains("omega")) throw std::invalid_argument("record needs 'alpha' and 'omega'");
  rec.alpha = level_from_json(j.at("alpha"), "alpha");
  rec.omega = level_from_json(j.at("omega"), "omega");
  if (j.contains("omega_uncut")) rec.omega_uncut = level_from_json(j.at("omega_uncut"), "omega_uncut");
  return rec;
}

}  // namespace

std::vector<ChronologicalTree> read_jsonl_forest(std::istream& in) {
  std::vector<std::pair<long long, std::vector<VertexRecord>>> groups;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (j.contains("schema")) continue;
      const long long rep = j.value("replicate", -1LL);
      if (groups.empty() || groups.back().first != rep) groups.emplace_back(rep, std::vector<VertexRecord>{});
      groups.back().second.push_back(record_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  std::vector<ChronologicalTree> trees;
  for (auto& g : groups) trees.push_back(ChronologicalTree::from_records(std::move(g.second)));
  return trees;
}

ChronologicalTree read_jsonl(std::istream& in) {
  auto trees = read_jsonl_forest(in);
  if (trees.size() != 1) throw std::invalid_argument("expected exactly one tree, found " + std::to_string(trees.size()));
  return std::move(trees.front());
}

}  // namespace splitree
