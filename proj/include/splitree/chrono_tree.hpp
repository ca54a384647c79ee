#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace splitree {

using VertexId = std::uint32_t;
inline constexpr VertexId kNoVertex = static_cast<VertexId>(-1);

// Ulam-Harris label; the empty sequence is the root.
struct UlamLabel {
  std::vector<std::uint32_t> path;

  UlamLabel() = default;
  UlamLabel(std::initializer_list<std::uint32_t> p) : path(p) {}
  explicit UlamLabel(std::vector<std::uint32_t> p) : path(std::move(p)) {}

  std::size_t generation() const { return path.size(); }
  bool is_root() const { return path.empty(); }
  UlamLabel parent() const;
  UlamLabel child(std::uint32_t j) const;
  // True when this label is a prefix of other (reflexive).
  bool is_prefix_of(const UlamLabel& other) const;
  std::string to_string() const;

  friend bool operator==(const UlamLabel&, const UlamLabel&) = default;
  friend auto operator<=>(const UlamLabel& a, const UlamLabel& b) { return a.path <=> b.path; }
};

UlamLabel common_prefix(const UlamLabel& a, const UlamLabel& b);

struct TreePoint {
  UlamLabel label;
  double level = 0.0;
  friend bool operator==(const TreePoint&, const TreePoint&) = default;
};

enum class PointKind { Leaf, Simple, Branching, Root };

struct Vertex {
  double alpha = 0.0;
  double omega = 0.0;
  // Death level before any truncation; equals omega unless clipped.
  double omega_uncut = 0.0;
  VertexId parent = kNoVertex;
  std::uint32_t rank = 0;  // child index under parent, 1-based
  std::uint32_t generation = 0;
  std::vector<VertexId> children;  // in label order
};

struct VertexRecord {
  UlamLabel label;
  double alpha = 0.0;
  double omega = 0.0;
  std::optional<double> omega_uncut;
  friend bool operator==(const VertexRecord&, const VertexRecord&) = default;
};

class ChronologicalTree {
 public:
  // Validates every invariant; throws std::invalid_argument naming the first
  // violation.
  static ChronologicalTree from_records(std::vector<VertexRecord> records);
  static ChronologicalTree single(double omega);

  std::size_t size() const { return vertices_.size(); }
  VertexId root() const { return 0; }
  const Vertex& vertex(VertexId v) const { return vertices_.at(v); }
  const std::vector<Vertex>& vertices() const { return vertices_; }
  std::optional<VertexId> find(const UlamLabel& label) const;
  VertexId require(const UlamLabel& label) const;
  UlamLabel label_of(VertexId v) const;
  // Level at which the tree was truncated, if any.
  std::optional<double> cap() const { return cap_; }

  double alpha(const UlamLabel& u) const { return vertices_[require(u)].alpha; }
  double omega(const UlamLabel& u) const { return vertices_[require(u)].omega; }

  std::vector<VertexRecord> records() const;

 private:
  friend class TreeBuilder;
  std::vector<Vertex> vertices_;
  std::optional<double> cap_;
};

// Trusted incremental construction used by samplers and decoders.
class TreeBuilder {
 public:
  enum class SiblingOrder {
    AsAdded,
    // Decreasing lifespan, ties by increasing birth level.
    ByLifespan,
  };

  explicit TreeBuilder(double root_omega, double root_omega_uncut = -1.0);
  VertexId add_child(VertexId parent, double alpha, double omega, double omega_uncut = -1.0);
  void set_cap(double cap) { tree_.cap_ = cap; }
  std::size_t size() const { return tree_.vertices_.size(); }
  ChronologicalTree finish(SiblingOrder order = SiblingOrder::AsAdded);

 private:
  ChronologicalTree tree_;
};

double lifespan(const ChronologicalTree& tree, const UlamLabel& u);
bool is_valid_point(const ChronologicalTree& tree, const TreePoint& x);
bool is_ancestor(const ChronologicalTree& tree, const TreePoint& x, const TreePoint& y);
TreePoint coalescence_point(const ChronologicalTree& tree, const TreePoint& x, const TreePoint& y);
std::strong_ordering linear_compare(const ChronologicalTree& tree, const TreePoint& x, const TreePoint& y);
double total_length(const ChronologicalTree& tree);
ChronologicalTree truncate(const ChronologicalTree& tree, double tau);
std::size_t width(const ChronologicalTree& tree, double tau);

struct WidthIntegral {
  double integral = 0.0;          // int_0^tau width
  double truncated_length = 0.0;  // total length of the truncation at tau
};
WidthIntegral width_integral(const ChronologicalTree& tree, double tau);

ChronologicalTree graft(const ChronologicalTree& host, const ChronologicalTree& guest, const TreePoint& x,
                        std::uint32_t i);
PointKind classify_point(const ChronologicalTree& tree, const TreePoint& x);

// Sum of lifespans per generation.
std::vector<double> generation_lengths(const ChronologicalTree& tree);

// JSONL, one vertex per line. An optional replicate index is written to
// each record; omega_uncut is written only when it differs from omega.
void write_jsonl(std::ostream& out, const ChronologicalTree& tree, std::optional<std::size_t> replicate = {});
ChronologicalTree read_jsonl(std::istream& in);
// Groups consecutive records by their replicate field.
std::vector<ChronologicalTree> read_jsonl_forest(std::istream& in);

}  // namespace splitree
