#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "splitree/chrono_tree.hpp"
#include "splitree/rng.hpp"

namespace fixture {

using splitree::ChronologicalTree;
using splitree::TreePoint;
using splitree::UlamLabel;

// Root (0,5] with one child born at 2 dying at 3.5.
inline ChronologicalTree two_individuals() {
  return ChronologicalTree::from_records({{{}, 0.0, 5.0, {}}, {{1}, 2.0, 3.5, {}}});
}

// Root (0,5] with children (1,3] and (3,4].
inline ChronologicalTree three_individuals() {
  return ChronologicalTree::from_records({{{}, 0.0, 5.0, {}}, {{1}, 1.0, 3.0, {}}, {{2}, 3.0, 4.0, {}}});
}

// Uniform random existence point of the tree.
inline TreePoint random_point(const ChronologicalTree& t, splitree::RngStream& rng) {
  const auto v = static_cast<splitree::VertexId>(rng.below(t.size()));
  const auto& x = t.vertex(v);
  return {t.label_of(v), x.omega - (x.omega - x.alpha) * rng.uniform()};
}

// Records with siblings listed by decreasing birth level, making trees that
// differ only by sibling labels compare equal.
inline std::vector<splitree::VertexRecord> canonical(const ChronologicalTree& t) {
  using splitree::VertexId;
  splitree::TreeBuilder builder(t.vertex(0).omega);
  std::vector<std::pair<VertexId, VertexId>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [v, nv] = stack.back();
    stack.pop_back();
    auto kids = t.vertex(v).children;
    std::sort(kids.begin(), kids.end(), [&](VertexId a, VertexId b) { return t.vertex(a).alpha > t.vertex(b).alpha; });
    for (VertexId c : kids) stack.push_back({c, builder.add_child(nv, t.vertex(c).alpha, t.vertex(c).omega)});
  }
  return builder.finish().records();
}

}  // namespace fixture
