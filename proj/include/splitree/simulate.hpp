#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "splitree/chrono_tree.hpp"
#include "splitree/contour.hpp"
#include "splitree/levy_kernel.hpp"
#include "splitree/rng.hpp"

namespace splitree {

inline constexpr std::uint32_t kMaxGeneration = 1000000;

// One individual of a splitting tree as produced by the generator.
struct Individual {
  VertexId id = 0;
  VertexId parent = kNoVertex;
  std::uint32_t generation = 0;
  double alpha = 0.0;
  double omega = 0.0;        // clipped at the cap
  double omega_uncut = 0.0;  // alpha + lifespan
};

// Generates the splitting tree truncated at cap, depth first: an
// individual's births are drawn when it is visited and its children are
// then visited from the youngest. visit(const Individual&) returns false
// to stop early. Returns true when the whole tree was generated.
// Individuals of generation generation_limit get no children.
template <class Visit>
bool explore_splitting_tree(const LifespanSpec& spec, double chi, double cap, RngStream& rng, Visit&& visit,
                            std::uint32_t generation_limit = kMaxGeneration) {
  if (!(chi > 0.0)) throw std::invalid_argument("root lifespan chi must be positive");
  if (chi == kInf && !(spec.q() > 0.0)) throw std::invalid_argument("chi = inf needs mass at infinity");
  if (!(cap > 0.0) || !std::isfinite(cap)) throw std::invalid_argument("cap must be positive and finite");
  struct Pending {
    double alpha;
    double lifespan;
    VertexId parent;
    std::uint32_t generation;
  };
  std::vector<Pending> stack{{0.0, chi, kNoVertex, 0}};
  VertexId next_id = 0;
  const double b = spec.b;
  while (!stack.empty()) {
    const Pending p = stack.back();
    stack.pop_back();
    Individual ind;
    ind.id = next_id++;
    ind.parent = p.parent;
    ind.generation = p.generation;
    ind.alpha = p.alpha;
    ind.omega_uncut = p.alpha + p.lifespan;
    ind.omega = std::min(ind.omega_uncut, cap);
    if (!visit(static_cast<const Individual&>(ind))) return false;
    if (next_id == kNoVertex) throw std::length_error("splitting tree too large");
    if (p.generation >= generation_limit) continue;
    double s = ind.alpha + rng.exponential(b);
    if (s < ind.omega && p.generation + 1 >= kMaxGeneration)
      throw std::runtime_error("generation depth guard exceeded");
    while (s < ind.omega) {
      stack.push_back({s, spec.sample_lifespan(rng), ind.id, p.generation + 1});
      s += rng.exponential(b);
    }
  }
  return true;
}

ChronologicalTree sample_tree(const LifespanSpec& spec, double chi, double tau_cap, RngStream& rng);

// The tree restricted to generations 0..n_gen, without a level cap. Needs q = 0.
ChronologicalTree sample_generations(const LifespanSpec& spec, double chi, std::uint32_t n_gen, RngStream& rng);

// The whole tree if nobody reaches level cap, otherwise nothing. Generation
// stops at the first individual reaching the cap.
std::optional<ChronologicalTree> sample_tree_if_extinct(const LifespanSpec& spec, double chi, double cap,
                                                        RngStream& rng);

// True iff someone is alive at level cap; stops at the first such individual.
bool reaches_level(const LifespanSpec& spec, double chi, double cap, RngStream& rng);

// Width at tau without storing the tree.
std::size_t sample_width(const LifespanSpec& spec, double chi, double tau, RngStream& rng);

double sample_subordinator_value(const LifespanSpec& spec, double z, RngStream& rng);

struct JirinaTrace {
  std::vector<double> z;
};
JirinaTrace jirina_trace(const LifespanSpec& spec, double chi, std::size_t n_gen, RngStream& rng);

ContourPath sample_levy_reflected(const LifespanSpec& spec, double chi, double tau, RngStream& rng);

struct Overshoot {
  double undershoot = 0.0;
  double overshoot = 0.0;
};
std::optional<Overshoot> sample_overshoot(const LifespanSpec& spec, double tau_cond, RngStream& rng);

}  // namespace splitree
