#include "splitree/simulate.hpp"

#include <limits>

namespace splitree {

ChronologicalTree sample_tree(const LifespanSpec& spec, double chi, double tau_cap, RngStream& rng) {
  std::optional<TreeBuilder> builder;
  explore_splitting_tree(spec, chi, tau_cap, rng, [&](const Individual& ind) {
    if (!builder) {
      builder.emplace(ind.omega, ind.omega_uncut);
    } else {
      builder->add_child(ind.parent, ind.alpha, ind.omega, ind.omega_uncut);
    }
    return true;
  });
  builder->set_cap(tau_cap);
  return builder->finish(TreeBuilder::SiblingOrder::ByLifespan);
}

ChronologicalTree sample_generations(const LifespanSpec& spec, double chi, std::uint32_t n_gen, RngStream& rng) {
  if (spec.q() > 0.0) throw std::invalid_argument("generation sampling needs finite lifespans");
  if (!std::isfinite(chi)) throw std::invalid_argument("chi must be finite");
  std::optional<TreeBuilder> builder;
  explore_splitting_tree(
      spec, chi, std::numeric_limits<double>::max(), rng,
      [&](const Individual& ind) {
        if (!builder)
          builder.emplace(ind.omega);
        else
          builder->add_child(ind.parent, ind.alpha, ind.omega);
        return true;
      },
      n_gen);
  return builder->finish(TreeBuilder::SiblingOrder::ByLifespan);
}

std::optional<ChronologicalTree> sample_tree_if_extinct(const LifespanSpec& spec, double chi, double cap,
                                                        RngStream& rng) {
  std::optional<TreeBuilder> builder;
  const bool whole = explore_splitting_tree(spec, chi, cap, rng, [&](const Individual& ind) {
    if (ind.omega >= cap) return false;
    if (!builder)
      builder.emplace(ind.omega);
    else
      builder->add_child(ind.parent, ind.alpha, ind.omega);
    return true;
  });
  if (!whole) return std::nullopt;
  return builder->finish(TreeBuilder::SiblingOrder::ByLifespan);
}

bool reaches_level(const LifespanSpec& spec, double chi, double cap, RngStream& rng) {
  return !explore_splitting_tree(spec, chi, cap, rng, [cap](const Individual& ind) { return ind.omega < cap; });
}

std::size_t sample_width(const LifespanSpec& spec, double chi, double tau, RngStream& rng) {
  std::size_t n = 0;
  explore_splitting_tree(spec, chi, tau, rng, [&](const Individual& ind) {
    if (ind.omega >= tau) ++n;
    return true;
  });
  return n;
}

double sample_subordinator_value(const LifespanSpec& spec, double z, RngStream& rng) {
  if (!(z >= 0.0)) throw std::invalid_argument("subordinator time must be nonnegative");
  if (z == kInf) return kInf;
  const std::uint64_t n = rng.poisson(spec.b * z);
  double s = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) s += spec.sample_lifespan(rng);
  return s;
}

JirinaTrace jirina_trace(const LifespanSpec& spec, double chi, std::size_t n_gen, RngStream& rng) {
  if (!(chi >= 0.0) || !std::isfinite(chi)) throw std::invalid_argument("chi must be finite and nonnegative");
  JirinaTrace tr;
  tr.z.reserve(n_gen + 1);
  tr.z.push_back(chi);
  for (std::size_t k = 0; k < n_gen; ++k) tr.z.push_back(sample_subordinator_value(spec, tr.z.back(), rng));
  return tr;
}

ContourPath sample_levy_reflected(const LifespanSpec& spec, double chi, double tau, RngStream& rng) {
  if (!(chi > 0.0)) throw std::invalid_argument("chi must be positive");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("barrier must be positive and finite");
  ContourPath path;
  double level = std::min(chi, tau);
  path.start_level = level;
  double t = 0.0;
  for (;;) {
    const double e = rng.exponential(spec.b);
    if (e >= level) {
      t += level;
      break;
    }
    const double from = level - e;
    t += level - from;
    const double to = std::min(from + spec.sample_lifespan(rng), tau);
    path.jumps.push_back({t, from, to});
    level = to;
  }
  path.kill_time = t;
  return path;
}

std::optional<Overshoot> sample_overshoot(const LifespanSpec& spec, double tau_cond, RngStream& rng) {
  if (!(tau_cond > 0.0)) throw std::invalid_argument("conditioning level must be positive");
  double y = 0.0;
  for (;;) {
    y -= rng.exponential(spec.b);
    if (y <= -tau_cond) return std::nullopt;
    const double after = y + spec.sample_lifespan(rng);
    if (after > 0.0) return Overshoot{-y, after};
    y = after;
  }
}

}  // namespace splitree
