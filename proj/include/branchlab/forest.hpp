#ifndef BRANCHLAB_FOREST_HPP
#define BRANCHLAB_FOREST_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "branchlab/contour.hpp"
#include "branchlab/errors.hpp"
#include "branchlab/interaction.hpp"
#include "branchlab/offspring.hpp"
#include "branchlab/rng.hpp"

namespace branchlab {

struct Individual {
  int parent = -1;  // -1 for roots
  double birth = 0.0;
  double death = 0.0;
  std::vector<int> children;  // in creation order
};

// Genealogical forest drawn in the plane: left-to-right order carries the
// interaction (everyone feels only the individuals to their left).
struct PlanarForest {
  std::vector<Individual> individuals;  // indexed by id
  std::vector<int> roots;               // left to right
  int ancestor_count = 0;

  int population_at(double t) const {
    int n = 0;
    for (const auto& ind : individuals)
      if (ind.birth <= t && t < ind.death) ++n;
    return n;
  }

  double max_death() const {
    double m = 0.0;
    for (const auto& ind : individuals) m = std::max(m, ind.death);
    return m;
  }
};

// Parameters of the time-ordered forest construction: individuals die at
// rate death_rate, spawn broods at rate birth_event_rate (brood size >= 1
// placed immediately right of the mother), and feel the increments of f at
// their left-count through the grid scale.
struct ForestParams {
  double death_rate = 1.0;
  double birth_event_rate = 0.0;
  OffspringLaw brood;  // support offset 1; empty means "no natural births"
  InteractionFunction f;
  int scale_n = 1;
  double ceiling = std::numeric_limits<double>::infinity();
  std::int64_t event_budget = 100'000'000;
};

// Brood-size law of the renormalized model: a natural reproduction event
// spawns Lambda branches with probability gamma1/gammaN, one otherwise.
inline OffspringLaw renormalized_brood_law(const ModelSet& model) {
  OffspringLaw law;
  law.support_offset = 1;
  const double cn = model.k.c * double(model.k.big_n);
  const double g1 = model.k.gamma1;
  const double gn = model.k.gammaN;
  if (g1 > 0.0) {
    law.weights.assign(model.lambda1.weights.size(), 0.0);
    for (std::size_t i = 0; i < model.lambda1.weights.size(); ++i)
      law.weights[i] = g1 * model.lambda1.weights[i] / gn;
    law.weights[0] += cn / gn;
  } else {
    law.weights = {1.0};
  }
  law.finalize();
  return law;
}

inline ForestParams forest_params_scaled(const ModelSet& model, const InteractionFunction& f,
                                         double ceiling) {
  ForestParams p;
  p.death_rate = model.k.gamma0;
  p.birth_event_rate = model.k.gammaN;
  p.brood = renormalized_brood_law(model);
  p.f = f;
  p.scale_n = model.k.big_n;
  p.ceiling = ceiling;
  return p;
}

inline ForestParams forest_params_unscaled(const UnscaledReproduction& nu,
                                           const InteractionFunction& f,
                                           double ceiling = std::numeric_limits<double>::infinity()) {
  ForestParams p;
  p.death_rate = nu.total_rate * nu.law.prob(0);
  double b = 0.0;
  for (int k = 2; k <= nu.law.max_value(); ++k) b += nu.total_rate * nu.law.prob(k);
  p.birth_event_rate = b;
  if (b > 0.0) {
    OffspringLaw q;
    q.support_offset = 1;
    for (int k = 2; k <= nu.law.max_value(); ++k)
      q.weights.push_back(nu.total_rate * nu.law.prob(k) / b);
    q.finalize();
    p.brood = q;
  }
  p.f = f;
  p.scale_n = 1;
  p.ceiling = ceiling;
  return p;
}

namespace detail {

inline void spawn(PlanarForest& forest, std::vector<int>& alive, int mother_pos, int brood,
                  double t, double ceiling) {
  const int mother = alive[std::size_t(mother_pos)];
  std::vector<int> ids;
  ids.reserve(std::size_t(brood));
  for (int j = 0; j < brood; ++j) {
    const int id = int(forest.individuals.size());
    forest.individuals.push_back({mother, t, ceiling, {}});
    forest.individuals[std::size_t(mother)].children.push_back(id);
    ids.push_back(id);
  }
  alive.insert(alive.begin() + mother_pos + 1, ids.begin(), ids.end());
}

}  // namespace detail

// Simulate the population in time order, recording the genealogy. Each new
// brood is inserted immediately to the right of its mother, so later broods
// of the same mother sit to the left of earlier ones.
inline PlanarForest build_planar_forest(int m, const ForestParams& params, Rng& rng) {
  if (m < 0) throw domain_error("forest needs m >= 0 ancestors");
  PlanarForest forest;
  forest.ancestor_count = m;
  std::vector<int> alive;  // ids, left to right
  alive.reserve(std::size_t(m));
  for (int i = 0; i < m; ++i) {
    forest.individuals.push_back({-1, 0.0, params.ceiling, {}});
    forest.roots.push_back(i);
    alive.push_back(i);
  }
  InteractionGrid grid(params.f, params.scale_n);
  const double n_scale = double(params.scale_n);
  double t = 0.0;
  std::int64_t events = 0;
  while (!alive.empty()) {
    const int k = int(alive.size());
    const double r_death = params.death_rate * k;
    const double r_birth = params.birth_event_rate * k;
    const double r_idath = grid.rate_minus(0, k);
    const double r_ibirth = grid.rate_plus(0, k);
    const double total = r_death + r_birth + r_idath + r_ibirth;
    if (total <= 0.0) break;
    t += rng.exponential(total);
    if (t >= params.ceiling) break;  // everyone still alive is cut at the ceiling
    if (++events > params.event_budget) throw budget_exceeded_error("forest event budget");

    double u = rng.uniform() * total;
    if ((u -= r_death) < 0.0) {
      const int pos = int(rng.index(alive.size()));
      forest.individuals[std::size_t(alive[std::size_t(pos)])].death = t;
      alive.erase(alive.begin() + pos);
    } else if ((u -= r_birth) < 0.0) {
      const int pos = int(rng.index(alive.size()));
      const int brood = params.brood.sample(rng);
      detail::spawn(forest, alive, pos, brood, t, params.ceiling);
    } else if ((u -= r_idath) < 0.0) {
      // weighted by the negative f increment at each position
      int pos = int(alive.size()) - 1;
      for (int i = 1; i <= k; ++i) {
        u += n_scale * std::max(-grid.delta(i), 0.0);
        if (u >= 0.0) {
          pos = i - 1;
          break;
        }
      }
      forest.individuals[std::size_t(alive[std::size_t(pos)])].death = t;
      alive.erase(alive.begin() + pos);
    } else {
      int pos = int(alive.size()) - 1;
      for (int i = 1; i <= k; ++i) {
        u += n_scale * std::max(grid.delta(i), 0.0);
        if (u >= 0.0) {
          pos = i - 1;
          break;
        }
      }
      detail::spawn(forest, alive, pos, 1, t, params.ceiling);
    }
  }
  return forest;
}

// Depth-first left-to-right traversal of the forest: rise to each branch
// top, fall to the next unexplored branch point. Children are entered in
// descending birth order, which is exactly the planar left-to-right order.
inline ContourPath contour_from_forest(const PlanarForest& forest, double slope, double c_norm = 2.0,
                                       int n_norm = 1) {
  if (!(slope > 0.0)) throw domain_error("contour slope must be > 0");
  ContourPath out;
  out.slope = slope;
  out.c_norm = c_norm;
  out.n_norm = n_norm;
  out.path.kind = PiecewisePath::Kind::linear;
  out.path.append(0.0, 0.0);

  double s = 0.0, h = 0.0;
  auto emit = [&](double level) {
    if (level == h) return;  // sibling branches at the same level touch it
    s += std::fabs(level - h) / slope;
    h = level;
    out.path.append(s, h);
  };

  struct Frame {
    int id;
    std::size_t next_child;
  };
  for (int root : forest.roots) {
    std::vector<Frame> stack;
    // children ordered for traversal: later births first, ties in creation order
    auto ordered = [&](int id) {
      std::vector<int> ch = forest.individuals[std::size_t(id)].children;
      std::stable_sort(ch.begin(), ch.end(), [&](int a, int b) {
        return forest.individuals[std::size_t(a)].birth > forest.individuals[std::size_t(b)].birth;
      });
      return ch;
    };
    std::vector<std::vector<int>> ordered_children;
    // iterative DFS
    stack.push_back({root, 0});
    ordered_children.push_back(ordered(root));
    const auto& root_ind = forest.individuals[std::size_t(root)];
    if (!(root_ind.death > root_ind.birth))
      throw malformed_forest_error("individual must die strictly after birth");
    emit(root_ind.death);
    while (!stack.empty()) {
      Frame& top = stack.back();
      auto& children = ordered_children.back();
      if (top.next_child < children.size()) {
        const int child = children[top.next_child++];
        const auto& ind = forest.individuals[std::size_t(child)];
        if (!(ind.death > ind.birth)) throw malformed_forest_error("child dies before birth");
        if (ind.birth < forest.individuals[std::size_t(top.id)].birth ||
            ind.birth > forest.individuals[std::size_t(top.id)].death)
          throw malformed_forest_error("child born outside the mother lifetime");
        emit(ind.birth);  // minimum at the branch point
        stack.push_back({child, 0});
        ordered_children.push_back(ordered(child));
        emit(ind.death);  // rise into the new branch
      } else {
        stack.pop_back();
        ordered_children.pop_back();
        if (stack.empty()) {
          emit(0.0);  // tree completed
          ++out.trees_completed;
        }
      }
    }
  }
  return out;
}

}  // namespace branchlab

#endif
