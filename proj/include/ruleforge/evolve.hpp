#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "ruleforge/errors.hpp"
#include "ruleforge/feature_matrix.hpp"
#include "ruleforge/importance.hpp"
#include "ruleforge/metrics.hpp"
#include "ruleforge/parallel.hpp"
#include "ruleforge/rng.hpp"
#include "ruleforge/rules.hpp"

namespace ruleforge {

struct Individual {
  DecisionList genome;
  double fidelity = 0.0;
  double alignment = 0.0;
  int rank = 0;                // front index; 0 = non-dominated
  double crowding = 0.0;
};

struct EvoParams {
  std::size_t population_size = 120;
  int max_generations = 500;
  double crossover_prob = 0.7;
  double mutation_prob = 0.5;
  int patience = 25;
  std::size_t n_elites = 5;
  int tournament_size = 2;
  std::uint64_t seed = 0;
  std::array<double, 5> mutation_weights{1.0, 1.0, 1.0, 1.0, 1.0};
  double threshold_scale = 0.25;     // Gaussian step as a fraction of feature std
  bool ciu_guided_sampling = true;   // importance-proportional feature sampling
  std::size_t eval_subsample = 0;    // 0: evaluate on all rows

  void validate() const {
    if (population_size < 2) throw ContractError("evo params: population_size must be >= 2");
    if (population_size < 2 * n_elites)
      throw ContractError("evo params: population_size must be >= 2 * n_elites");
    if (max_generations < 0) throw ContractError("evo params: max_generations must be >= 0");
    for (double p : {crossover_prob, mutation_prob})
      if (!(p >= 0.0 && p <= 1.0)) throw ContractError("evo params: probabilities must lie in [0,1]");
    if (patience < 1) throw ContractError("evo params: patience must be >= 1");
    if (tournament_size < 1) throw ContractError("evo params: tournament_size must be >= 1");
    for (double w : mutation_weights)
      if (w < 0.0) throw ContractError("evo params: mutation weights must be non-negative");
    if (!(threshold_scale >= 0.0)) throw ContractError("evo params: threshold_scale must be >= 0");
  }
};

/// All-time non-dominated set plus the hypervolume trace that drives early
/// stopping. The front only ever improves, so the history is non-decreasing.
struct ParetoArchive {
  std::vector<Individual> front;
  std::vector<double> hypervolume_history;  // one entry per evaluated generation
  int generations = 0;
  bool degraded_fidelity = false;  // y_hat was single-class; plain accuracy used
};

// ---------------------------------------------------------------------------
// Dominance machinery

/// a dominates b: at least as good in both objectives, strictly better in one
/// (maximization).
inline bool dominates(const Individual& a, const Individual& b) {
  return a.fidelity >= b.fidelity && a.alignment >= b.alignment &&
         (a.fidelity > b.fidelity || a.alignment > b.alignment);
}

/// Fast non-dominated sort; writes ranks back and returns fronts as index
/// lists in input order.
inline std::vector<std::vector<std::size_t>> non_dominated_sort(std::vector<Individual>& pop) {
  const std::size_t n = pop.size();
  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<std::size_t> dominators(n, 0);
  std::vector<std::vector<std::size_t>> fronts;
  std::vector<std::size_t> current;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (dominates(pop[i], pop[j]))
        dominated[i].push_back(j);
      else if (dominates(pop[j], pop[i]))
        ++dominators[i];
    }
    if (dominators[i] == 0) current.push_back(i);
  }
  while (!current.empty()) {
    for (std::size_t i : current) pop[i].rank = static_cast<int>(fronts.size());
    std::vector<std::size_t> next;
    for (std::size_t i : current)
      for (std::size_t j : dominated[i])
        if (--dominators[j] == 0) next.push_back(j);
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(current));
    current = std::move(next);
  }
  return fronts;
}

/// Crowding distances for one front, aligned with the input order. Boundary
/// individuals per objective get infinity; a zero objective range contributes
/// nothing.
inline std::vector<double> crowding_distance(std::span<const Individual> front) {
  const std::size_t n = front.size();
  std::vector<double> dist(n, 0.0);
  if (n == 0) return dist;
  if (n <= 2) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    return dist;
  }
  const auto accumulate = [&](auto objective) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return objective(front[a]) < objective(front[b]);
    });
    const double lo = objective(front[order.front()]);
    const double hi = objective(front[order.back()]);
    dist[order.front()] = std::numeric_limits<double>::infinity();
    dist[order.back()] = std::numeric_limits<double>::infinity();
    if (hi - lo <= 0.0) return;
    for (std::size_t k = 1; k + 1 < n; ++k)
      dist[order[k]] +=
          (objective(front[order[k + 1]]) - objective(front[order[k - 1]])) / (hi - lo);
  };
  accumulate([](const Individual& ind) { return ind.fidelity; });
  accumulate([](const Individual& ind) { return ind.alignment; });
  return dist;
}

/// 2-D hypervolume of a non-dominated front against reference point (0,0).
inline double hypervolume(std::span<const Individual> front) {
  if (front.empty()) return 0.0;
  std::vector<std::pair<double, double>> points;
  points.reserve(front.size());
  for (const auto& ind : front) {
    if (!(ind.fidelity >= 0.0 && ind.fidelity <= 1.0 && ind.alignment >= 0.0 &&
          ind.alignment <= 1.0))
      throw ContractError("hypervolume: objectives outside [0,1]^2");
    points.emplace_back(ind.fidelity, ind.alignment);
  }
  for (std::size_t i = 0; i < front.size(); ++i)
    for (std::size_t j = 0; j < front.size(); ++j)
      if (i != j && dominates(front[i], front[j]))
        throw ContractError("hypervolume: input front contains dominated points");

  std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  double hv = 0.0, covered = 0.0;
  for (const auto& [fid, align] : points) {
    if (align > covered) {
      hv += fid * (align - covered);
      covered = align;
    }
  }
  return hv;
}

// ---------------------------------------------------------------------------
// Variation operators

enum class MutationKind {
  threshold_jitter,   // threshold += N(0, scale * feature std)
  comparator_swap,    // comparator resampled
  feature_replace,    // feature resampled ~ importance, threshold within range
  predicate_add_remove,
  rule_add_remove,
};

namespace detail {

inline std::size_t sample_feature(Rng& rng, const GlobalImportance& g, bool guided) {
  if (guided && !g.degenerate) return rng.weighted_index(g.weight);
  return static_cast<std::size_t>(rng.uniform_below(g.features.size()));
}

inline Predicate sample_predicate(Rng& rng, const FeatureStats& stats,
                                  const GlobalImportance& g, bool guided) {
  const std::size_t f = sample_feature(rng, g, guided);
  Predicate pred;
  pred.feature = g.features[f];
  pred.op = static_cast<Cmp>(rng.uniform_below(4));
  pred.threshold = quantize_threshold(rng.uniform(stats.min[f], stats.max[f]));
  return pred;
}

inline Rule sample_rule(Rng& rng, const FeatureStats& stats, const GlobalImportance& g,
                        bool guided) {
  Rule rule;
  const long long n = rng.uniform_int(1, 2);
  for (long long i = 0; i < n; ++i)
    rule.predicates.push_back(sample_predicate(rng, stats, g, guided));
  return rule;
}

}  // namespace detail

/// Segment crossover: one-point cut per parent list, tails swapped.
inline std::pair<DecisionList, DecisionList> crossover_segments(const DecisionList& a,
                                                                const DecisionList& b,
                                                                std::size_t cut_a,
                                                                std::size_t cut_b) {
  cut_a = std::min(cut_a, a.rules.size());
  cut_b = std::min(cut_b, b.rules.size());
  DecisionList child1, child2;
  child1.rules.assign(a.rules.begin(), a.rules.begin() + static_cast<long>(cut_a));
  child1.rules.insert(child1.rules.end(), b.rules.begin() + static_cast<long>(cut_b),
                      b.rules.end());
  child2.rules.assign(b.rules.begin(), b.rules.begin() + static_cast<long>(cut_b));
  child2.rules.insert(child2.rules.end(), a.rules.begin() + static_cast<long>(cut_a),
                      a.rules.end());
  return {std::move(child1), std::move(child2)};
}

/// Sub-expression crossover: swaps a non-empty predicate subsequence between
/// one rule of each parent.
inline std::pair<DecisionList, DecisionList> crossover_subexpressions(
    const DecisionList& a, const DecisionList& b, std::size_t rule_a, std::size_t rule_b,
    std::size_t from_a, std::size_t len_a, std::size_t from_b, std::size_t len_b) {
  DecisionList child1 = a, child2 = b;
  auto& preds_a = child1.rules[rule_a].predicates;
  auto& preds_b = child2.rules[rule_b].predicates;
  std::vector<Predicate> slice_a(preds_a.begin() + static_cast<long>(from_a),
                                 preds_a.begin() + static_cast<long>(from_a + len_a));
  std::vector<Predicate> slice_b(preds_b.begin() + static_cast<long>(from_b),
                                 preds_b.begin() + static_cast<long>(from_b + len_b));
  preds_a.erase(preds_a.begin() + static_cast<long>(from_a),
                preds_a.begin() + static_cast<long>(from_a + len_a));
  preds_a.insert(preds_a.begin() + static_cast<long>(from_a), slice_b.begin(), slice_b.end());
  preds_b.erase(preds_b.begin() + static_cast<long>(from_b),
                preds_b.begin() + static_cast<long>(from_b + len_b));
  preds_b.insert(preds_b.begin() + static_cast<long>(from_b), slice_a.begin(), slice_a.end());
  return {std::move(child1), std::move(child2)};
}

// Both crossover forms, chosen uniformly. Degenerate parents produce copies.
// Children are simplified; empty lists are allowed.
inline std::pair<DecisionList, DecisionList> crossover(const DecisionList& a,
                                                       const DecisionList& b, Rng& rng) {
  std::pair<DecisionList, DecisionList> children;
  if (rng.bernoulli(0.5)) {
    const std::size_t cut_a = static_cast<std::size_t>(rng.uniform_int(0, static_cast<long long>(a.rules.size())));
    const std::size_t cut_b = static_cast<std::size_t>(rng.uniform_int(0, static_cast<long long>(b.rules.size())));
    children = crossover_segments(a, b, cut_a, cut_b);
  } else {
    if (a.rules.empty() || b.rules.empty()) {
      children = {a, b};
    } else {
      const std::size_t ra = rng.uniform_below(a.rules.size());
      const std::size_t rb = rng.uniform_below(b.rules.size());
      const std::size_t na = a.rules[ra].predicates.size();
      const std::size_t nb = b.rules[rb].predicates.size();
      const std::size_t from_a = rng.uniform_below(na);
      const std::size_t len_a = 1 + rng.uniform_below(na - from_a);
      const std::size_t from_b = rng.uniform_below(nb);
      const std::size_t len_b = 1 + rng.uniform_below(nb - from_b);
      children = crossover_subexpressions(a, b, ra, rb, from_a, len_a, from_b, len_b);
    }
  }
  children.first = simplify(children.first);
  children.second = simplify(children.second);
  return children;
}

/// One mutation of the given kind. Mutations that would empty a rule remove
/// the rule instead; structural kinds on an empty genome fall back to adding
/// a rule. The result is simplified.
inline DecisionList mutate_kind(const DecisionList& genome, MutationKind kind,
                                const FeatureStats& stats, const GlobalImportance& g,
                                const EvoParams& params, Rng& rng) {
  DecisionList out = genome;
  const bool structural_add = out.rules.empty();
  if (structural_add && kind != MutationKind::rule_add_remove)
    kind = MutationKind::rule_add_remove;

  const auto feature_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < g.features.size(); ++i)
      if (g.features[i] == name) return i;
    throw DataError("mutate: feature not covered by schema stats: " + name);
  };

  switch (kind) {
    case MutationKind::threshold_jitter: {
      auto& rule = out.rules[rng.uniform_below(out.rules.size())];
      auto& pred = rule.predicates[rng.uniform_below(rule.predicates.size())];
      const double sd = stats.stddev[feature_index(pred.feature)];
      pred.threshold =
          quantize_threshold(pred.threshold + rng.normal(0.0, params.threshold_scale * sd));
      break;
    }
    case MutationKind::comparator_swap: {
      auto& rule = out.rules[rng.uniform_below(out.rules.size())];
      auto& pred = rule.predicates[rng.uniform_below(rule.predicates.size())];
      pred.op = static_cast<Cmp>(rng.uniform_below(4));
      break;
    }
    case MutationKind::feature_replace: {
      auto& rule = out.rules[rng.uniform_below(out.rules.size())];
      auto& pred = rule.predicates[rng.uniform_below(rule.predicates.size())];
      const std::size_t f = detail::sample_feature(rng, g, params.ciu_guided_sampling);
      pred.feature = g.features[f];
      pred.threshold = quantize_threshold(rng.uniform(stats.min[f], stats.max[f]));
      break;
    }
    case MutationKind::predicate_add_remove: {
      const std::size_t r = rng.uniform_below(out.rules.size());
      auto& rule = out.rules[r];
      if (rng.bernoulli(0.5)) {
        rule.predicates.push_back(
            detail::sample_predicate(rng, stats, g, params.ciu_guided_sampling));
      } else if (rule.predicates.size() > 1) {
        rule.predicates.erase(rule.predicates.begin() +
                              static_cast<long>(rng.uniform_below(rule.predicates.size())));
      } else {
        out.rules.erase(out.rules.begin() + static_cast<long>(r));
      }
      break;
    }
    case MutationKind::rule_add_remove: {
      if (structural_add || rng.bernoulli(0.5)) {
        const std::size_t pos = static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<long long>(out.rules.size())));
        out.rules.insert(out.rules.begin() + static_cast<long>(pos),
                         detail::sample_rule(rng, stats, g, params.ciu_guided_sampling));
      } else {
        out.rules.erase(out.rules.begin() +
                        static_cast<long>(rng.uniform_below(out.rules.size())));
      }
      break;
    }
  }
  return simplify(out);
}

/// One mutation, kind sampled by params.mutation_weights.
inline DecisionList mutate(const DecisionList& genome, const FeatureStats& stats,
                           const GlobalImportance& g, const EvoParams& params, Rng& rng) {
  const std::size_t kind = rng.weighted_index(params.mutation_weights);
  return mutate_kind(genome, static_cast<MutationKind>(kind), stats, g, params, rng);
}

// ---------------------------------------------------------------------------
// Population initialization

/// 20% mutated copies of the surrogate baseline list, 80% random lists with
/// 1-4 rules of 1-3 predicates; features sampled proportionally to importance,
/// thresholds uniform within the feature range.
inline std::vector<Individual> init_population(const DecisionList& surrogate_list,
                                               const FeatureStats& stats,
                                               const GlobalImportance& g,
                                               const EvoParams& params) {
  if (g.features.empty()) throw ContractError("init_population: empty schema");
  std::vector<Individual> pop(params.population_size);
  const std::size_t n_seeded =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.2 * double(params.population_size))));

  DecisionList baseline = surrogate_list;
  for (auto& rule : baseline.rules)
    for (auto& pred : rule.predicates) pred.threshold = quantize_threshold(pred.threshold);
  baseline = simplify(baseline);

  for (std::size_t i = 0; i < params.population_size; ++i) {
    Rng rng = Rng::stream(params.seed, 0, i);
    if (i < n_seeded) {
      pop[i].genome = baseline;
      if (rng.bernoulli(params.mutation_prob))
        pop[i].genome = mutate(pop[i].genome, stats, g, params, rng);
    } else {
      DecisionList genome;
      const long long n_rules = rng.uniform_int(1, 4);
      for (long long r = 0; r < n_rules; ++r) {
        Rule rule;
        const long long n_preds = rng.uniform_int(1, 3);
        for (long long k = 0; k < n_preds; ++k)
          rule.predicates.push_back(
              detail::sample_predicate(rng, stats, g, params.ciu_guided_sampling));
        genome.rules.push_back(std::move(rule));
      }
      pop[i].genome = simplify(genome);
    }
  }
  return pop;
}

// ---------------------------------------------------------------------------
// The engine

namespace detail {

/// Objective evaluation context; fidelity falls back to plain accuracy when
/// y_hat is single-class.
struct Evaluator {
  const FeatureMatrix& X;
  std::span<const int> y_hat;
  const GlobalImportance& g;
  bool degraded = false;

  Evaluator(const FeatureMatrix& x, std::span<const int> labels, const GlobalImportance& gi)
      : X(x), y_hat(labels), g(gi) {
    degraded = !has_both_classes(labels);
  }

  void operator()(Individual& ind) const {
    ind.fidelity = fidelity(ind.genome, X, y_hat);
    ind.alignment = ciu_alignment(ind.genome, g);
  }
};

inline bool better_by_rank_crowding(const Individual& a, const Individual& b) {
  if (a.rank != b.rank) return a.rank < b.rank;
  return a.crowding > b.crowding;
}

// Keeps one archive member per objective point; equal points collapse to the
// simpler genome (fewer predicates, then fewer rules, then first seen).
inline void archive_insert(std::vector<Individual>& archive, const Individual& cand) {
  for (auto& member : archive) {
    if (member.fidelity == cand.fidelity && member.alignment == cand.alignment) {
      const Complexity mc = complexity(member.genome), cc = complexity(cand.genome);
      if (cc.n_predicates < mc.n_predicates ||
          (cc.n_predicates == mc.n_predicates && cc.n_rules < mc.n_rules))
        member = cand;
      return;
    }
    if (dominates(member, cand)) return;
  }
  std::erase_if(archive, [&](const Individual& m) { return dominates(cand, m); });
  archive.push_back(cand);
}

}  // namespace detail

/// Picks the parent pool for the next generation from parents + offspring:
/// n_elites best by (rank, crowding) carried unconditionally, the rest filled
/// in front order with crowding-distance truncation.
inline std::vector<Individual> nsga2_survival(std::vector<Individual> combined,
                                              const EvoParams& params) {
  const auto fronts = non_dominated_sort(combined);
  for (const auto& front : fronts) {
    std::vector<Individual> members;
    members.reserve(front.size());
    for (std::size_t i : front) members.push_back(combined[i]);
    const std::vector<double> dist = crowding_distance(members);
    for (std::size_t k = 0; k < front.size(); ++k) combined[front[k]].crowding = dist[k];
  }

  std::vector<std::size_t> order(combined.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detail::better_by_rank_crowding(combined[a], combined[b]);
  });

  std::vector<char> taken(combined.size(), 0);
  std::vector<Individual> next;
  next.reserve(params.population_size);
  const std::size_t n_elites = std::min(params.n_elites, params.population_size);
  for (std::size_t k = 0; k < n_elites && k < order.size(); ++k) {
    taken[order[k]] = 1;
    next.push_back(combined[order[k]]);
  }
  for (std::size_t k = 0; k < order.size() && next.size() < params.population_size; ++k) {
    if (taken[order[k]]) continue;
    next.push_back(combined[order[k]]);
  }
  return next;
}

// Generational NSGA-II over decision lists, maximizing (fidelity, CIU
// alignment). Early-stops when the archive hypervolume has not improved by
// more than 1e-6 for `patience` consecutive generations. Deterministic given
// the seed: variation RNG streams derive from (seed, generation, pair index)
// and objective evaluation is pure, so worker count never changes results.
inline ParetoArchive evolve(const FeatureMatrix& X, std::span<const int> y_hat,
                            const GlobalImportance& g, const EvoParams& params,
                            const DecisionList& surrogate_seed = {}) {
  params.validate();
  if (X.n_rows == 0 || X.n_rows != y_hat.size())
    throw ContractError("evolve: bad evaluation shapes");
  if (g.features != X.names)
    throw ContractError("evolve: importance ranking is not aligned with the feature matrix");

  // Optional fixed evaluation subsample (default: all rows).
  FeatureMatrix sub;
  std::vector<int> sub_labels;
  const FeatureMatrix* eval_X = &X;
  std::span<const int> eval_y = y_hat;
  if (params.eval_subsample > 0 && params.eval_subsample < X.n_rows) {
    std::vector<std::size_t> rows(X.n_rows);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    Rng rng = Rng::stream(params.seed, 13);
    rng.shuffle(rows);
    rows.resize(params.eval_subsample);
    std::sort(rows.begin(), rows.end());
    sub.names = X.names;
    sub.kinds = X.kinds;
    sub.n_cols = X.n_cols;
    sub.n_rows = rows.size();
    for (std::size_t r : rows) {
      const auto row = X.row(r);
      sub.values.insert(sub.values.end(), row.begin(), row.end());
      sub_labels.push_back(y_hat[r]);
    }
    eval_X = &sub;
    eval_y = sub_labels;
  }

  const FeatureStats stats = FeatureStats::compute(X);
  const detail::Evaluator evaluate_objectives(*eval_X, eval_y, g);

  std::vector<Individual> pop = init_population(surrogate_seed, stats, g, params);
  parallel_for(pop.size(), [&](std::size_t i) { evaluate_objectives(pop[i]); });

  ParetoArchive archive;
  archive.degraded_fidelity = evaluate_objectives.degraded;
  for (const auto& ind : pop) detail::archive_insert(archive.front, ind);

  double best_hv = hypervolume(archive.front);
  archive.hypervolume_history.push_back(best_hv);
  int stall = 0;

  // Rank/crowding for the initial tournament pool.
  pop = nsga2_survival(std::move(pop), params);

  for (int gen = 1; gen <= params.max_generations; ++gen) {
    std::vector<Individual> offspring;
    offspring.reserve(params.population_size);
    const std::size_t n_pairs = (params.population_size + 1) / 2;
    for (std::size_t pair = 0; pair < n_pairs; ++pair) {
      Rng rng = Rng::stream(params.seed, static_cast<std::uint64_t>(gen), pair);
      const auto tournament = [&]() -> const Individual& {
        std::size_t best = rng.uniform_below(pop.size());
        for (int k = 1; k < params.tournament_size; ++k) {
          const std::size_t challenger = rng.uniform_below(pop.size());
          if (detail::better_by_rank_crowding(pop[challenger], pop[best])) best = challenger;
        }
        return pop[best];
      };
      const Individual& p1 = tournament();
      const Individual& p2 = tournament();

      std::pair<DecisionList, DecisionList> children{p1.genome, p2.genome};
      if (rng.bernoulli(params.crossover_prob)) children = crossover(p1.genome, p2.genome, rng);
      if (rng.bernoulli(params.mutation_prob))
        children.first = mutate(children.first, stats, g, params, rng);
      if (rng.bernoulli(params.mutation_prob))
        children.second = mutate(children.second, stats, g, params, rng);

      offspring.push_back({std::move(children.first)});
      if (offspring.size() < params.population_size)
        offspring.push_back({std::move(children.second)});
    }

    parallel_for(offspring.size(), [&](std::size_t i) { evaluate_objectives(offspring[i]); });
    for (const auto& ind : offspring) detail::archive_insert(archive.front, ind);

    std::vector<Individual> combined = pop;
    combined.insert(combined.end(), offspring.begin(), offspring.end());
    pop = nsga2_survival(std::move(combined), params);

    const double hv = hypervolume(archive.front);
    archive.hypervolume_history.push_back(hv);
    if (hv > best_hv + 1e-6) {
      best_hv = hv;
      stall = 0;
    } else {
      ++stall;
    }
    if (stall >= params.patience) break;
  }

  archive.generations = static_cast<int>(archive.hypervolume_history.size());
  return archive;
}

/// Highest fidelity; ties broken by higher alignment, then fewer predicates,
/// then fewer rules.
inline const Individual& select_final(const ParetoArchive& archive) {
  if (archive.front.empty()) throw ContractError("select_final: empty archive");
  const Individual* best = &archive.front.front();
  for (const auto& ind : archive.front) {
    const Complexity bc = complexity(best->genome), ic = complexity(ind.genome);
    const auto key = [](const Individual& x, const Complexity& c) {
      return std::make_tuple(-x.fidelity, -x.alignment, c.n_predicates, c.n_rules);
    };
    if (key(ind, ic) < key(*best, bc)) best = &ind;
  }
  return *best;
}

}  // namespace ruleforge
