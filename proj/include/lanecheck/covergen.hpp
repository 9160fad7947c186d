#pragma once

// Constraint-aware n-way covering arrays.
//
// Construction is greedy, one row at a time: each row is the best of
// kCandidateRows candidates, where a candidate starts from one uncovered
// tuple and assigns the remaining attributes one by one (AETG style), each
// time picking the value that completes the most uncovered tuples without
// falsifying a constraint. Tuples that no valid assignment contains are
// removed from the target set up front by exhaustive completion search.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "domain.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace lanecheck {

inline constexpr std::size_t kCandidateRows = 50;

struct CoveringArray {
  int strength = 0;
  std::vector<std::size_t> focus;  // attributes whose combinations are covered
  std::vector<Scenario> scenarios;
  std::size_t covered = 0;
  std::size_t feasible_total = 0;
  std::size_t infeasible_total = 0;
};

/// One value combination over `strength` attributes.
struct ValueTuple {
  std::vector<std::size_t> attributes;
  std::vector<int> codes;

  friend bool operator==(const ValueTuple&, const ValueTuple&) = default;
};

struct CoverageReport {
  std::size_t covered = 0;
  std::size_t feasible_total = 0;
  std::vector<ValueTuple> missing;
};

struct CoverOptions {
  std::vector<std::size_t> focus;  // empty = all attributes
  std::string id_prefix;           // default "ca<n>-"
  unsigned jobs = 1;
  std::size_t search_budget = kSearchBudget;
};

namespace detail {

/// Dense index over every value combination of every n-subset of the focus
/// attributes.
class TupleSpace {
 public:
  struct Combo {
    std::vector<std::size_t> attributes;
    std::vector<std::size_t> strides;
    std::size_t offset = 0;
  };

  TupleSpace(const DomainModel& dm, std::vector<std::size_t> focus, int strength) : dm_(&dm) {
    if (strength < 1 || static_cast<std::size_t>(strength) > focus.size()) {
      throw DomainError("strength " + std::to_string(strength) + " out of range 1.." + std::to_string(focus.size()));
    }
    std::vector<std::size_t> pick(static_cast<std::size_t>(strength));
    std::iota(pick.begin(), pick.end(), 0);
    const std::size_t k = pick.size();
    while (true) {
      Combo combo;
      std::size_t stride = 1;
      for (std::size_t p : pick) combo.attributes.push_back(focus[p]);
      combo.strides.resize(k);
      for (std::size_t i = k; i-- > 0;) {
        combo.strides[i] = stride;
        stride *= dm.attribute(combo.attributes[i]).domain_size();
      }
      combo.offset = total_;
      total_ += stride;
      combos_.push_back(std::move(combo));

      std::size_t i = k;
      while (i > 0 && pick[i - 1] == focus.size() - k + (i - 1)) --i;
      if (i == 0) break;
      ++pick[i - 1];
      for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
    }
    by_attribute_.assign(dm.size(), {});
    for (std::size_t c = 0; c < combos_.size(); ++c) {
      for (std::size_t a : combos_[c].attributes) by_attribute_[a].push_back(c);
    }
  }

  std::size_t total() const noexcept { return total_; }
  const std::vector<Combo>& combos() const noexcept { return combos_; }
  const std::vector<std::size_t>& combos_with(std::size_t attr) const { return by_attribute_[attr]; }

  /// Global index of the tuple a (possibly partial) assignment induces on
  /// combo `c`; nullopt if one of its attributes is unassigned.
  template <typename Values>
  std::optional<std::size_t> index(std::size_t c, const Values& values) const {
    const Combo& combo = combos_[c];
    std::size_t idx = combo.offset;
    for (std::size_t i = 0; i < combo.attributes.size(); ++i) {
      const std::size_t a = combo.attributes[i];
      std::optional<int> code = get(values[a]);
      if (!code) return std::nullopt;
      idx += *dm_->attribute(a).position_of(*code) * combo.strides[i];
    }
    return idx;
  }

  ValueTuple tuple(std::size_t global) const {
    auto it = std::upper_bound(combos_.begin(), combos_.end(), global,
                               [](std::size_t g, const Combo& combo) { return g < combo.offset; });
    const Combo& combo = *(it - 1);
    std::size_t local = global - combo.offset;
    ValueTuple t;
    t.attributes = combo.attributes;
    for (std::size_t i = 0; i < combo.attributes.size(); ++i) {
      t.codes.push_back(dm_->attribute(combo.attributes[i]).code_at(local / combo.strides[i]));
      local %= combo.strides[i];
    }
    return t;
  }

  PartialAssignment partial(std::size_t global) const {
    PartialAssignment p(dm_->size());
    const ValueTuple t = tuple(global);
    for (std::size_t i = 0; i < t.attributes.size(); ++i) p[t.attributes[i]] = t.codes[i];
    return p;
  }

 private:
  static std::optional<int> get(int v) { return v; }
  static std::optional<int> get(const std::optional<int>& v) { return v; }

  const DomainModel* dm_;
  std::vector<Combo> combos_;
  std::vector<std::vector<std::size_t>> by_attribute_;
  std::size_t total_ = 0;
};

enum class TupleState : unsigned char { Infeasible, Uncovered, Covered };

struct Feasibility {
  std::vector<TupleState> state;
  std::vector<std::optional<std::vector<int>>> witness;  // for Found tuples
  std::size_t feasible = 0;
  std::size_t infeasible = 0;
};

inline Feasibility classify_tuples(const DomainModel& dm, const TupleSpace& space, std::size_t budget,
                                   unsigned jobs) {
  Feasibility f;
  f.state.assign(space.total(), TupleState::Uncovered);
  f.witness.assign(space.total(), std::nullopt);
  parallel_for(space.total(), jobs, [&](std::size_t t) {
    auto search = find_completion(dm, space.partial(t), budget);
    if (search.status == CompletionSearch::Status::Infeasible) {
      f.state[t] = TupleState::Infeasible;
    } else if (search.status == CompletionSearch::Status::Found) {
      f.witness[t] = std::move(search.values);
    }
  });
  for (auto s : f.state) (s == TupleState::Infeasible ? f.infeasible : f.feasible)++;
  return f;
}

inline std::vector<std::size_t> all_attributes(const DomainModel& dm) {
  std::vector<std::size_t> out(dm.size());
  std::iota(out.begin(), out.end(), 0);
  return out;
}

inline std::vector<std::size_t> normalized_focus(const DomainModel& dm, std::vector<std::size_t> focus) {
  if (focus.empty()) return all_attributes(dm);
  std::sort(focus.begin(), focus.end());
  focus.erase(std::unique(focus.begin(), focus.end()), focus.end());
  if (focus.back() >= dm.size()) throw DomainError("focus attribute index out of range");
  return focus;
}

}  // namespace detail

/// Counts feasible n-tuples (over `focus`, default all attributes) and those
/// the scenarios cover. Tuples whose feasibility search runs out of budget
/// are counted as feasible.
inline CoverageReport coverage_report(const DomainModel& dm, const std::vector<Scenario>& scenarios, int strength,
                                      std::vector<std::size_t> focus = {}, unsigned jobs = 1) {
  focus = detail::normalized_focus(dm, std::move(focus));
  detail::TupleSpace space(dm, focus, strength);
  auto feasibility = detail::classify_tuples(dm, space, kSearchBudget, jobs);
  auto& state = feasibility.state;
  for (const auto& s : scenarios) {
    if (!validate(dm, s.values).empty()) throw DomainError("scenario '" + s.id + "' violates a constraint");
    for (std::size_t c = 0; c < space.combos().size(); ++c) {
      const std::size_t t = *space.index(c, s.values);
      if (state[t] == detail::TupleState::Uncovered) state[t] = detail::TupleState::Covered;
    }
  }
  CoverageReport report;
  report.feasible_total = feasibility.feasible;
  for (std::size_t t = 0; t < state.size(); ++t) {
    if (state[t] == detail::TupleState::Covered) ++report.covered;
    if (state[t] == detail::TupleState::Uncovered) report.missing.push_back(space.tuple(t));
  }
  return report;
}

/// Greedy constraint-aware covering array of the given strength. Every
/// feasible n-way combination of the focus attributes appears in at least one
/// row; attributes outside the focus are drawn at random. Deterministic given
/// the seed, independent of `jobs`.
inline CoveringArray generate_covering_array(const DomainModel& dm, int strength, std::uint64_t seed,
                                             const CoverOptions& options = {}) {
  using detail::TupleState;
  const auto focus = detail::normalized_focus(dm, options.focus);
  detail::TupleSpace space(dm, focus, strength);
  auto feasibility = detail::classify_tuples(dm, space, options.search_budget, options.jobs);
  auto& state = feasibility.state;

  std::vector<bool> in_focus(dm.size(), false);
  for (std::size_t a : focus) in_focus[a] = true;

  CoveringArray array;
  array.strength = strength;
  array.focus = focus;
  array.feasible_total = feasibility.feasible;
  array.infeasible_total = feasibility.infeasible;
  const std::string prefix = options.id_prefix.empty() ? "ca" + std::to_string(strength) + "-" : options.id_prefix;

  auto newly_covered = [&](const std::vector<int>& row) {
    std::size_t count = 0;
    for (std::size_t c = 0; c < space.combos().size(); ++c) {
      if (state[*space.index(c, row)] == TupleState::Uncovered) ++count;
    }
    return count;
  };

  struct Candidate {
    std::vector<int> values;
    std::size_t score = 0;
    bool ok = false;
  };

  std::size_t uncovered = feasibility.feasible;
  for (std::size_t row = 0; uncovered > 0; ++row) {
    std::vector<std::size_t> open;
    open.reserve(uncovered);
    for (std::size_t t = 0; t < state.size(); ++t) {
      if (state[t] == TupleState::Uncovered) open.push_back(t);
    }

    std::vector<Candidate> candidates(kCandidateRows);
    parallel_for(kCandidateRows, options.jobs, [&](std::size_t k) {
      Rng rng(mix_seed(seed, hash_tag("candidate"), row, k));
      const std::size_t target = open[rng.index(open.size())];
      PartialAssignment partial = space.partial(target);

      std::vector<std::size_t> order;
      for (std::size_t a : focus) {
        if (!partial[a]) order.push_back(a);
      }
      rng.shuffle(order);
      bool dead_end = false;
      for (std::size_t attr : order) {
        const auto& def = dm.attribute(attr);
        std::vector<int> codes;
        for (std::size_t p = 0; p < def.domain_size(); ++p) codes.push_back(def.code_at(p));
        rng.shuffle(codes);
        std::optional<int> best;
        std::size_t best_gain = 0;
        for (int code : codes) {
          partial[attr] = code;
          bool consistent = true;
          for (std::size_t c : dm.constraints_on(attr)) {
            if (dm.constraints()[c].expr.evaluate_partial(partial) == Truth::False) {
              consistent = false;
              break;
            }
          }
          if (!consistent) continue;
          std::size_t gain = 0;
          for (std::size_t c : space.combos_with(attr)) {
            if (auto t = space.index(c, partial); t && state[*t] == TupleState::Uncovered) ++gain;
          }
          if (!best || gain > best_gain) {
            best = code;
            best_gain = gain;
          }
        }
        partial[attr] = best;
        if (!best) {
          dead_end = true;
          break;
        }
      }

      Candidate cand;
      if (!dead_end) {
        try {
          cand.values = complete_partial(dm, partial, rng.next()).values;
          cand.ok = true;
        } catch (const Error&) {
        }
      }
      if (!cand.ok && feasibility.witness[target]) {
        cand.values = *feasibility.witness[target];
        if (focus.size() < dm.size()) {
          PartialAssignment fixed(dm.size());
          for (std::size_t a : focus) fixed[a] = cand.values[a];
          try {
            cand.values = complete_partial(dm, fixed, rng.next()).values;
          } catch (const Error&) {
          }
        }
        cand.ok = true;
      }
      if (cand.ok) cand.score = newly_covered(cand.values);
      candidates[k] = std::move(cand);
    });

    const Candidate* best = nullptr;
    for (const auto& cand : candidates) {
      if (cand.ok && cand.score > 0 && (!best || cand.score > best->score)) best = &cand;
    }
    if (!best) {
      throw BudgetExceeded("covering array: " + std::to_string(uncovered) +
                           " tuples could not be covered (feasibility undecided within the search budget)");
    }
    for (std::size_t c = 0; c < space.combos().size(); ++c) {
      auto& s = state[*space.index(c, best->values)];
      if (s == TupleState::Uncovered) {
        s = TupleState::Covered;
        --uncovered;
      }
    }
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "%04zu", row);
    array.scenarios.push_back(Scenario{prefix + suffix, best->values, mix_seed(seed, hash_tag("row"), row)});
  }
  array.covered = array.feasible_total;
  return array;
}

}  // namespace lanecheck
