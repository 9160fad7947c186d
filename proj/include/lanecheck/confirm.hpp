#pragma once

// Confirmation of mined rules by fresh sampling inside each antecedent until
// the Wilson interval of the rule's accuracy is narrow enough.

#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "domain.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "ripper.hpp"
#include "rng.hpp"
#include "wilson.hpp"

namespace lanecheck {

using LabelOracle = std::function<int(const Scenario&)>;

struct ConfirmOptions {
  double lambda = 0.2;       // stop once the interval is narrower than this
  std::size_t budget = 200;  // maximum samples per rule
  unsigned jobs = 1;
  std::size_t batch = 8;     // samples labelled concurrently
  double z = kZ95;
};

/// Draws scenarios inside one rule of a rule set.
class RuleSampler {
 public:
  RuleSampler(const DomainModel& dm, const RuleSet& set, std::size_t index) : dm_(dm), set_(set), index_(index) {
    const Rule& rule = set.rules.at(index);
    if (rule.is_default) return;
    // Enumerate the value combinations of the antecedent and keep those that
    // extend to a valid scenario.
    std::vector<PartialAssignment> combos{PartialAssignment(dm.size())};
    for (const auto& p : rule.antecedent) {
      std::vector<PartialAssignment> next;
      for (const auto& c : combos) {
        for (int code : p.codes) {
          auto extended = c;
          extended[p.attribute] = code;
          next.push_back(std::move(extended));
        }
      }
      combos = std::move(next);
      if (combos.size() > 100000) throw BudgetExceeded("rule antecedent has too many value combinations");
    }
    bool undecided = false;
    for (auto& c : combos) {
      const auto search = find_completion(dm, c);
      if (search.status == CompletionSearch::Status::Found) feasible_.push_back(std::move(c));
      undecided = undecided || search.status == CompletionSearch::Status::Undecided;
    }
    if (feasible_.empty()) {
      if (undecided) throw BudgetExceeded("rule antecedent: satisfiability undecided within the search budget");
      throw UnsatisfiableError("rule antecedent '" + antecedent_text(dm, rule) + "' admits no valid scenario");
    }
  }

  Scenario sample(std::uint64_t seed) const {
    Rng rng(seed);
    if (!set_.rules[index_].is_default) {
      const auto& fixed = feasible_[rng.index(feasible_.size())];
      return complete_partial(dm_, fixed, rng.next());
    }
    for (std::size_t attempt = 0; attempt < kSamplingAttempts; ++attempt) {
      auto s = sample_scenario(dm_, rng.next());
      if (!set_.matches_other(s.values, index_)) return s;
    }
    throw BudgetExceeded("default rule: no scenario outside the other rules within " +
                         std::to_string(kSamplingAttempts) + " attempts");
  }

 private:
  const DomainModel& dm_;
  const RuleSet& set_;
  std::size_t index_;
  std::vector<PartialAssignment> feasible_;
};

/// Samples scenarios satisfying rule `index` (for the default rule: matching
/// no other rule), labels them with `oracle`, and updates the rule's
/// confirmation fields after each sample until the Wilson interval is
/// narrower than lambda or the budget is spent. Samples are labelled in
/// parallel batches but consumed in order, so the result does not depend on
/// `jobs`.
inline void confirm_rule(RuleSet& set, std::size_t index, const DomainModel& dm, const LabelOracle& oracle,
                         const ConfirmOptions& options, std::uint64_t seed) {
  if (!(options.lambda > 0.0 && options.lambda <= 1.0)) throw ConfigError("lambda must lie in (0, 1]");
  if (options.budget == 0) throw ConfigError("confirmation budget must be positive");
  const RuleSampler sampler(dm, set, index);
  Rule& rule = set.rules[index];
  rule.samples.clear();
  rule.confirm_n = 0;
  rule.confirm_k = 0;
  rule.confirmed = false;
  rule.budget_exhausted = false;

  const std::size_t batch = std::max<std::size_t>(1, options.batch);
  for (std::size_t start = 0; start < options.budget && !rule.confirmed; start += batch) {
    const std::size_t count = std::min(batch, options.budget - start);
    std::vector<ConfirmationSample> labelled(count);
    parallel_for(count, options.jobs, [&](std::size_t j) {
      const std::size_t i = start + j;
      Scenario s = sampler.sample(mix_seed(seed, hash_tag("confirm"), index, i));
      char id[32];
      std::snprintf(id, sizeof id, "r%zu-%04zu", index, i);
      s.id = id;
      labelled[j] = ConfirmationSample{s.id, oracle(s)};
    });
    for (const auto& sample : labelled) {
      rule.samples.push_back(sample);
      ++rule.confirm_n;
      rule.confirm_k += sample.label == rule.label;
      rule.confirmed_ci = wilson_ci(rule.confirm_k, rule.confirm_n, options.z);
      rule.confirmed_accuracy = static_cast<double>(rule.confirm_k) / static_cast<double>(rule.confirm_n);
      if (rule.confirmed_ci.width() < options.lambda) {
        rule.confirmed = true;
        break;
      }
    }
  }
  rule.budget_exhausted = !rule.confirmed;
}

}  // namespace lanecheck
