#pragma once

// Rule induction (IREP* core of RIPPER, without the optimisation pass) and
// the rule representation shared with confirmation and reporting.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "encoding.hpp"
#include "error.hpp"
#include "rng.hpp"
#include "wilson.hpp"

namespace lanecheck {

struct Condition {
  std::size_t feature = 0;
  int category = 0;

  friend bool operator==(const Condition&, const Condition&) = default;
};

inline bool matches(std::span<const Condition> conditions, std::span<const int> row) {
  for (const auto& c : conditions) {
    if (row[c.feature] != c.category) return false;
  }
  return true;
}

struct RipperParams {
  double grow_fraction = 2.0 / 3.0;
  double mdl_slack = 64.0;  // bits above the best total before stopping
  double fp_share = 0.5;    // expected share of false positives among errors
  bool require_trainable = true;
};

/// Learned rules for the positive class followed by a default label.
struct RipperModel {
  int positive = kDisagree;
  std::vector<std::vector<Condition>> rules;
  int default_label = kAgree;
  std::vector<double> description_lengths;  // total DL after each added rule

  int predict(std::span<const int> row) const {
    for (const auto& r : rules) {
      if (matches(r, row)) return positive;
    }
    return default_label;
  }
};

namespace detail {

inline double log2_safe(double x) { return x > 0.0 ? std::log2(x) : 0.0; }

/// Bits to identify k elements of a t-element set when each is chosen with
/// probability p.
inline double subset_dl(double t, double k, double p) {
  double bits = 0.0;
  if (k > 0.0) bits -= k * log2_safe(p);
  if (t - k > 0.0) bits -= (t - k) * log2_safe(1.0 - p);
  return bits;
}

inline double theory_dl(std::size_t conditions, double possible) {
  const double k = static_cast<double>(conditions);
  double bits = log2_safe(k);
  if (k > 1.0) bits += 2.0 * log2_safe(bits);
  bits += subset_dl(possible, k, k / possible);
  return 0.5 * bits;
}

inline double data_dl(double fp_share, double cover, double uncover, double fp, double fn) {
  const double total = std::log2(cover + uncover + 1.0);
  double cover_bits = 0.0;
  double uncover_bits = 0.0;
  if (cover > uncover) {
    const double expected = fp_share * (fp + fn);
    cover_bits = subset_dl(cover, fp, expected / cover);
    uncover_bits = uncover > 0.0 ? subset_dl(uncover, fn, fn / uncover) : 0.0;
  } else {
    const double expected = (1.0 - fp_share) * (fp + fn);
    cover_bits = cover > 0.0 ? subset_dl(cover, fp, fp / cover) : 0.0;
    uncover_bits = subset_dl(uncover, fn, expected / uncover);
  }
  return total + cover_bits + uncover_bits;
}

inline double foil_gain(double p0, double n0, double p1, double n1) {
  if (p1 <= 0.0) return -std::numeric_limits<double>::infinity();
  return p1 * (std::log2(p1 / (p1 + n1)) - std::log2(p0 / (p0 + n0)));
}

inline std::vector<Condition> grow_rule(const Dataset& data, const std::vector<std::size_t>& grow, int positive) {
  std::vector<Condition> rule;
  std::vector<std::size_t> covered = grow;
  std::vector<bool> used(data.features(), false);
  for (;;) {
    double p0 = 0.0;
    double n0 = 0.0;
    for (std::size_t i : covered) (data.y[i] == positive ? p0 : n0) += 1.0;
    if (n0 == 0.0 || p0 == 0.0) break;
    double best = 0.0;
    std::optional<Condition> pick;
    for (std::size_t f = 0; f < data.features(); ++f) {
      if (used[f]) continue;
      std::vector<std::array<double, 2>> counts(data.cardinality[f], {0.0, 0.0});
      for (std::size_t i : covered) ++counts[static_cast<std::size_t>(data.x[i][f])][data.y[i] == positive ? 0 : 1];
      for (std::size_t c = 0; c < counts.size(); ++c) {
        const double gain = foil_gain(p0, n0, counts[c][0], counts[c][1]);
        if (gain > best + 1e-12) {
          best = gain;
          pick = Condition{f, static_cast<int>(c)};
        }
      }
    }
    if (!pick) break;
    rule.push_back(*pick);
    used[pick->feature] = true;
    std::erase_if(covered, [&](std::size_t i) { return data.x[i][pick->feature] != pick->category; });
  }
  return rule;
}

/// Keeps the prefix maximising (p - n) / (p + n) on the prune set; ties keep
/// the longer rule.
inline std::vector<Condition> prune_rule(const Dataset& data, std::vector<Condition> rule,
                                         const std::vector<std::size_t>& prune, int positive) {
  if (prune.empty() || rule.size() <= 1) return rule;
  double best = -std::numeric_limits<double>::infinity();
  std::size_t keep = rule.size();
  for (std::size_t len = rule.size(); len >= 1; --len) {
    double p = 0.0;
    double n = 0.0;
    for (std::size_t i : prune) {
      if (matches(std::span(rule).first(len), data.x[i])) (data.y[i] == positive ? p : n) += 1.0;
    }
    if (p + n == 0.0) continue;
    const double value = (p - n) / (p + n);
    if (value > best) {
      best = value;
      keep = len;
    }
  }
  rule.resize(keep);
  return rule;
}

}  // namespace detail

/// Learns rules for the minority class (ties: disagree) one at a time on the
/// vectors not yet covered. Each rule is grown on a stratified 2/3 split by
/// FOIL gain and pruned on the remaining 1/3. Rule learning stops when no
/// positives remain, a rule covers no positives, or the total description
/// length exceeds the best seen by more than `mdl_slack` bits; rules added
/// after the minimum description length are then dropped.
inline RipperModel ripper(const Dataset& data, std::uint64_t seed, const RipperParams& params = {}) {
  if (params.require_trainable) data.require_trainable();
  RipperModel model;
  const std::size_t ones = data.count(kDisagree);
  const std::size_t zeros = data.count(kAgree);
  model.positive = ones <= zeros ? kDisagree : kAgree;
  const int negative = 1 - model.positive;
  model.default_label = negative;
  if (data.size() == 0 || ones == 0 || zeros == 0) {
    model.default_label = ones > 0 ? kDisagree : kAgree;
    return model;
  }

  double possible = 0.0;
  for (std::size_t c : data.cardinality) possible += static_cast<double>(c);

  std::vector<bool> covered(data.size(), false);
  auto total_dl = [&](double theory) {
    double cover = 0.0;
    double fp = 0.0;
    double fn = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (covered[i]) {
        cover += 1.0;
        fp += data.y[i] != model.positive;
      } else {
        fn += data.y[i] == model.positive;
      }
    }
    return theory + detail::data_dl(params.fp_share, cover, static_cast<double>(data.size()) - cover, fp, fn);
  };

  double theory = 0.0;
  double best_dl = total_dl(0.0);
  std::size_t best_count = 0;
  for (std::size_t round = 0;; ++round) {
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!covered[i]) (data.y[i] == model.positive ? pos : neg).push_back(i);
    }
    if (pos.empty()) break;

    Rng rng(mix_seed(seed, hash_tag("ripper-split"), round));
    rng.shuffle(pos);
    rng.shuffle(neg);
    std::vector<std::size_t> grow;
    std::vector<std::size_t> prune;
    auto split = [&](const std::vector<std::size_t>& items) {
      const auto g = static_cast<std::size_t>(std::ceil(params.grow_fraction * static_cast<double>(items.size())));
      grow.insert(grow.end(), items.begin(), items.begin() + static_cast<std::ptrdiff_t>(g));
      prune.insert(prune.end(), items.begin() + static_cast<std::ptrdiff_t>(g), items.end());
    };
    split(pos);
    split(neg);
    std::sort(grow.begin(), grow.end());
    std::sort(prune.begin(), prune.end());

    auto rule = detail::grow_rule(data, grow, model.positive);
    if (rule.empty()) break;
    rule = detail::prune_rule(data, std::move(rule), prune, model.positive);

    std::size_t new_pos = 0;
    for (std::size_t i : pos) new_pos += matches(rule, data.x[i]);
    if (new_pos == 0) break;

    for (std::size_t i = 0; i < data.size(); ++i) {
      if (!covered[i] && matches(rule, data.x[i])) covered[i] = true;
    }
    theory += detail::theory_dl(rule.size(), possible);
    model.rules.push_back(std::move(rule));
    const double dl = total_dl(theory);
    model.description_lengths.push_back(dl);
    if (dl < best_dl) {
      best_dl = dl;
      best_count = model.rules.size();
    }
    if (dl > best_dl + params.mdl_slack) break;
  }
  model.rules.resize(best_count);
  model.description_lengths.resize(best_count);

  std::array<std::size_t, 2> rest{};
  for (std::size_t i = 0; i < data.size(); ++i) {
    bool hit = false;
    for (const auto& r : model.rules) hit = hit || matches(r, data.x[i]);
    if (!hit) ++rest[static_cast<std::size_t>(data.y[i])];
  }
  model.default_label = rest[static_cast<std::size_t>(model.positive)] > rest[static_cast<std::size_t>(negative)]
                            ? model.positive
                            : negative;
  return model;
}

// ---------------------------------------------------------------------------
// Rules over domain attributes

/// `attribute = value` when one code is listed, `attribute in {...}` otherwise.
struct Predicate {
  std::size_t attribute = 0;
  std::vector<int> codes;

  bool holds(std::span<const int> values) const {
    return std::find(codes.begin(), codes.end(), values[attribute]) != codes.end();
  }

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

struct ConfirmationSample {
  std::string scenario_id;
  int label = 0;
};

struct Rule {
  std::vector<Predicate> antecedent;  // empty for the default rule
  int label = kAgree;
  bool is_default = false;

  // Training statistics: vectors matching the antecedent (for the default
  // rule, matching no other rule) and the fraction carrying `label`.
  std::size_t support = 0;
  double accuracy = 0.0;
  Interval ci;

  // Confirmation.
  std::vector<ConfirmationSample> samples;
  std::size_t confirm_n = 0;
  std::size_t confirm_k = 0;
  double confirmed_accuracy = 0.0;
  Interval confirmed_ci;
  bool confirmed = false;         // CI width reached the target
  bool budget_exhausted = false;  // stopped at the sample budget

  bool matches(std::span<const int> values) const {
    for (const auto& p : antecedent) {
      if (!p.holds(values)) return false;
    }
    return true;
  }
};

struct RuleSet {
  std::vector<Rule> rules;  // learned rules, then the default rule

  /// First-match label.
  int predict(std::span<const int> values) const {
    for (const auto& r : rules) {
      if (r.is_default || r.matches(values)) return r.label;
    }
    throw Error("rule set has no default rule");
  }

  /// True when the scenario satisfies some non-default rule other than `skip`.
  bool matches_other(std::span<const int> values, std::size_t skip) const {
    for (std::size_t i = 0; i < rules.size(); ++i) {
      if (i != skip && !rules[i].is_default && rules[i].matches(values)) return true;
    }
    return false;
  }
};

inline std::string predicate_text(const DomainModel& dm, const Predicate& p) {
  const auto& def = dm.attribute(p.attribute);
  if (p.codes.size() == 1) return def.name + " = " + def.format(p.codes.front());
  std::string out = def.name + " in {";
  for (std::size_t i = 0; i < p.codes.size(); ++i) out += (i ? ", " : "") + def.format(p.codes[i]);
  return out + "}";
}

inline std::string antecedent_text(const DomainModel& dm, const Rule& r) {
  if (r.antecedent.empty()) return "(default)";
  std::string out;
  for (std::size_t i = 0; i < r.antecedent.size(); ++i) out += (i ? " and " : "") + predicate_text(dm, r.antecedent[i]);
  return out;
}

/// Converts learned conditions to domain predicates and computes the
/// training support and accuracy of every rule, including the default.
/// `values` holds the raw scenario values behind each dataset row.
inline RuleSet to_rule_set(const RipperModel& model, const Encoding& encoding,
                           std::span<const std::vector<int>> values, std::span<const int> labels) {
  if (values.size() != labels.size()) throw DataError("values and labels differ in length");
  RuleSet set;
  for (const auto& conditions : model.rules) {
    Rule r;
    r.label = model.positive;
    for (const auto& c : conditions) {
      const auto& f = encoding.feature(c.feature);
      r.antecedent.push_back(Predicate{f.attribute, f.codes.at(static_cast<std::size_t>(c.category))});
    }
    std::sort(r.antecedent.begin(), r.antecedent.end(),
              [](const Predicate& a, const Predicate& b) { return a.attribute < b.attribute; });
    set.rules.push_back(std::move(r));
  }
  Rule fallback;
  fallback.is_default = true;
  fallback.label = model.default_label;
  set.rules.push_back(std::move(fallback));

  for (std::size_t k = 0; k < set.rules.size(); ++k) {
    auto& r = set.rules[k];
    std::size_t hit = 0;
    std::size_t right = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const bool m = r.is_default ? !set.matches_other(values[i], k) : r.matches(values[i]);
      if (!m) continue;
      ++hit;
      right += labels[i] == r.label;
    }
    r.support = hit;
    r.accuracy = hit ? static_cast<double>(right) / static_cast<double>(hit) : 0.0;
    r.ci = hit ? wilson_ci(right, hit) : Interval{};
  }
  return set;
}

}  // namespace lanecheck
