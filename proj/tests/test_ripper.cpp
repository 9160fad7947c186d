#include <gtest/gtest.h>

#include <set>

#include "lanecheck/ripper.hpp"

using namespace lanecheck;

namespace {

// Every combination of the given cardinalities, `copies` times over.
Dataset exhaustive(const std::vector<std::size_t>& cardinality, std::size_t copies,
                   const std::function<int(const std::vector<int>&)>& label) {
  Dataset d;
  d.cardinality = cardinality;
  std::size_t total = 1;
  for (std::size_t c : cardinality) total *= c;
  for (std::size_t rep = 0; rep < copies; ++rep) {
    for (std::size_t code = 0; code < total; ++code) {
      std::vector<int> row;
      std::size_t rest = code;
      for (std::size_t c : cardinality) {
        row.push_back(static_cast<int>(rest % c));
        rest /= c;
      }
      const int y = label(row);
      d.add(std::move(row), y);
    }
  }
  return d;
}

int planted(const std::vector<int>& x) { return x[0] == 1 && x[1] == 0 ? 1 : 0; }

std::set<std::pair<std::size_t, int>> as_set(const std::vector<Condition>& rule) {
  std::set<std::pair<std::size_t, int>> out;
  for (const auto& c : rule) out.insert({c.feature, c.category});
  return out;
}

Dataset sample_planted(const std::vector<std::size_t>& cardinality, std::size_t n, double noise, std::uint64_t seed) {
  Dataset d;
  d.cardinality = cardinality;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> row;
    for (std::size_t c : cardinality) row.push_back(static_cast<int>(rng.index(c)));
    int y = planted(row);
    if (rng.bernoulli(noise)) y = 1 - y;
    d.add(std::move(row), y);
  }
  return d;
}

}  // namespace

TEST(DescriptionLength, SubsetBits) {
  // Choosing k of t with p = k / t costs t times the binary entropy.
  const double h = -(0.25 * std::log2(0.25) + 0.75 * std::log2(0.75));
  EXPECT_NEAR(detail::subset_dl(8, 2, 0.25), 8 * h, 1e-12);
  EXPECT_EQ(detail::subset_dl(8, 0, 0.0), 0.0);
  EXPECT_EQ(detail::subset_dl(8, 8, 1.0), 0.0);
}

TEST(DescriptionLength, FoilGain) {
  // Rule covering 4 positives and no negatives out of 8 + 8.
  EXPECT_NEAR(detail::foil_gain(8, 8, 4, 0), 4.0, 1e-12);
  EXPECT_EQ(detail::foil_gain(8, 8, 4, 4), 0.0);
}

TEST(Ripper, RecoversPlantedConjunctionExactly) {
  for (auto cardinality : std::vector<std::vector<std::size_t>>{{2, 2, 2}, {2, 2, 3, 2}, {3, 2, 2, 2, 2}}) {
    for (std::size_t copies : {1, 2, 3}) {
      auto d = exhaustive(cardinality, copies, planted);
      if (d.size() < 10) continue;
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto m = ripper(d, seed);
        EXPECT_EQ(m.positive, kDisagree);
        ASSERT_EQ(m.rules.size(), 1u) << "copies " << copies << " seed " << seed;
        EXPECT_EQ(as_set(m.rules[0]), (std::set<std::pair<std::size_t, int>>{{0, 1}, {1, 0}}));
        EXPECT_EQ(m.default_label, kAgree);
        for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(m.predict(d.x[i]), d.y[i]);
      }
    }
  }
}

TEST(Ripper, NoisyLabelsGeneraliseOnHeldOut) {
  const std::vector<std::size_t> cardinality{2, 2, 2, 2, 2, 2};
  double total = 0.0;
  double worst = 1.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto train = sample_planted(cardinality, 200, 0.1, seed);
    auto test = sample_planted(cardinality, 1000, 0.0, seed + 1000);
    auto m = ripper(train, seed);
    std::size_t right = 0;
    for (std::size_t i = 0; i < test.size(); ++i) right += m.predict(test.x[i]) == test.y[i];
    const double acc = static_cast<double>(right) / static_cast<double>(test.size());
    total += acc;
    worst = std::min(worst, acc);
  }
  EXPECT_GE(worst, 0.85);
  EXPECT_GE(total / 20.0, 0.9);
}

TEST(Ripper, MinorityClassIsPositive) {
  auto d = exhaustive({2, 2, 2}, 2, [](const std::vector<int>& x) { return x[0] == 1 && x[1] == 0 ? 0 : 1; });
  auto m = ripper(d, 1);
  EXPECT_EQ(m.positive, kAgree);
  EXPECT_EQ(m.default_label, kDisagree);
  ASSERT_EQ(m.rules.size(), 1u);
}

TEST(Ripper, DegenerateData) {
  auto single = exhaustive({2, 2, 2}, 2, [](const std::vector<int>&) { return 0; });
  EXPECT_THROW(ripper(single, 1), DataError);
  RipperParams bypass;
  bypass.require_trainable = false;
  auto m = ripper(single, 1, bypass);
  EXPECT_TRUE(m.rules.empty());
  EXPECT_EQ(m.default_label, kAgree);
}

TEST(Ripper, DeterministicForSeed) {
  const std::vector<std::size_t> cardinality{3, 3, 2, 2, 2};
  auto d = sample_planted(cardinality, 150, 0.15, 3);
  auto a = ripper(d, 9);
  auto b = ripper(d, 9);
  EXPECT_EQ(a.rules, b.rules);
  EXPECT_EQ(a.default_label, b.default_label);
}

TEST(RuleSet, FirstMatchIsTotalAndStatsAreOrderIndependent) {
  auto dm = DomainModel("tiny",
                        {AttributeDef::enumeration("A", AttributeGroup::Road, {"x", "y"}),
                         AttributeDef::enumeration("B", AttributeGroup::Road, {"p", "q", "r"}),
                         AttributeDef::integer("C", AttributeGroup::Vehicle, 10, 50, 5)},
                        {});
  Encoding enc(dm);
  ASSERT_EQ(enc.feature(2).cardinality(), 4u);
  EXPECT_EQ(enc.feature(2).codes[0], (std::vector<int>{10, 15, 20}));
  EXPECT_EQ(enc.feature(2).codes[3], (std::vector<int>{45, 50}));
  EXPECT_EQ(enc.category_text(dm, 2, 0), "10..20");

  RipperModel m;
  m.positive = kDisagree;
  m.rules = {{{0, 1}}, {{1, 0}, {2, 3}}};
  m.default_label = kAgree;
  std::vector<std::vector<int>> values;
  std::vector<int> labels;
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    auto s = sample_scenario(dm, rng.next());
    values.push_back(s.values);
    labels.push_back(rng.bernoulli(0.4) ? 1 : 0);
  }
  auto set = to_rule_set(m, enc, values, labels);
  ASSERT_EQ(set.rules.size(), 3u);
  EXPECT_EQ(antecedent_text(dm, set.rules[0]), "A = y");
  EXPECT_EQ(antecedent_text(dm, set.rules[1]), "B = p and C in {45, 50}");
  EXPECT_TRUE(set.rules[2].is_default);

  std::size_t covered_by_some = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    EXPECT_NO_THROW(set.predict(values[i]));
    covered_by_some += set.matches_other(values[i], 2);
  }
  // Support counts antecedent matches regardless of order; the default rule
  // takes what no other rule matches.
  EXPECT_EQ(set.rules[2].support, values.size() - covered_by_some);
  for (const auto& r : set.rules) {
    std::size_t hit = 0;
    std::size_t right = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (r.is_default ? set.matches_other(values[i], 2) : !r.matches(values[i])) continue;
      ++hit;
      right += labels[i] == r.label;
    }
    EXPECT_EQ(r.support, hit);
    EXPECT_EQ(r.accuracy, static_cast<double>(right) / static_cast<double>(hit));
    EXPECT_GE(r.ci.low, 0.0);
    EXPECT_LE(r.ci.high, 1.0);
  }
}
