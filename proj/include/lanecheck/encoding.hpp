#pragma once

// Categorical encoding of scenarios for the learners. Enumerations keep one
// category per value; integer attributes with more than four values are cut
// into quartile bins over their domain grid.

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "domain.hpp"
#include "error.hpp"
#include "offline.hpp"

namespace lanecheck {

/// Binary labels used by the learners.
inline constexpr int kAgree = 0;
inline constexpr int kDisagree = 1;

inline int label_code(Agreement a) { return a == Agreement::Agree ? kAgree : kDisagree; }
inline std::string_view label_name(int label) { return label == kAgree ? "agree" : "disagree"; }

struct Feature {
  std::size_t attribute = 0;            // index in the domain model
  std::string name;
  std::vector<std::vector<int>> codes;  // domain codes in each category

  std::size_t cardinality() const noexcept { return codes.size(); }
  bool binned() const noexcept;
};

inline bool Feature::binned() const noexcept {
  for (const auto& c : codes) {
    if (c.size() > 1) return true;
  }
  return false;
}

class Encoding {
 public:
  Encoding() = default;

  /// Encodes the listed attributes (all when empty), in model order.
  Encoding(const DomainModel& dm, std::vector<std::size_t> attributes = {}) {
    if (attributes.empty()) {
      for (std::size_t i = 0; i < dm.size(); ++i) attributes.push_back(i);
    }
    std::sort(attributes.begin(), attributes.end());
    attributes.erase(std::unique(attributes.begin(), attributes.end()), attributes.end());
    for (std::size_t a : attributes) {
      const auto& def = dm.attribute(a);
      Feature f;
      f.attribute = a;
      f.name = def.name;
      const std::size_t size = def.domain_size();
      const std::size_t bins = def.is_enumeration() ? size : std::min<std::size_t>(size, 4);
      f.codes.resize(bins);
      for (std::size_t k = 0; k < size; ++k) f.codes[k * bins / size].push_back(def.code_at(k));
      features_.push_back(std::move(f));
    }
  }

  const std::vector<Feature>& features() const noexcept { return features_; }
  std::size_t size() const noexcept { return features_.size(); }
  const Feature& feature(std::size_t f) const { return features_.at(f); }

  std::vector<std::size_t> cardinalities() const {
    std::vector<std::size_t> out;
    for (const auto& f : features_) out.push_back(f.cardinality());
    return out;
  }

  int category(std::size_t f, int code) const {
    const auto& codes = features_.at(f).codes;
    for (std::size_t c = 0; c < codes.size(); ++c) {
      if (std::find(codes[c].begin(), codes[c].end(), code) != codes[c].end()) return static_cast<int>(c);
    }
    throw DomainError("value " + std::to_string(code) + " is outside the domain of " + features_[f].name);
  }

  std::vector<int> encode(std::span<const int> values) const {
    std::vector<int> row;
    row.reserve(features_.size());
    for (std::size_t f = 0; f < features_.size(); ++f) row.push_back(category(f, values[features_[f].attribute]));
    return row;
  }

  /// Category text: the value itself, or "lo..hi" for a bin.
  std::string category_text(const DomainModel& dm, std::size_t f, int c) const {
    const auto& feat = features_.at(f);
    const auto& def = dm.attribute(feat.attribute);
    const auto& codes = feat.codes.at(static_cast<std::size_t>(c));
    if (codes.size() == 1) return def.format(codes.front());
    return def.format(codes.front()) + ".." + def.format(codes.back());
  }

 private:
  std::vector<Feature> features_;
};

/// Encoded vectors with binary labels.
struct Dataset {
  std::vector<std::size_t> cardinality;  // categories per feature
  std::vector<std::vector<int>> x;
  std::vector<int> y;

  std::size_t size() const noexcept { return y.size(); }
  std::size_t features() const noexcept { return cardinality.size(); }

  std::size_t count(int label) const {
    return static_cast<std::size_t>(std::count(y.begin(), y.end(), label));
  }

  void add(std::vector<int> row, int label) {
    if (row.size() != cardinality.size()) throw DataError("vector has the wrong number of features");
    for (std::size_t f = 0; f < row.size(); ++f) {
      if (row[f] < 0 || static_cast<std::size_t>(row[f]) >= cardinality[f]) {
        throw DataError("category out of range in feature " + std::to_string(f));
      }
    }
    if (label != kAgree && label != kDisagree) throw DataError("labels must be 0 or 1");
    x.push_back(std::move(row));
    y.push_back(label);
  }

  /// Pre-condition shared by the learners.
  void require_trainable(std::size_t min_vectors = 10) const {
    if (size() < min_vectors) {
      throw DataError("need at least " + std::to_string(min_vectors) + " vectors, got " + std::to_string(size()));
    }
    if (count(kAgree) == 0 || count(kDisagree) == 0) throw DataError("training data has a single label");
  }
};

}  // namespace lanecheck
