// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lanecheck/confirm.hpp"
#include "lanecheck/default_model.hpp"
#include "lanecheck/experiments.hpp"
#include "lanecheck/forest.hpp"
#include "lanecheck/ripper.hpp"
#include "random_models.hpp"

namespace fs = std::filesystem;
using namespace lanecheck;

namespace {

const std::string kModels = std::string(LANECHECK_SOURCE_DIR) + "/models/";

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

int failures = 0;

void run(int number, const char* title, double limit_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (elapsed >= limit_s) {
    if (o.pass) o.detail = "too slow";
    o.pass = false;
  }
  failures += !o.pass;
  std::printf("criterion %2d: %s  %s [%.2f s, limit %.0f s]%s%s\n", number, o.pass ? "PASS" : "FAIL", title, elapsed,
              limit_s, o.detail.empty() ? "" : "  ", o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> directory_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return out;
}

DomainModel straight_model(int min_length, int max_length, int step) {
  auto j = nlohmann::json::parse(read_file(kModels + "straight.json"));
  for (auto& a : j["attributes"]) {
    if (a["name"] == "Road.length") a["range"] = {{"min", min_length}, {"max", max_length}, {"step", step}};
  }
  return domain_from_json(j);
}

// ---------------------------------------------------------------------------

Outcome metrics() {
  Outcome o;
  Rng rng(11);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng.index(400);
    std::vector<double> labels(n);
    std::vector<double> predicted(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = rng.uniform(-1.0, 1.0);
      predicted[i] = rng.bernoulli(0.1) ? labels[i] : rng.uniform(-1.0, 1.0);
    }
    long double abs_sum = 0.0L;
    long double sq_sum = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      const long double e = static_cast<long double>(labels[i]) - predicted[i];
      abs_sum += e < 0 ? -e : e;
      sq_sum += e * e;
    }
    const double mae = static_cast<double>(abs_sum / n);
    const double rmse = static_cast<double>(std::sqrt(sq_sum / n));
    const auto r = prediction_error(labels, predicted);
    o.require(std::abs(r.mae - mae) <= 1e-12, fmt("MAE off by %.3g", std::abs(r.mae - mae)));
    o.require(std::abs(r.rmse - rmse) <= 1e-12, fmt("RMSE off by %.3g", std::abs(r.rmse - rmse)));
    o.require(r.mae <= r.rmse, "MAE > RMSE");
  }
  return o;
}

Outcome matcher() {
  Outcome o;
  Rng rng(12);
  for (int t = 0; t < 200; ++t) {
    const std::size_t real_n = 1 + rng.index(50);
    const std::size_t sim_n = 1 + rng.index(real_n);
    // Coarse values on half the pairs so that ties occur.
    const bool coarse = t % 2 == 0;
    auto draw = [&] { return coarse ? static_cast<double>(rng.index(3)) * 0.5 - 0.5 : rng.uniform(-1.0, 1.0); };
    std::vector<double> sim(sim_n);
    std::vector<double> real(real_n);
    for (auto& v : sim) v = draw();
    for (auto& v : real) v = draw();
    std::vector<double> means;
    for (std::size_t x = 0; x + sim_n <= real_n; ++x) {
      double s = 0.0;
      for (std::size_t j = 0; j < sim_n; ++j) s += std::abs(sim[j] - real[x + j]);
      means.push_back(s / static_cast<double>(sim_n));
    }
    const double best = *std::min_element(means.begin(), means.end());
    const auto m = match_subsequence(sim, real, 0.1, static_cast<std::uint64_t>(t));
    o.require(std::abs(m.mean_diff - best) <= 1e-12, "minimum differs from exhaustive scan");
    o.require(std::abs(means[m.x] - best) <= 1e-12, "chosen offset is not a minimiser");
    o.require(m.comparable == (m.mean_diff <= 0.1), "comparability flag wrong");
  }
  const std::vector<double> sim{0.1, 0.1};
  const std::vector<double> real{0.0, 0.0, 0.0};
  o.require(match_subsequence(sim, real, 0.1).comparable, "meanDiff = epsilon not comparable");
  const std::vector<double> quarter{0.5};
  const std::vector<double> base{0.25};
  o.require(match_subsequence(quarter, base, 0.25).comparable, "meanDiff = 0.25 = epsilon not comparable");
  return o;
}

Outcome accumulation() {
  Outcome o;
  const auto dm = straight_model(500, 500, 100);
  const auto s = complete_partial(dm, partial_from_map(dm, {{"Vehicle.speed", "30"}}), 3);
  const auto controller = Controller::constant(0.05);
  const auto run = run_online(dm, s, controller);
  const double radius = turning_radius(0.05);
  const double predicted = radius * std::acos(1.0 - 1.5 / radius);
  o.require(std::abs(radius - 132.9) < 0.05, fmt("R = %.2f", radius));
  o.require(std::abs(predicted - 20.0) < 0.05, fmt("arc prediction %.2f m", predicted));
  const double v = 30.0 / 3.6;
  double travelled = -1.0;
  for (const auto& step : run.trace.steps) {
    if (step.deviation >= 1.5) {
      travelled = static_cast<double>(step.state.step) * v * 0.05;
      break;
    }
  }
  o.require(run.result.mdcl_raw >= 1.5, fmt("mdclRaw %.3f", run.result.mdcl_raw));
  o.require(travelled >= 20.0 && travelled <= 30.0, fmt("departure after %.2f m", travelled));
  o.require(std::abs(travelled - predicted) <= v * 0.05, fmt("departure %.2f m vs arc %.2f m", travelled, predicted));
  const auto ev = evaluate_scenario(dm, s, controller);
  o.require(ev.offline.mae == 0.05 && ev.offline.acceptable, fmt("offline MAE %.4f", ev.offline.mae));
  o.require(ev.record.label == Agreement::Disagree, "not classified disagree");
  if (o.pass) o.detail = fmt("departure at %.2f m, arc %.2f m", travelled, predicted);
  return o;
}

Outcome asymmetry() {
  Outcome o;
  const auto dm = straight_model(25, 525, 100);
  const auto ca = generate_covering_array(dm, 2, 4);
  std::size_t runs = 0;
  for (double b : {0.10, 0.15, 0.20}) {
    std::vector<Controller> controllers{
        Controller::constant(b),
        controller_from_json(nlohmann::json{{"kind", "degraded"}, {"name", "bias"}, {"bias", b}}, dm)};
    for (const auto& c : controllers) {
      std::vector<AgreementRecord> records;
      for (const auto& s : ca.scenarios) records.push_back(evaluate_scenario(dm, s, c).record);
      const auto t = contingency(records);
      runs += t.total();
      o.require(t.online_bad_offline_bad == t.total(),
                c.name() + fmt(" b=%.2f: only %.0f runs in the bad/bad cell", b,
                               static_cast<double>(t.online_bad_offline_bad)));
      o.require(t.online_ok_offline_bad == 0, "run in the near-empty cell");
    }
  }
  if (o.pass) o.detail = std::to_string(runs) + " runs, all offline- and online-unacceptable";
  return o;
}

// Independent feasible-tuple oracle: enumerate every full assignment.
bool audit_coverage(const DomainModel& dm, int strength, const std::vector<Scenario>& rows, std::string& why) {
  const std::size_t k = dm.size();
  std::vector<std::size_t> sizes(k);
  for (std::size_t i = 0; i < k; ++i) sizes[i] = dm.attribute(i).domain_size();
  std::vector<std::vector<std::size_t>> subsets;
  std::vector<std::size_t> pick;
  std::function<void(std::size_t)> choose = [&](std::size_t from) {
    if (pick.size() == static_cast<std::size_t>(strength)) {
      subsets.push_back(pick);
      return;
    }
    for (std::size_t i = from; i < k; ++i) {
      pick.push_back(i);
      choose(i + 1);
      pick.pop_back();
    }
  };
  choose(0);
  auto key = [&](const std::vector<std::size_t>& sub, const std::vector<std::size_t>& pos) {
    std::size_t code = 0;
    for (std::size_t a : sub) code = code * sizes[a] + pos[a];
    return code;
  };
  std::vector<std::vector<char>> feasible(subsets.size());
  std::vector<std::vector<char>> covered(subsets.size());
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    std::size_t n = 1;
    for (std::size_t a : subsets[s]) n *= sizes[a];
    feasible[s].assign(n, 0);
    covered[s].assign(n, 0);
  }
  std::vector<std::size_t> pos(k, 0);
  std::vector<int> values(k);
  for (bool done = false; !done;) {
    for (std::size_t i = 0; i < k; ++i) values[i] = dm.attribute(i).code_at(pos[i]);
    if (is_valid(dm, values)) {
      for (std::size_t s = 0; s < subsets.size(); ++s) feasible[s][key(subsets[s], pos)] = 1;
    }
    done = true;
    for (std::size_t i = 0; i < k; ++i) {
      if (++pos[i] < sizes[i]) {
        done = false;
        break;
      }
      pos[i] = 0;
    }
  }
  for (const auto& row : rows) {
    if (!is_valid(dm, row.values)) {
      why = dm.name() + ": row " + row.id + " violates a constraint";
      return false;
    }
    for (std::size_t i = 0; i < k; ++i) pos[i] = *dm.attribute(i).position_of(row.values[i]);
    for (std::size_t s = 0; s < subsets.size(); ++s) covered[s][key(subsets[s], pos)] = 1;
  }
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    for (std::size_t c = 0; c < feasible[s].size(); ++c) {
      if (feasible[s][c] && !covered[s][c]) {
        why = dm.name() + ": feasible " + std::to_string(strength) + "-tuple not covered";
        return false;
      }
    }
  }
  return true;
}

Outcome covering() {
  Outcome o;
  std::vector<DomainModel> models;
  for (std::uint64_t seed = 0; seed < 100; ++seed) models.push_back(testgen::random_small_model(seed));
  models.push_back(default_domain());
  std::size_t arrays = 0;
  for (const auto& dm : models) {
    for (int n = 1; n <= 3 && n <= static_cast<int>(dm.size()); ++n) {
      const auto ca = generate_covering_array(dm, n, mix_seed(7, static_cast<std::uint64_t>(n)));
      const auto report = coverage_report(dm, ca.scenarios, n);
      o.require(report.missing.empty() && report.covered == report.feasible_total,
                dm.name() + ": auditor reports missing tuples");
      std::string why;
      o.require(audit_coverage(dm, n, ca.scenarios, why), why);
      ++arrays;
    }
  }
  if (o.pass) o.detail = std::to_string(arrays) + " arrays at 100% feasible-tuple coverage";
  return o;
}

Dataset planted_pair(std::uint64_t seed) {
  Dataset d;
  d.cardinality.assign(12, 3);
  Rng rng(seed);
  for (int i = 0; i < 150; ++i) {
    std::vector<int> row;
    for (std::size_t c : d.cardinality) row.push_back(static_cast<int>(rng.index(c)));
    const int y = row[3] == 0 || row[8] == 2 ? 1 : 0;
    d.add(std::move(row), y);
  }
  return d;
}

Outcome importance() {
  Outcome o;
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto d = planted_pair(1000 + seed);
    const auto forest = train_forest(d, {}, seed);
    const auto imps = permutation_importance(forest, d, 20, seed);
    std::vector<std::size_t> order(imps.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return imps[a].mean > imps[b].mean; });
    hits += std::set<std::size_t>{order[0], order[1]} == std::set<std::size_t>{3, 8};
  }
  o.require(hits >= 95, std::to_string(hits) + "/100 planted pairs ranked top two");

  auto d = planted_pair(77);
  for (auto& row : d.x) row[5] = 1;
  const auto forest = train_forest(d, {}, 77);
  const auto imps = permutation_importance(forest, d, 20, 77);
  o.require(imps[5].mean == 0.0 && imps[5].std == 0.0, fmt("constant attribute importance %.3g", imps[5].mean));
  if (o.pass) o.detail = std::to_string(hits) + "/100 top-two recoveries";
  return o;
}

int planted_conjunction(const std::vector<int>& x) { return x[0] == 1 && x[1] == 0 ? 1 : 0; }

Outcome rules() {
  Outcome o;
  const std::set<std::pair<std::size_t, int>> expected{{0, 1}, {1, 0}};
  for (auto cardinality : std::vector<std::vector<std::size_t>>{{2, 2, 2, 2}, {2, 2, 3, 2}, {3, 2, 2, 2, 2}}) {
    for (std::size_t copies : {1, 2}) {
      Dataset d;
      d.cardinality = cardinality;
      std::size_t total = 1;
      for (std::size_t c : cardinality) total *= c;
      for (std::size_t rep = 0; rep < copies; ++rep) {
        for (std::size_t code = 0; code < total; ++code) {
          std::vector<int> row;
          for (std::size_t rest = code; std::size_t c : cardinality) {
            row.push_back(static_cast<int>(rest % c));
            rest /= c;
          }
          const int y = planted_conjunction(row);
          d.add(std::move(row), y);
        }
      }
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto m = ripper(d, seed);
        std::set<std::pair<std::size_t, int>> got;
        if (m.rules.size() == 1) {
          for (const auto& c : m.rules[0]) got.insert({c.feature, c.category});
        }
        o.require(m.positive == 1 && got == expected, "planted conjunction not recovered exactly");
      }
    }
  }
  auto sample = [](std::size_t n, double noise, std::uint64_t seed) {
    Dataset d;
    d.cardinality.assign(6, 2);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<int> row;
      for (std::size_t c : d.cardinality) row.push_back(static_cast<int>(rng.index(c)));
      int y = planted_conjunction(row);
      if (rng.bernoulli(noise)) y = 1 - y;
      d.add(std::move(row), y);
    }
    return d;
  };
  double worst = 1.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto train = sample(200, 0.1, seed);
    const auto test = sample(1000, 0.0, seed + 1000);
    const auto m = ripper(train, seed);
    std::size_t right = 0;
    for (std::size_t i = 0; i < test.size(); ++i) right += m.predict(test.x[i]) == test.y[i];
    worst = std::min(worst, static_cast<double>(right) / static_cast<double>(test.size()));
  }
  o.require(worst >= 0.85, fmt("worst held-out accuracy %.3f", worst));
  if (o.pass) o.detail = fmt("worst held-out accuracy %.3f", worst);
  return o;
}

Outcome wilson() {
  Outcome o;
  const auto ci = wilson_ci(70, 100);
  o.require(std::abs(ci.low - 0.604) <= 1e-3 && std::abs(ci.high - 0.781) <= 1e-3,
            fmt("(70, 100) -> (%.4f, %.4f)", ci.low, ci.high));
  std::size_t first = 0;
  for (std::size_t n = 2; first == 0; ++n) {
    if (wilson_ci(n / 2, n).width() < 0.2) first = n;
  }
  o.require(first >= 93 && first <= 100, "p = 0.5 first below 0.2 at n = " + std::to_string(first));

  const auto dm = default_domain();
  auto make = [&](int label) {
    RuleSet set;
    Rule r;
    r.antecedent = {Predicate{dm.index_of("Weather.type"), {1}}};
    r.label = label;
    set.rules.push_back(r);
    Rule d;
    d.is_default = true;
    d.label = 1 - label;
    set.rules.push_back(d);
    return set;
  };
  auto alternating = [](const Scenario& s) { return static_cast<int>(std::stoul(s.id.substr(s.id.find('-') + 1)) % 2); };

  auto constant = make(kDisagree);
  confirm_rule(constant, 0, dm, [](const Scenario&) { return kDisagree; }, {}, 1);
  const auto& c = constant.rules[0];
  o.require(c.confirmed && !c.budget_exhausted && c.confirmed_ci.width() < 0.2, "constant oracle not confirmed");

  auto half = make(kDisagree);
  confirm_rule(half, 0, dm, alternating, {}, 1);
  o.require(half.rules[0].confirmed && half.rules[0].confirm_n >= 93 && half.rules[0].confirm_n <= 100,
            "alternating oracle stopped at n = " + std::to_string(half.rules[0].confirm_n));

  ConfirmOptions tight;
  tight.budget = 5;
  auto budget = make(kDisagree);
  confirm_rule(budget, 0, dm, alternating, tight, 1);
  o.require(budget.rules[0].budget_exhausted && !budget.rules[0].confirmed && budget.rules[0].confirm_n == 5,
            "budget exhaustion not flagged");

  ConfirmOptions wide;
  wide.lambda = 0.9;
  auto loose = make(kDisagree);
  confirm_rule(loose, 0, dm, alternating, wide, 1);
  o.require(loose.rules[0].confirmed && loose.rules[0].confirm_n <= 5, "lambda 0.9 needed more than 5 samples");
  if (o.pass) o.detail = fmt("CI (%.4f, %.4f)", ci.low, ci.high) + ", p = 0.5 first at n = " + std::to_string(first);
  return o;
}

struct MineFiles {
  std::string json;
  std::string markdown;
  std::string csv;
  bool operator==(const MineFiles&) const = default;
};

MineFiles mine_files(const DomainModel& dm, const MineReport& r, const MineConfig& cfg) {
  return {report_json(dm, r, cfg).dump(2), report_markdown(dm, r, cfg), vectors_csv(dm, r, cfg.thresholds)};
}

Outcome pipeline() {
  Outcome o;
  const auto dm = default_domain();
  const auto controller = load_controller("curve-weak", dm);
  MineConfig cfg;
  const auto report = mine_pipeline(dm, controller, cfg, 2024);
  const auto road = dm.index_of("Road.type");
  o.require(std::find(report.selected.begin(), report.selected.end(), road) != report.selected.end(),
            "Road.type not selected");
  bool conditioned = false;
  for (const auto& r : report.rules.rules) {
    for (const auto& p : r.antecedent) conditioned = conditioned || p.attribute == road;
    o.require(r.confirmed_ci.width() < 0.2 || r.budget_exhausted, "unflagged rule with CI width >= 0.2");
  }
  o.require(conditioned, "no rule conditions on Road.type");
  const auto again = mine_pipeline(dm, controller, cfg, 2024);
  o.require(mine_files(dm, report, cfg) == mine_files(dm, again, cfg), "identically seeded runs differ");
  if (o.pass) {
    o.detail = std::to_string(report.rules.rules.size()) + " rules, first: " +
               antecedent_text(dm, report.rules.rules.front());
  }
  return o;
}

Outcome parallel() {
  Outcome o;
  const auto dm = default_domain();
  const auto root = fs::temp_directory_path() / "lanecheck-acceptance";
  fs::remove_all(root);
  const auto rain = load_controller("rain-blind", dm);
  std::map<std::string, std::string> compare_out[2];
  for (int i = 0; i < 2; ++i) {
    ExperimentConfig cfg;
    cfg.seed = 5;
    cfg.jobs = i == 0 ? 1 : 8;
    cfg.keep_traces = true;
    const auto dir = root / ("compare-" + std::to_string(cfg.jobs));
    write_compare(dir, dm, rain, cfg, run_compare(dm, rain, cfg));
    compare_out[i] = directory_bytes(dir);
  }
  o.require(!compare_out[0].empty() && compare_out[0] == compare_out[1], "compare outputs differ between 1 and 8 jobs");

  const auto curve = load_controller("curve-weak", dm);
  std::map<std::string, std::string> mine_out[2];
  for (int i = 0; i < 2; ++i) {
    ExperimentConfig cfg;
    cfg.jobs = i == 0 ? 1 : 8;
    const auto mc = mine_config(cfg);
    const auto dir = root / ("mine-" + std::to_string(cfg.jobs));
    write_mine(dir, dm, mine_pipeline(dm, curve, mc, 2024), mc);
    mine_out[i] = directory_bytes(dir);
  }
  o.require(!mine_out[0].empty() && mine_out[0] == mine_out[1], "mine outputs differ between 1 and 8 jobs");
  if (o.pass) o.detail = std::to_string(compare_out[0].size() + mine_out[0].size()) + " files byte-identical";
  fs::remove_all(root);
  return o;
}

}  // namespace

int main() {
  run(1, "metric correctness", 1, metrics);
  run(2, "matcher optimality", 5, matcher);
  run(3, "error accumulation", 1, accumulation);
  run(4, "offline/online asymmetry", 10, asymmetry);
  run(5, "covering arrays", 60, covering);
  run(6, "forest importance", 120, importance);
  run(7, "RIPPER recovery", 60, rules);
  run(8, "Wilson interval and confirmation", 1, wilson);
  run(9, "end-to-end mining", 300, pipeline);
  run(10, "determinism under parallelism", 300, parallel);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
