#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "rftforge/datapipe.hpp"
#include "rftforge/evalkit.hpp"
#include "rftforge/policy.hpp"
#include "rftforge/prompt.hpp"

using namespace rftforge;

namespace {

UiScreen two_boxes(Bbox outer, Bbox inner) {
  UiScreen s;
  s.id = "boxes";
  s.width = 1080;
  s.height = 2400;
  UiElement a;
  a.type = "button";
  a.text = "outer";
  a.bbox = outer;
  a.clickable = true;
  UiElement b = a;
  b.text = "inner";
  b.bbox = inner;
  s.elements = {a, b};
  return s;
}

// policy stub: perfect on one template, passive everywhere else
class PartialOracle : public Policy {
 public:
  explicit PartialOracle(std::string template_id) : template_id_(std::move(template_id)) {}
  Action decide(const std::string& goal, const UiScreen& screen,
                const std::vector<HistoryEntry>& history, double temperature) const override {
    const TaskTemplate& tpl = find_template(template_id_);
    if (auto params = tpl.match_goal(goal)) {
      return tpl.oracle_step(*params, screen);
    }
    return Action::wait();
  }

 private:
  std::string template_id_;
};

}  // namespace

TEST_CASE("relaxed click matching accepts nested predictions") {
  UiScreen s = two_boxes({100, 100, 500, 500}, {200, 200, 300, 300});
  CHECK(action_match(Action::click(1), Action::click(0), s));   // inner center in outer
  CHECK(!action_match(Action::click(0), Action::click(1), s));  // outer center outside inner
  UiScreen apart = two_boxes({0, 0, 100, 100}, {500, 500, 600, 600});
  CHECK(!action_match(Action::click(1), Action::click(0), apart));
  CHECK(!action_match(Action::scroll_up(), Action::scroll_down(), apart));
  CHECK(!action_match(Action::click(0), Action::long_press(0), apart));
  CHECK(action_match(Action::long_press(0), Action::long_press(0), apart));
}

TEST_CASE("payload comparisons trim trailing whitespace only for text input") {
  UiScreen s = two_boxes({0, 0, 10, 10}, {20, 20, 30, 30});
  CHECK(action_match(Action::input_text("hello "), Action::input_text("hello"), s));
  CHECK(!action_match(Action::input_text(" hello"), Action::input_text("hello"), s));
  CHECK(action_match(Action::open_app("Clock"), Action::open_app("Clock"), s));
  CHECK(!action_match(Action::open_app("Clock "), Action::open_app("Clock"), s));
  CHECK(action_match(Action::wait(), Action::wait(), s));
}

TEST_CASE("invalid predicted targets are a non-match, not an error") {
  UiScreen s = two_boxes({0, 0, 10, 10}, {20, 20, 30, 30});
  CHECK(!action_match(Action::click(7), Action::click(0), s));
}

TEST_CASE("click matching agrees with a point-in-rectangle reference") {
  std::mt19937_64 rng(41);
  auto contains = [](const Bbox& b, int x, int y) {
    return x >= b.left && x < b.right && y >= b.top && y < b.bottom;
  };
  for (int rep = 0; rep < 1000; ++rep) {
    auto box = [&]() {
      int l = static_cast<int>(rng() % 900);
      int t = static_cast<int>(rng() % 2200);
      return Bbox{l, t, l + 1 + static_cast<int>(rng() % 150),
                  t + 1 + static_cast<int>(rng() % 150)};
    };
    UiScreen s = two_boxes(box(), box());
    const Bbox& truth = s.elements[0].bbox;
    const Bbox& pred = s.elements[1].bbox;
    int cx = (pred.left + pred.right) / 2;
    int cy = (pred.top + pred.bottom) / 2;
    CHECK(action_match(Action::click(1), Action::click(0), s) == contains(truth, cx, cy));

    // every strict (index-equal) match is also a relaxed match
    CHECK(action_match(Action::click(0), Action::click(0), s));
    CHECK(action_match(Action::long_press(1), Action::long_press(1), s));
  }
}

TEST_CASE("full-box containment rule is stricter than the center rule") {
  UiScreen s = two_boxes({100, 100, 500, 500}, {200, 200, 300, 300});
  CHECK(action_match(Action::click(1), Action::click(0), s,
                     ClickMatchRule::PredictedBoxInTruth));
  UiScreen straddle = two_boxes({100, 100, 500, 500}, {380, 380, 600, 600});
  CHECK(action_match(Action::click(1), Action::click(0), straddle));  // center inside
  CHECK(!action_match(Action::click(1), Action::click(0), straddle,
                      ClickMatchRule::PredictedBoxInTruth));
}

TEST_CASE("offline evaluation: perfect on clean splits, weak for uniform play") {
  OfflineBundle bundle = synth_offline(19, 4);

  OraclePolicy oracle;
  OfflineEvalReport idd = eval_offline(oracle, bundle.idd);
  CHECK(idd.splits.at("idd").accuracy == 1.0);

  OfflineEvalReport all = eval_offline(oracle, bundle);
  CHECK(all.splits.size() == 4);
  CHECK(all.splits.count("idd") == 1);
  CHECK(all.splits.count("task-unseen") == 1);
  CHECK(all.splits.count("cat-unseen") == 1);
  CHECK(all.splits.count("app-unseen") == 1);
  CHECK(all.overall() == 1.0);

  RandomPolicy uniform(3);
  OfflineEvalReport r = eval_offline(uniform, bundle.idd);
  CHECK(r.splits.at("idd").accuracy < 0.25);

  OfflineDataset empty;
  empty.split = "idd";
  CHECK_THROWS_AS(eval_offline(oracle, empty), EmptySplit);
}

TEST_CASE("offline confusion counts tally every datapoint") {
  OfflineBundle bundle = synth_offline(23, 2);
  OraclePolicy oracle;
  OfflineEvalReport r = eval_offline(oracle, bundle.idd);
  long long total = 0;
  for (const auto& [truth, row] : r.confusion) {
    for (const auto& [pred, n] : row) total += n;
  }
  CHECK(total == static_cast<long long>(bundle.idd.datapoint_count()));
}

TEST_CASE("online evaluation: scripted solver scores 100% everywhere") {
  OraclePolicy oracle;
  OnlineEvalReport r = eval_online(oracle, {1, 2, 3});
  CHECK(r.rate(Difficulty::Easy) == 1.0);
  CHECK(r.rate(Difficulty::Medium) == 1.0);
  CHECK(r.rate(Difficulty::Hard) == 1.0);
  CHECK(r.overall() == 1.0);
  CHECK(r.episodes.at(Difficulty::Easy) == 6 * 3);
  CHECK(r.episodes.at(Difficulty::Medium) == 4 * 3);
  CHECK(r.episodes.at(Difficulty::Hard) == 2 * 3);
  CHECK(r.mean_infer_s >= 0.0);
  CHECK(r.seeds == std::vector<uint64_t>{1, 2, 3});
}

TEST_CASE("overall pools episodes instead of averaging per-difficulty rates") {
  // a solver that only handles one easy template: per-difficulty rates and the
  // pooled overall are recomputed by hand from the counts
  PartialOracle partial("settings-wifi");
  OnlineEvalReport r = eval_online(partial, {5, 6});
  int episodes = 0;
  int successes = 0;
  for (const auto& [d, n] : r.episodes) episodes += n;
  for (const auto& [d, n] : r.successes) successes += n;
  CHECK(episodes == 24);
  CHECK(successes == 2);  // one template, both seeds
  CHECK(r.overall() == doctest::Approx(2.0 / 24.0));
  CHECK(r.rate(Difficulty::Easy) == doctest::Approx(2.0 / 12.0));
  CHECK(r.rate(Difficulty::Hard) == 0.0);
  // pooling differs from the mean of the three per-difficulty rates
  double mean_of_rates = (r.rate(Difficulty::Easy) + r.rate(Difficulty::Medium) +
                          r.rate(Difficulty::Hard)) / 3.0;
  CHECK(r.overall() != doctest::Approx(mean_of_rates));
}

TEST_CASE("difficulty filter restricts the episode set") {
  OraclePolicy oracle;
  OnlineEvalReport easy = eval_online(oracle, {1}, Difficulty::Easy);
  CHECK(easy.episodes.size() == 1);
  CHECK(easy.episodes.at(Difficulty::Easy) == 6);
}

TEST_CASE("difficulty table arithmetic reproduces published-style rows") {
  std::string subset = format_difficulty_row("Our Subset", {38, 28, 16});
  CHECK(subset.find("38 (46.3%)") != std::string::npos);
  CHECK(subset.find("28 (34.1%)") != std::string::npos);
  CHECK(subset.find("16 (19.5%)") != std::string::npos);
  CHECK(subset.find("82") != std::string::npos);

  std::string full = format_difficulty_row("Full Benchmark", {61, 36, 19});
  CHECK(full.find("61 (52.6%)") != std::string::npos);
  CHECK(full.find("36 (31.0%)") != std::string::npos);
  CHECK(full.find("19 (16.4%)") != std::string::npos);
  CHECK(full.find("116") != std::string::npos);

  DifficultyCounts reg = registry_difficulty_counts();
  CHECK(reg.easy == 6);
  CHECK(reg.medium == 4);
  CHECK(reg.hard == 2);
  std::string table = difficulty_table();
  CHECK(table.find("6 (50.0%)") != std::string::npos);
  CHECK(table.find("4 (33.3%)") != std::string::npos);
  CHECK(table.find("2 (16.7%)") != std::string::npos);
}

TEST_CASE("relaxed matching never scores below exact equality") {
  OfflineBundle bundle = synth_offline(37, 3);
  RandomPolicy noisy(9);
  // replay the same decisions under both notions of correctness
  for (const OfflineDataset* d : {&bundle.idd, &bundle.task_unseen}) {
    int relaxed = 0;
    int strict = 0;
    for (const auto& ep : d->episodes) {
      std::vector<HistoryEntry> history;
      for (const auto& step : ep.steps) {
        Action predicted = noisy.decide(ep.goal, step.screen_before,
                                        truncate_history(history), 0.0);
        relaxed += action_match(predicted, step.action, step.screen_before) ? 1 : 0;
        strict += predicted == step.action ? 1 : 0;
        history.push_back(to_history_entry(step.action, step.screen_before));
      }
    }
    CHECK(relaxed >= strict);
  }
}

TEST_CASE("reports render as text and sorted key-value lines") {
  OraclePolicy oracle;
  OnlineEvalReport r = eval_online(oracle, {1});
  CHECK(r.to_text().find("Success Rate") != std::string::npos);
  CHECK(r.to_kv().find("online.overall=1.000000") != std::string::npos);

  OfflineBundle bundle = synth_offline(29, 2);
  OfflineEvalReport off = eval_offline(oracle, bundle);
  CHECK(off.to_text().find("idd") != std::string::npos);
  CHECK(off.to_kv().find("offline.idd.accuracy=1.000000") != std::string::npos);
}
