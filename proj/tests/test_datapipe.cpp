#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <map>
#include <random>
#include <set>

#include "rftforge/datapipe.hpp"
#include "rftforge/jsonio.hpp"
#include "rftforge/prompt.hpp"

using namespace rftforge;

namespace {

UiScreen tagged_screen(int tag) {
  UiScreen s;
  s.id = "fsm-" + std::to_string(tag % 4);
  s.width = 100;
  s.height = 100;
  UiElement e;
  e.type = "label";
  e.text = "state-" + std::to_string(tag);
  e.bbox = {0, 0, 10, 10};
  s.elements.push_back(e);
  return s;
}

Trajectory trajectory_from_tags(const std::vector<int>& tags, const std::string& template_id) {
  Trajectory t;
  t.instance.template_id = template_id;
  t.instance.goal = "goal";
  t.instance.max_steps = 40;
  t.ret = 1;
  for (int tag : tags) {
    StepRecord sr;
    sr.screen_before = tagged_screen(tag);
    sr.action = Action::wait();
    t.steps.push_back(std::move(sr));
  }
  if (!t.steps.empty()) t.steps.back().reward = 1;
  return t;
}

// reference behavior: repeatedly drop the earlier of any adjacent equal pair
Trajectory filter_reference(Trajectory t) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i + 1 < t.steps.size(); ++i) {
      if (observation_fingerprint(t.steps[i].screen_before) ==
          observation_fingerprint(t.steps[i + 1].screen_before)) {
        t.steps.erase(t.steps.begin() + static_cast<long>(i));
        changed = true;
        break;
      }
    }
  }
  return t;
}

EpisodeReport success_report(const std::string& template_id, const std::string& ticket) {
  EpisodeReport r;
  r.ticket_id = ticket;
  r.trajectory = trajectory_from_tags({1, 2, 3}, template_id);
  return r;
}

}  // namespace

TEST_CASE("duplicate filter collapses runs and keeps the last step before a change") {
  Trajectory t = trajectory_from_tags({5, 5, 5, 9}, "x");
  Trajectory f = filter_duplicates(t);
  REQUIRE(f.steps.size() == 2);
  CHECK(observation_fingerprint(f.steps[0].screen_before) ==
        observation_fingerprint(tagged_screen(5)));
  CHECK(observation_fingerprint(f.steps[1].screen_before) ==
        observation_fingerprint(tagged_screen(9)));
  CHECK(f.ret == t.ret);

  Trajectory distinct = trajectory_from_tags({1, 2, 3, 4}, "x");
  CHECK(filter_duplicates(distinct) == distinct);

  // final step always survives
  Trajectory tail = trajectory_from_tags({1, 2, 2, 2}, "x");
  Trajectory ft = filter_duplicates(tail);
  CHECK(ft.steps.size() == 2);
  CHECK(ft.steps.back().reward == 1);
}

TEST_CASE("duplicate filter equals the reference scan and is idempotent") {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<int> tags;
    int n = 1 + static_cast<int>(rng() % 12);
    int tag = static_cast<int>(rng() % 50);
    for (int i = 0; i < n; ++i) {
      if (rng() % 3 != 0) tag = static_cast<int>(rng() % 50);  // sometimes repeat
      tags.push_back(tag);
    }
    Trajectory t = trajectory_from_tags(tags, "x");
    Trajectory fast = filter_duplicates(t);
    Trajectory slow = filter_reference(t);
    CHECK(fast == slow);
    CHECK(filter_duplicates(fast) == fast);
    for (size_t i = 0; i + 1 < fast.steps.size(); ++i) {
      CHECK(observation_fingerprint(fast.steps[i].screen_before) !=
            observation_fingerprint(fast.steps[i + 1].screen_before));
    }
  }
}

TEST_CASE("store keeps successes only and counts per template") {
  TrajectoryStore store;
  CHECK(store.append(success_report("a", "t1")));
  CHECK(store.append(success_report("a", "t2")));
  EpisodeReport failed;
  failed.ticket_id = "t3";
  failed.trajectory = trajectory_from_tags({1, 2}, "a");
  failed.trajectory.ret = 0;
  CHECK(!store.append(failed));
  CHECK(store.size() == 2);
  CHECK(store.success_count("a") == 2);
  CHECK(store.success_count("b") == 0);

  store.set_iteration(4);
  store.append(success_report("b", "t4"));
  auto prov = store.provenance();
  CHECK(prov == std::vector<int>{0, 0, 4});
  CHECK(store.trajectories_since(2).size() == 1);
}

TEST_CASE("rebalancing: documented example profiles") {
  CollectConfig cfg;  // tau = 10, median rule
  std::vector<Trajectory> successes;
  std::vector<int> prov;
  auto add = [&](const std::string& tpl, int count) {
    for (int i = 0; i < count; ++i) {
      successes.push_back(trajectory_from_tags({i, i + 1}, tpl));
      prov.push_back(0);
    }
  };
  add("A", 12);
  add("B", 10);
  add("C", 3);
  OnlineDataset d = rebalance(successes, prov, cfg);
  std::map<std::string, int> out;
  for (const auto& t : d.trajectories) out[t.instance.template_id] += 1;
  CHECK(out["A"] == 12);  // already above the target
  CHECK(out["B"] == 10);
  CHECK(out["C"] == 11);  // median of {12, 10} is 11; copies split 4/4/3

  std::map<int, int> copies;  // per distinct C trajectory
  for (const auto& t : d.trajectories) {
    if (t.instance.template_id == "C") {
      copies[static_cast<int>(
          observation_fingerprint(t.steps[0].screen_before) % 1000000)] += 1;
    }
  }
  std::multiset<int> spread;
  for (const auto& [k, n] : copies) spread.insert(n);
  CHECK(spread == std::multiset<int>{3, 4, 4});

  // no qualified template: the threshold itself is the target
  std::vector<Trajectory> tiny;
  std::vector<int> tiny_prov;
  tiny.push_back(trajectory_from_tags({1, 2}, "A"));
  tiny.push_back(trajectory_from_tags({2, 3}, "A"));
  tiny_prov = {0, 0};
  OnlineDataset d2 = rebalance(tiny, tiny_prov, cfg);
  CHECK(d2.size() == 10);

  CHECK_THROWS_AS(rebalance(std::vector<Trajectory>{}, {}, cfg), EmptyStore);
}

TEST_CASE("rebalancing matches a brute-force reference on random profiles") {
  std::mt19937_64 rng(31);
  CollectConfig cfg;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<Trajectory> successes;
    std::vector<int> prov;
    std::map<std::string, int> profile;
    int templates = 1 + static_cast<int>(rng() % 6);
    for (int t = 0; t < templates; ++t) {
      std::string id = "tpl" + std::to_string(t);
      int count = 1 + static_cast<int>(rng() % 25);
      profile[id] = count;
      for (int i = 0; i < count; ++i) {
        successes.push_back(trajectory_from_tags({t * 100 + i}, id));
        prov.push_back(0);
      }
    }

    // independent reference: recompute the target and expected counts
    std::vector<int> qualified;
    for (const auto& [id, c] : profile) {
      if (c >= cfg.tau) qualified.push_back(c);
    }
    long long target = cfg.tau;
    if (!qualified.empty()) {
      std::sort(qualified.begin(), qualified.end());
      size_t n = qualified.size();
      double median = n % 2 == 1 ? qualified[n / 2]
                                 : (qualified[n / 2 - 1] + qualified[n / 2]) / 2.0;
      target = std::llround(median);
    }

    OnlineDataset d = rebalance(successes, prov, cfg);
    std::map<std::string, int> out;
    for (const auto& t : d.trajectories) out[t.instance.template_id] += 1;
    for (const auto& [id, c] : profile) {
      long long expect = c >= cfg.tau ? c : std::max<long long>(c, target);
      CHECK(out[id] == expect);
    }
    for (const auto& t : d.trajectories) CHECK(t.ret == 1);
  }
}

TEST_CASE("synthetic train demonstrations insert a wait after every open-app") {
  OfflineBundle bundle = synth_offline(11, 4);
  REQUIRE(!bundle.train.episodes.empty());
  for (const auto& ep : bundle.train.episodes) {
    for (size_t i = 0; i < ep.steps.size(); ++i) {
      if (ep.steps[i].action.kind == ActionKind::OpenApp) {
        REQUIRE(i + 1 < ep.steps.size());
        CHECK(ep.steps[i + 1].action.kind == ActionKind::Wait);
      }
    }
  }
  // hold-out splits replay the solver verbatim, without the wait quirk
  for (const OfflineDataset* d : {&bundle.idd, &bundle.task_unseen, &bundle.cat_unseen,
                                  &bundle.app_unseen}) {
    for (const auto& ep : d->episodes) {
      for (const auto& step : ep.steps) CHECK(step.action.kind != ActionKind::Wait);
    }
  }
}

TEST_CASE("synthetic splits: sizes, demonstrated success, seed-range hygiene") {
  OfflineBundle empty = synth_offline(1, 0);
  CHECK(empty.train.episodes.empty());
  CHECK(empty.app_unseen.episodes.empty());

  OfflineBundle bundle = synth_offline(2, 3);
  CHECK(bundle.train.episodes.size() == 6 * 3);
  CHECK(bundle.idd.episodes.size() == 6 * 3);
  CHECK(bundle.task_unseen.episodes.size() == 3 * 3);
  CHECK(bundle.cat_unseen.episodes.size() == 2 * 3);
  CHECK(bundle.app_unseen.episodes.size() == 1 * 3);
  for (const OfflineDataset* d : bundle.all()) {
    for (const auto& ep : d->episodes) {
      CHECK(!ep.steps.empty());
      CHECK(ep.steps.back().reward == 1);
    }
  }

  // no (template, seed) pair of any hold-out split appears in train
  std::set<std::pair<std::string, uint64_t>> train_keys;
  for (const auto& ep : bundle.train.episodes) train_keys.insert({ep.template_id, ep.seed});
  for (const OfflineDataset* d : {&bundle.idd, &bundle.task_unseen, &bundle.cat_unseen,
                                  &bundle.app_unseen}) {
    for (const auto& ep : d->episodes) {
      CHECK(!train_keys.count({ep.template_id, ep.seed}));
    }
  }

  // the manifest pins disjoint seed intervals per split
  std::string manifest = bundle.manifest();
  CHECK(manifest.find("train\t") != std::string::npos);
  CHECK(manifest.find("app-unseen\trecorder-save") != std::string::npos);
}

TEST_CASE("training examples carry the return as weight and cap history") {
  Trajectory six = trajectory_from_tags({1, 2, 3, 4, 5, 6, 7, 8}, "a");
  OnlineDataset d;
  d.trajectories = {six};
  d.provenance = {0};
  auto examples = to_examples(d);
  REQUIRE(examples.size() == six.steps.size());
  for (size_t i = 0; i < examples.size(); ++i) {
    CHECK(examples[i].weight == 1.0);
    CHECK(examples[i].history.size() == std::min<size_t>(i, 5));
  }

  Trajectory failed = trajectory_from_tags({1, 2, 3}, "a");
  failed.ret = 0;
  failed.steps.back().reward = 0;
  OnlineDataset d0;
  d0.trajectories = {failed};
  d0.provenance = {0};
  CHECK(to_examples(d0).empty());
}

TEST_CASE("trajectory log and dataset directory round-trip") {
  auto dir = std::filesystem::temp_directory_path() / "rftforge-datapipe-test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  // the log preserves instances, actions, rewards and fingerprints
  EpisodeReport rep;
  rep.ticket_id = "t-7";
  rep.trajectory = trajectory_from_tags({3, 4, 5}, "contacts-add");
  rep.trajectory.instance.params = {{"name", "Ada"}, {"phone", "+1"}};
  rep.wall_time_s = 0.25;
  rep.inference_times_s = {0.1, 0.1, 0.05};
  const std::string log = (dir / "log.jsonl").string();
  append_trajectory_log(log, rep);
  append_trajectory_log(log, rep);
  auto loaded = load_trajectory_log(log);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].instance.template_id == "contacts-add");
  CHECK(loaded[0].instance.params.at("name") == "Ada");
  CHECK(loaded[0].steps.size() == 3);
  CHECK(loaded[0].ret == 1);
  CHECK(observation_fingerprint(loaded[0].steps[0].screen_before) ==
        observation_fingerprint(rep.trajectory.steps[0].screen_before));

  OfflineBundle bundle = synth_offline(5, 2);
  save_bundle(bundle, (dir / "data").string());
  OfflineBundle back = load_bundle((dir / "data").string());
  CHECK(back.train.episodes.size() == bundle.train.episodes.size());
  CHECK(back.idd.episodes.size() == bundle.idd.episodes.size());
  CHECK(back.train.episodes[0].goal == bundle.train.episodes[0].goal);
  CHECK(back.train.episodes[0].steps[0].prompt == bundle.train.episodes[0].steps[0].prompt);
  CHECK(to_examples(back.train).size() == to_examples(bundle.train).size());
  std::filesystem::remove_all(dir);
}
