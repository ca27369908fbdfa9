#include "rftforge/datapipe.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "rftforge/jsonio.hpp"
#include "rftforge/prompt.hpp"
#include "rftforge/rng.hpp"

namespace rftforge {

bool TrajectoryStore::append(const EpisodeReport& report) {
  if (report.trajectory.ret != 1) return false;  // rejection sampling
  std::lock_guard<std::mutex> lock(mu_);
  reports_.push_back(report);
  provenance_.push_back(iteration_);
  counts_[report.trajectory.instance.template_id] += 1;
  return true;
}

void TrajectoryStore::set_iteration(int iteration) {
  std::lock_guard<std::mutex> lock(mu_);
  iteration_ = iteration;
}

size_t TrajectoryStore::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return reports_.size();
}

int TrajectoryStore::success_count(const std::string& template_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = counts_.find(template_id);
  return it == counts_.end() ? 0 : it->second;
}

std::map<std::string, int> TrajectoryStore::success_counts() const {
  std::lock_guard<std::mutex> lock(mu_);
  return counts_;
}

std::vector<Trajectory> TrajectoryStore::trajectories() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<Trajectory> out;
  out.reserve(reports_.size());
  for (const auto& r : reports_) out.push_back(r.trajectory);
  return out;
}

std::vector<int> TrajectoryStore::provenance() const {
  std::lock_guard<std::mutex> lock(mu_);
  return provenance_;
}

std::vector<Trajectory> TrajectoryStore::trajectories_since(size_t offset) const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<Trajectory> out;
  for (size_t i = offset; i < reports_.size(); ++i) out.push_back(reports_[i].trajectory);
  return out;
}

std::vector<EpisodeReport> TrajectoryStore::reports_since(size_t offset) const {
  std::lock_guard<std::mutex> lock(mu_);
  if (offset >= reports_.size()) return {};
  return {reports_.begin() + static_cast<long>(offset), reports_.end()};
}

size_t OfflineDataset::datapoint_count() const {
  size_t n = 0;
  for (const auto& ep : episodes) n += ep.steps.size();
  return n;
}

const OfflineDataset& OfflineBundle::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "idd") return idd;
  if (name == "task-unseen") return task_unseen;
  if (name == "cat-unseen") return cat_unseen;
  if (name == "app-unseen") return app_unseen;
  throw Error("unknown split: " + name);
}

std::vector<const OfflineDataset*> OfflineBundle::all() const {
  return {&train, &idd, &task_unseen, &cat_unseen, &app_unseen};
}

std::string OfflineBundle::manifest() const {
  std::vector<std::string> lines;
  for (const OfflineDataset* d : all()) {
    std::map<std::string, std::pair<uint64_t, uint64_t>> ranges;
    for (const auto& ep : d->episodes) {
      auto it = ranges.find(ep.template_id);
      if (it == ranges.end()) {
        ranges[ep.template_id] = {ep.seed, ep.seed + 1};
      } else {
        it->second.first = std::min(it->second.first, ep.seed);
        it->second.second = std::max(it->second.second, ep.seed + 1);
      }
    }
    for (const auto& [tpl, r] : ranges) {
      lines.push_back(d->split + "\t" + tpl + "\t" + std::to_string(r.first) + ".." +
                      std::to_string(r.second));
    }
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

Trajectory filter_duplicates(const Trajectory& trajectory) {
  Trajectory out;
  out.instance = trajectory.instance;
  out.ret = trajectory.ret;
  const auto& steps = trajectory.steps;
  std::vector<uint64_t> fp(steps.size());
  for (size_t i = 0; i < steps.size(); ++i) {
    fp[i] = observation_fingerprint(steps[i].screen_before);
  }
  // keep the last step of every run of identical observations
  for (size_t i = 0; i < steps.size(); ++i) {
    if (i + 1 == steps.size() || fp[i] != fp[i + 1]) out.steps.push_back(steps[i]);
  }
  return out;
}

namespace {

long long rebalance_target(const std::map<std::string, int>& counts, const CollectConfig& cfg) {
  if (cfg.rule == RebalanceRule::EqualToTau) return cfg.tau;
  std::vector<int> qualified;
  for (const auto& [tpl, c] : counts) {
    if (c >= cfg.tau) qualified.push_back(c);
  }
  if (qualified.empty()) return cfg.tau;
  std::sort(qualified.begin(), qualified.end());
  const size_t n = qualified.size();
  double median = (n % 2 == 1)
                      ? qualified[n / 2]
                      : (qualified[n / 2 - 1] + qualified[n / 2]) / 2.0;
  return std::llround(median);
}

}  // namespace

OnlineDataset rebalance(const std::vector<Trajectory>& successes,
                        const std::vector<int>& provenance, const CollectConfig& cfg) {
  if (cfg.tau < 1) throw Error("rebalance: tau must be at least 1");
  if (successes.empty()) throw EmptyStore("rebalance: no successful trajectories");
  std::map<std::string, std::vector<size_t>> groups;
  std::map<std::string, int> counts;
  for (size_t i = 0; i < successes.size(); ++i) {
    groups[successes[i].instance.template_id].push_back(i);
    counts[successes[i].instance.template_id] += 1;
  }
  const long long target = rebalance_target(counts, cfg);

  OnlineDataset out;
  for (const auto& [tpl, indices] : groups) {
    const long long c = static_cast<long long>(indices.size());
    // templates at or above tau contribute everything unchanged; the others
    // repeat their trajectories round-robin until they reach the target
    const long long emit = c >= cfg.tau ? c : std::max(c, target);
    for (long long k = 0; k < emit; ++k) {
      size_t idx = indices[static_cast<size_t>(k % c)];
      out.trajectories.push_back(successes[idx]);
      out.provenance.push_back(idx < provenance.size() ? provenance[idx] : 0);
    }
  }
  return out;
}

OnlineDataset rebalance(const TrajectoryStore& store, const CollectConfig& cfg) {
  return rebalance(store.trajectories(), store.provenance(), cfg);
}

namespace {

constexpr uint64_t kTrainSeedBase = 1000;
constexpr uint64_t kIddSeedBase = 5000;
constexpr uint64_t kHoldoutSeedBase = 9000;

OfflineEpisode run_demo(const TaskTemplate& tpl, uint64_t instance_seed, bool with_noise,
                        std::mt19937_64* noise_rng) {
  TaskInstance inst = instantiate(tpl.id, instance_seed);
  auto session = reset(inst);

  bool scroll_planned = false;
  int scroll_at = -1;
  if (with_noise && noise_rng != nullptr) {
    scroll_planned = (*noise_rng)() % 10 < 3;  // one redundant scroll in ~30% of episodes
    scroll_at = static_cast<int>((*noise_rng)() % static_cast<uint64_t>(tpl.optimal_length));
  }

  OfflineEpisode ep;
  ep.template_id = tpl.id;
  ep.seed = instance_seed;
  ep.goal = inst.goal;

  std::vector<HistoryEntry> history;
  bool pending_wait = false;
  int taken = 0;
  while (!session->done()) {
    UiScreen screen = session->screen();
    Action action;
    if (pending_wait) {
      action = Action::wait();
      pending_wait = false;
    } else if (scroll_planned && taken >= scroll_at) {
      action = Action::scroll_down();
      scroll_planned = false;
    } else {
      action = tpl.oracle_step(inst.params, screen);
      if (with_noise && action.kind == ActionKind::OpenApp) pending_wait = true;
    }
    StepRecord rec;
    rec.screen_before = screen;
    rec.prompt = build_prompt(inst.goal, truncate_history(history), screen);
    rec.action = action;
    rec.reward = session->step(action).reward;
    history.push_back(to_history_entry(action, screen));
    ep.steps.push_back(std::move(rec));
    ++taken;
  }
  if (!session->succeeded()) {
    throw Error("demonstration for " + tpl.id + " seed " + std::to_string(instance_seed) +
                " did not succeed");
  }
  return ep;
}

}  // namespace

OfflineBundle synth_offline(uint64_t seed, int episodes_per_template) {
  OfflineBundle bundle;
  bundle.train.split = "train";
  bundle.idd.split = "idd";
  bundle.task_unseen.split = "task-unseen";
  bundle.cat_unseen.split = "cat-unseen";
  bundle.app_unseen.split = "app-unseen";

  for (const auto& tpl : registry()) {
    if (tpl.split == "train") {
      std::mt19937_64 noise_rng(derive_seed(seed, "noise." + tpl.id));
      for (int k = 0; k < episodes_per_template; ++k) {
        bundle.train.episodes.push_back(
            run_demo(tpl, kTrainSeedBase + static_cast<uint64_t>(k), true, &noise_rng));
      }
      for (int k = 0; k < episodes_per_template; ++k) {
        bundle.idd.episodes.push_back(
            run_demo(tpl, kIddSeedBase + static_cast<uint64_t>(k), false, nullptr));
      }
    } else {
      OfflineDataset& target = tpl.split == "task-unseen" ? bundle.task_unseen
                               : tpl.split == "cat-unseen" ? bundle.cat_unseen
                                                           : bundle.app_unseen;
      for (int k = 0; k < episodes_per_template; ++k) {
        target.episodes.push_back(
            run_demo(tpl, kHoldoutSeedBase + static_cast<uint64_t>(k), false, nullptr));
      }
    }
  }
  return bundle;
}

namespace {

void emit_examples(const std::string& goal, const std::vector<StepRecord>& steps, double weight,
                   std::vector<TrainingExample>& out) {
  std::vector<HistoryEntry> history;
  for (const auto& sr : steps) {
    if (weight > 0.0) {
      TrainingExample ex;
      ex.goal = goal;
      ex.screen = sr.screen_before;
      ex.history = truncate_history(history);
      ex.action = sr.action;
      ex.weight = weight;
      out.push_back(std::move(ex));
    }
    HistoryEntry entry;
    try {
      entry = to_history_entry(sr.action, sr.screen_before);
    } catch (const IndexOutOfRange&) {
      entry.action_type = to_string(sr.action.kind);
      entry.target_descriptor = "unknown ''";
    }
    history.push_back(std::move(entry));
  }
}

}  // namespace

std::vector<TrainingExample> to_examples(const OnlineDataset& dataset) {
  std::vector<TrainingExample> out;
  for (const auto& t : dataset.trajectories) {
    emit_examples(t.instance.goal, t.steps, static_cast<double>(t.ret), out);
  }
  return out;
}

std::vector<TrainingExample> to_examples(const OfflineDataset& dataset) {
  std::vector<TrainingExample> out;
  for (const auto& ep : dataset.episodes) {
    emit_examples(ep.goal, ep.steps, 1.0, out);
  }
  return out;
}

void append_trajectory_log(const std::string& path, const EpisodeReport& report) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoFailure("cannot open " + path + " for appending");
  out << report_to_json(report).dump() << '\n';
  if (!out) throw IoFailure("write failed for " + path);
}

std::vector<Trajectory> load_trajectory_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path);
  std::vector<Trajectory> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(report_from_json(Json::parse(line)).trajectory);
  }
  return out;
}

namespace {

std::string split_file_name(const std::string& split) {
  std::string name = split;
  std::replace(name.begin(), name.end(), '-', '_');
  return name + ".jsonl";
}

Json episode_to_json(const OfflineEpisode& ep) {
  Json j;
  j["template-id"] = ep.template_id;
  j["seed"] = ep.seed;
  j["goal"] = ep.goal;
  Json steps = Json::array();
  for (const auto& s : ep.steps) {
    Json step;
    step["screen"] = screen_to_json(s.screen_before);
    step["action"] = serialize_action(s.action);
    step["reward"] = s.reward;
    steps.push_back(std::move(step));
  }
  j["steps"] = std::move(steps);
  return j;
}

OfflineEpisode episode_from_json(const Json& j) {
  OfflineEpisode ep;
  ep.template_id = j.at("template-id").get<std::string>();
  ep.seed = j.at("seed").get<uint64_t>();
  ep.goal = j.at("goal").get<std::string>();
  std::vector<HistoryEntry> history;
  for (const auto& sj : j.at("steps")) {
    StepRecord s;
    s.screen_before = screen_from_json(sj.at("screen"));
    s.action = parse_action(sj.at("action").get<std::string>());
    s.reward = sj.at("reward").get<int>();
    s.prompt = build_prompt(ep.goal, truncate_history(history), s.screen_before);
    history.push_back(to_history_entry(s.action, s.screen_before));
    ep.steps.push_back(std::move(s));
  }
  return ep;
}

void save_split(const OfflineDataset& d, const std::string& dir) {
  std::ofstream out(dir + "/" + split_file_name(d.split), std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write split " + d.split + " under " + dir);
  for (const auto& ep : d.episodes) out << episode_to_json(ep).dump() << '\n';
}

OfflineDataset load_split(const std::string& split, const std::string& dir) {
  OfflineDataset d;
  d.split = split;
  std::ifstream in(dir + "/" + split_file_name(split), std::ios::binary);
  if (!in) throw IoFailure("cannot open split " + split + " under " + dir);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    d.episodes.push_back(episode_from_json(Json::parse(line)));
  }
  return d;
}

}  // namespace

void save_bundle(const OfflineBundle& bundle, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const OfflineDataset* d : bundle.all()) save_split(*d, dir);
  std::ofstream mf(dir + "/manifest.txt", std::ios::binary | std::ios::trunc);
  if (!mf) throw IoFailure("cannot write manifest under " + dir);
  mf << bundle.manifest();
}

OfflineBundle load_bundle(const std::string& dir) {
  OfflineBundle bundle;
  bundle.train = load_split("train", dir);
  bundle.idd = load_split("idd", dir);
  bundle.task_unseen = load_split("task-unseen", dir);
  bundle.cat_unseen = load_split("cat-unseen", dir);
  bundle.app_unseen = load_split("app-unseen", dir);
  return bundle;
}

}  // namespace rftforge
