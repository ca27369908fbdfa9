#include "rftforge/evalkit.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <sstream>

#include "rftforge/prompt.hpp"
#include "rftforge/rng.hpp"

namespace rftforge {

namespace {

std::string rtrim(const std::string& s) {
  size_t end = s.size();
  while (end > 0 && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(0, end);
}

bool box_inside(const Bbox& inner, const Bbox& outer) {
  return inner.left >= outer.left && inner.right <= outer.right && inner.top >= outer.top &&
         inner.bottom <= outer.bottom;
}

}  // namespace

bool action_match(const Action& predicted, const Action& truth, const UiScreen& screen,
                  ClickMatchRule rule) {
  if (predicted.kind != truth.kind) return false;
  switch (truth.kind) {
    case ActionKind::Click:
    case ActionKind::LongPress: {
      const UiElement* te = screen.clickable(truth.target);
      const UiElement* pe = screen.clickable(predicted.target);
      if (te == nullptr || pe == nullptr) return false;
      if (rule == ClickMatchRule::PredictedBoxInTruth) {
        return box_inside(pe->bbox, te->bbox);
      }
      int cx = (pe->bbox.left + pe->bbox.right) / 2;
      int cy = (pe->bbox.top + pe->bbox.bottom) / 2;
      return te->bbox.contains(cx, cy);
    }
    case ActionKind::InputText:
      return rtrim(predicted.text) == rtrim(truth.text);
    case ActionKind::OpenApp:
      return predicted.app_name == truth.app_name;
    default:
      return true;
  }
}

double OfflineEvalReport::overall() const {
  long long datapoints = 0;
  long long matches = 0;
  for (const auto& [split, acc] : splits) {
    datapoints += acc.datapoints;
    matches += acc.matches;
  }
  return datapoints == 0 ? 0.0 : static_cast<double>(matches) / static_cast<double>(datapoints);
}

OfflineEvalReport eval_offline(const Policy& policy, const OfflineDataset& split,
                               ClickMatchRule rule) {
  if (split.datapoint_count() == 0) {
    throw EmptySplit("offline split '" + split.split + "' has no datapoints");
  }
  OfflineEvalReport report;
  SplitAccuracy acc;
  for (const auto& ep : split.episodes) {
    std::vector<HistoryEntry> history;
    for (const auto& step : ep.steps) {
      Action predicted =
          policy.decide(ep.goal, step.screen_before, truncate_history(history), 0.0);
      ++acc.datapoints;
      if (action_match(predicted, step.action, step.screen_before, rule)) ++acc.matches;
      report.confusion[to_string(step.action.kind)][to_string(predicted.kind)] += 1;
      HistoryEntry entry;
      try {
        entry = to_history_entry(step.action, step.screen_before);
      } catch (const IndexOutOfRange&) {
        entry.action_type = to_string(step.action.kind);
        entry.target_descriptor = "unknown ''";
      }
      history.push_back(std::move(entry));
    }
  }
  acc.accuracy = acc.datapoints == 0
                     ? 0.0
                     : static_cast<double>(acc.matches) / static_cast<double>(acc.datapoints);
  report.splits[split.split] = acc;
  return report;
}

OfflineEvalReport eval_offline(const Policy& policy, const OfflineBundle& bundle,
                               ClickMatchRule rule) {
  OfflineEvalReport report;
  for (const OfflineDataset* d : {&bundle.idd, &bundle.task_unseen, &bundle.cat_unseen,
                                  &bundle.app_unseen}) {
    OfflineEvalReport one = eval_offline(policy, *d, rule);
    for (const auto& [split, acc] : one.splits) report.splits[split] = acc;
    for (const auto& [truth, row] : one.confusion) {
      for (const auto& [pred, n] : row) report.confusion[truth][pred] += n;
    }
  }
  return report;
}

std::string OfflineEvalReport::to_text() const {
  static const std::vector<std::string> order = {"idd", "task-unseen", "cat-unseen", "app-unseen",
                                                 "train"};
  std::string out = "Action Accuracy\n";
  char buf[96];
  for (const auto& split : order) {
    auto it = splits.find(split);
    if (it == splits.end()) continue;
    std::snprintf(buf, sizeof(buf), "  %-12s %6.1f%%  (%d/%d)\n", it->first.c_str(),
                  100.0 * it->second.accuracy, it->second.matches, it->second.datapoints);
    out += buf;
  }
  return out;
}

std::string OfflineEvalReport::to_kv() const {
  std::ostringstream out;
  char buf[64];
  for (const auto& [split, acc] : splits) {
    std::snprintf(buf, sizeof(buf), "%.6f", acc.accuracy);
    out << "offline." << split << ".accuracy=" << buf << "\n";
    out << "offline." << split << ".datapoints=" << acc.datapoints << "\n";
  }
  std::snprintf(buf, sizeof(buf), "%.6f", overall());
  out << "offline.overall=" << buf << "\n";
  return out.str();
}

double OnlineEvalReport::rate(Difficulty d) const {
  auto it = episodes.find(d);
  if (it == episodes.end() || it->second == 0) return 0.0;
  auto sit = successes.find(d);
  int s = sit == successes.end() ? 0 : sit->second;
  return static_cast<double>(s) / static_cast<double>(it->second);
}

double OnlineEvalReport::overall() const {
  int ep = 0;
  int sc = 0;
  for (const auto& [d, n] : episodes) ep += n;
  for (const auto& [d, n] : successes) sc += n;
  return ep == 0 ? 0.0 : static_cast<double>(sc) / static_cast<double>(ep);
}

std::string OnlineEvalReport::to_text() const {
  char buf[160];
  std::string out = "Success Rate\n  Easy    Medium  Hard    Overall  Infer(s)\n";
  std::snprintf(buf, sizeof(buf), "  %-7.1f %-7.1f %-7.1f %-8.1f %.4f\n",
                100.0 * rate(Difficulty::Easy), 100.0 * rate(Difficulty::Medium),
                100.0 * rate(Difficulty::Hard), 100.0 * overall(), mean_infer_s);
  out += buf;
  return out;
}

std::string OnlineEvalReport::to_kv() const {
  std::ostringstream out;
  char buf[64];
  auto emit = [&](const std::string& key, double v) {
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    out << key << "=" << buf << "\n";
  };
  emit("online.easy", rate(Difficulty::Easy));
  emit("online.hard", rate(Difficulty::Hard));
  emit("online.medium", rate(Difficulty::Medium));
  emit("online.overall", overall());
  return out.str();
}

OnlineEvalReport eval_online(const Policy& policy, const std::vector<uint64_t>& seeds,
                             std::optional<Difficulty> difficulty_filter) {
  if (seeds.empty()) throw Error("eval_online: at least one seed is required");
  OnlineEvalReport report;
  report.seeds = seeds;
  double total_infer = 0.0;
  long long calls = 0;

  for (const auto& [template_id, difficulty] : registry_manifest()) {
    if (difficulty_filter && *difficulty_filter != difficulty) continue;
    for (uint64_t seed : seeds) {
      TaskInstance inst = instantiate(template_id, derive_seed(seed, "eval." + template_id));
      auto session = reset(inst);
      std::vector<HistoryEntry> history;
      while (!session->done()) {
        UiScreen screen = session->screen();
        auto window = truncate_history(history);
        const auto t0 = std::chrono::steady_clock::now();
        Action action = policy.decide(inst.goal, screen, window, 0.0);
        total_infer += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ++calls;
        try {
          session->step(action);
        } catch (const IndexOutOfRange&) {
          session->burn_step();
        }
        HistoryEntry entry;
        try {
          entry = to_history_entry(action, screen);
        } catch (const IndexOutOfRange&) {
          entry.action_type = to_string(action.kind);
          entry.target_descriptor = "unknown ''";
        }
        history.push_back(std::move(entry));
      }
      report.episodes[difficulty] += 1;
      if (session->succeeded()) report.successes[difficulty] += 1;
    }
  }
  report.mean_infer_s = calls == 0 ? 0.0 : total_infer / static_cast<double>(calls);
  return report;
}

std::string format_difficulty_row(const std::string& label, const DifficultyCounts& counts) {
  const double total = counts.total();
  char buf[160];
  auto pct = [&](int c) { return total == 0 ? 0.0 : 100.0 * c / total; };
  std::snprintf(buf, sizeof(buf), "%-16s %3d (%.1f%%)  %3d (%.1f%%)  %3d (%.1f%%)  %5d",
                label.c_str(), counts.easy, pct(counts.easy), counts.medium, pct(counts.medium),
                counts.hard, pct(counts.hard), counts.total());
  return buf;
}

DifficultyCounts registry_difficulty_counts() {
  DifficultyCounts counts;
  for (const auto& [id, d] : registry_manifest()) {
    if (d == Difficulty::Easy) ++counts.easy;
    if (d == Difficulty::Medium) ++counts.medium;
    if (d == Difficulty::Hard) ++counts.hard;
  }
  return counts;
}

std::string difficulty_table() {
  std::string out = "Benchmark        Easy (%)     Medium (%)   Hard (%)     Total\n";
  out += format_difficulty_row("Registry", registry_difficulty_counts());
  out += '\n';
  return out;
}

}  // namespace rftforge
