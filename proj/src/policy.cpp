#include "rftforge/policy.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rftforge/rng.hpp"

namespace rftforge {

namespace {

const std::string kSlotOpen = "\xE2\x9F\xA8";   // U+27E8
const std::string kSlotClose = "\xE2\x9F\xA9";  // U+27E9

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string slot_marker(size_t index) {
  return kSlotOpen + std::to_string(index) + kSlotClose;
}

}  // namespace

GoalView parse_goal(const std::string& goal) {
  GoalView view;
  size_t i = 0;
  while (i < goal.size()) {
    if (goal[i] == '\'') {
      size_t close = goal.find('\'', i + 1);
      if (close == std::string::npos) {
        view.signature += goal.substr(i);
        break;
      }
      view.signature += slot_marker(view.params.size());
      view.params.push_back(goal.substr(i + 1, close - i - 1));
      i = close + 1;
    } else {
      view.signature += goal[i++];
    }
  }
  return view;
}

std::string abstract_text(const std::string& text, const std::vector<std::string>& params) {
  if (params.empty()) return text;
  // longest value first so nested values cannot shadow each other
  std::vector<size_t> order(params.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (params[a].size() != params[b].size()) return params[a].size() > params[b].size();
    return a < b;
  });

  std::string out;
  size_t i = 0;
  while (i < text.size()) {
    bool replaced = false;
    bool left_ok = i == 0 || !is_word_char(text[i - 1]);
    if (left_ok) {
      for (size_t idx : order) {
        const std::string& v = params[idx];
        if (v.empty() || text.compare(i, v.size(), v) != 0) continue;
        size_t end = i + v.size();
        if (end < text.size() && is_word_char(text[end]) && is_word_char(v.back())) continue;
        out += slot_marker(idx);
        i = end;
        replaced = true;
        break;
      }
    }
    if (!replaced) out += text[i++];
  }
  return out;
}

std::optional<std::string> concretize_text(const std::string& abstracted,
                                           const std::vector<std::string>& params) {
  std::string out;
  size_t i = 0;
  while (i < abstracted.size()) {
    if (abstracted.compare(i, kSlotOpen.size(), kSlotOpen) == 0) {
      size_t num = i + kSlotOpen.size();
      size_t end = num;
      while (end < abstracted.size() && std::isdigit(static_cast<unsigned char>(abstracted[end]))) {
        ++end;
      }
      if (end > num && abstracted.compare(end, kSlotClose.size(), kSlotClose) == 0) {
        size_t idx = std::stoul(abstracted.substr(num, end - num));
        if (idx >= params.size()) return std::nullopt;
        out += params[idx];
        i = end + kSlotClose.size();
        continue;
      }
    }
    out += abstracted[i++];
  }
  return out;
}

uint64_t screen_class(const UiScreen& screen, const std::vector<std::string>& params) {
  uint64_t h = fnv1a64(screen.id);
  for (const auto& e : screen.elements) {
    h = fnv1a64("\x1e", h);
    h = fnv1a64(e.type, h);
    h = fnv1a64("\x1f", h);
    h = fnv1a64(e.clickable ? "c" : "-", h);
    h = fnv1a64(e.focused ? "f" : "-", h);
    h = fnv1a64(abstract_text(e.text, params), h);
  }
  return h;
}

std::string context_key(const GoalView& goal, const UiScreen& screen) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(screen_class(screen, goal.params)));
  return goal.signature + "\x1f" + buf;
}

std::vector<Action> fallback_candidates(const UiScreen& screen) {
  std::vector<Action> out;
  const int n = screen.clickable_count();
  out.reserve(static_cast<size_t>(n) + 2);
  for (int i = 0; i < n; ++i) out.push_back(Action::click(i));
  out.push_back(Action::scroll_down());
  out.push_back(Action::navigate_back());
  return out;
}

namespace {

std::string element_descriptor(const UiElement& e, const std::vector<std::string>& params) {
  return e.type + " '" + abstract_text(e.text, params) + "'";
}

// Abstract form of a concrete action: targets become descriptors, payloads
// become slot references where they match a goal parameter.
std::optional<std::string> abstract_action_key(const Action& action, const UiScreen& screen,
                                               const std::vector<std::string>& params) {
  nlohmann::ordered_json j;
  j["t"] = to_string(action.kind);
  switch (action.kind) {
    case ActionKind::OpenApp:
      j["a"] = action.app_name;
      break;
    case ActionKind::Click:
    case ActionKind::LongPress: {
      const UiElement* e = screen.clickable(action.target);
      if (e == nullptr) return std::nullopt;
      j["d"] = element_descriptor(*e, params);
      break;
    }
    case ActionKind::InputText:
      j["x"] = abstract_text(action.text, params);
      break;
    default:
      break;
  }
  return j.dump();
}

std::optional<Action> concretize_action(const std::string& key, const UiScreen& screen,
                                        const std::vector<std::string>& params) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(key);
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
  const std::string t = j.value("t", "");
  if (t == "open-app") return Action::open_app(j.value("a", ""));
  if (t == "click" || t == "long-press") {
    const std::string wanted = j.value("d", "");
    int index = 0;
    for (const auto& e : screen.elements) {
      if (!e.clickable) continue;
      if (element_descriptor(e, params) == wanted) {
        return t == "click" ? Action::click(index) : Action::long_press(index);
      }
      ++index;
    }
    return std::nullopt;
  }
  if (t == "input-text") {
    auto text = concretize_text(j.value("x", ""), params);
    if (!text) return std::nullopt;
    return Action::input_text(*text);
  }
  if (t == "scroll-up") return Action::scroll_up();
  if (t == "scroll-down") return Action::scroll_down();
  if (t == "scroll-left") return Action::scroll_left();
  if (t == "scroll-right") return Action::scroll_right();
  if (t == "navigate-home") return Action::navigate_home();
  if (t == "navigate-back") return Action::navigate_back();
  if (t == "wait") return Action::wait();
  return std::nullopt;
}

Action lexicographic_min(const std::vector<Action>& actions) {
  const Action* best = &actions.front();
  std::string best_ser = serialize_action(*best);
  for (size_t i = 1; i < actions.size(); ++i) {
    std::string ser = serialize_action(actions[i]);
    if (ser < best_ser) {
      best = &actions[i];
      best_ser = std::move(ser);
    }
  }
  return *best;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Action fallback_decide(const UiScreen& screen, double temperature, std::mt19937_64* rng,
                       std::mutex* mu) {
  auto candidates = fallback_candidates(screen);
  if (temperature <= 0.0 || rng == nullptr) return lexicographic_min(candidates);
  std::lock_guard<std::mutex> lock(*mu);
  return candidates[static_cast<size_t>((*rng)() % candidates.size())];
}

}  // namespace

RandomPolicy::RandomPolicy(uint64_t seed) : rng_(splitmix64(seed)) {}

Action RandomPolicy::decide(const std::string&, const UiScreen& screen,
                            const std::vector<HistoryEntry>&, double temperature) const {
  return fallback_decide(screen, temperature, &rng_, &mu_);
}

Action OraclePolicy::decide(const std::string& goal, const UiScreen& screen,
                            const std::vector<HistoryEntry>&, double) const {
  for (const auto& tpl : registry()) {
    if (auto params = tpl.match_goal(goal)) {
      return tpl.oracle_step(*params, screen);
    }
  }
  return fallback_decide(screen, 0.0, nullptr, nullptr);
}

TabularPolicy::TabularPolicy(uint64_t rng_seed) : rng_(splitmix64(rng_seed)) {}

TabularPolicy::TabularPolicy(const TabularPolicy& other) {
  counts_ = other.counts_;
  rng_ = other.rng_;
}

TabularPolicy& TabularPolicy::operator=(const TabularPolicy& other) {
  if (this != &other) {
    counts_ = other.counts_;
    rng_ = other.rng_;
  }
  return *this;
}

void TabularPolicy::reseed(uint64_t seed) { rng_ = std::mt19937_64(splitmix64(seed)); }

TabularPolicy TabularPolicy::clone() const { return *this; }

double TabularPolicy::total_mass() const {
  double sum = 0.0;
  for (const auto& [key, actions] : counts_) {
    for (const auto& [akey, c] : actions) sum += c;
  }
  return sum;
}

Action TabularPolicy::decide(const std::string& goal, const UiScreen& screen,
                             const std::vector<HistoryEntry>&, double temperature) const {
  const GoalView view = parse_goal(goal);
  const std::string key = context_key(view, screen);
  auto it = counts_.find(key);
  if (it == counts_.end() || it->second.empty()) {
    return fallback_decide(screen, temperature, &rng_, &mu_);
  }
  const auto& actions = it->second;

  if (temperature <= 0.0) {
    double best = 0.0;
    for (const auto& [akey, c] : actions) best = std::max(best, c);
    std::optional<Action> chosen;
    std::string chosen_ser;
    for (const auto& [akey, c] : actions) {
      if (c != best) continue;
      auto a = concretize_action(akey, screen, view.params);
      if (!a) continue;
      std::string ser = serialize_action(*a);
      if (!chosen || ser < chosen_ser) {
        chosen = a;
        chosen_ser = std::move(ser);
      }
    }
    if (chosen) return *chosen;
    return fallback_decide(screen, 0.0, nullptr, nullptr);
  }

  // softmax over log-counts: p proportional to count^(1/T)
  std::vector<const std::string*> keys;
  std::vector<double> weights;
  keys.reserve(actions.size());
  double total = 0.0;
  for (const auto& [akey, c] : actions) {
    double w = std::pow(c, 1.0 / temperature);
    keys.push_back(&akey);
    total += w;
    weights.push_back(w);
  }
  double u;
  {
    std::lock_guard<std::mutex> lock(mu_);
    u = uniform01(rng_) * total;
  }
  size_t pick = 0;
  double acc = 0.0;
  for (size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) {
      pick = i;
      break;
    }
    pick = i;
  }
  auto a = concretize_action(*keys[pick], screen, view.params);
  if (a) return *a;
  return fallback_decide(screen, temperature, &rng_, &mu_);
}

TabularPolicy train(const TabularPolicy& model, const std::vector<TrainingExample>& examples,
                    int epochs, int batch_size) {
  if (epochs < 1) throw Error("train: epochs must be at least 1");
  if (batch_size < 1) throw Error("train: batch size must be at least 1");
  for (const auto& ex : examples) {
    if (!(ex.weight > 0.0)) {
      throw NonpositiveWeight("train: example weight must be positive");
    }
  }
  TabularPolicy out = model.clone();
  for (const auto& ex : examples) {
    const GoalView view = parse_goal(ex.goal);
    auto akey = abstract_action_key(ex.action, ex.screen, view.params);
    if (!akey) continue;  // unmappable target; nothing to learn from
    out.counts_[context_key(view, ex.screen)][*akey] += ex.weight * epochs;
  }
  return out;
}

namespace {
constexpr const char* kModelHeader = "rftforge-model 1";

std::string format_count(double c) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", c);
  return buf;
}
}  // namespace

std::string TabularPolicy::serialize() const {
  std::string out = kModelHeader;
  out += '\n';
  for (const auto& [key, actions] : counts_) {
    for (const auto& [akey, c] : actions) {
      nlohmann::ordered_json j;
      j["key"] = key;
      j["action"] = akey;
      j["count"] = format_count(c);
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

TabularPolicy TabularPolicy::deserialize(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kModelHeader) {
    throw CorruptModel("missing model header");
  }
  TabularPolicy model;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw CorruptModel("unparseable model record: " + line);
    }
    if (!j.is_object() || !j.contains("key") || !j.contains("action") || !j.contains("count")) {
      throw CorruptModel("model record missing fields");
    }
    double c = 0.0;
    try {
      c = std::stod(j["count"].get<std::string>());
    } catch (const std::exception&) {
      throw CorruptModel("bad count in model record");
    }
    if (!(c > 0.0) || !std::isfinite(c)) throw CorruptModel("nonpositive count in model record");
    model.counts_[j["key"].get<std::string>()][j["action"].get<std::string>()] = c;
  }
  return model;
}

void TabularPolicy::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot open " + path + " for writing");
  out << serialize();
  if (!out) throw IoFailure("write failed for " + path);
}

TabularPolicy TabularPolicy::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace rftforge
