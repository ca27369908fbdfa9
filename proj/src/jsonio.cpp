#include "rftforge/jsonio.hpp"

#include <cstdio>

#include "rftforge/prompt.hpp"

namespace rftforge {

Json screen_to_json(const UiScreen& screen) {
  Json j;
  j["screen-id"] = screen.id;
  j["width"] = screen.width;
  j["height"] = screen.height;
  Json elements = Json::array();
  for (const auto& e : screen.elements) {
    Json el;
    el["type"] = e.type;
    el["text"] = e.text;
    el["bbox"] = {e.bbox.left, e.bbox.top, e.bbox.right, e.bbox.bottom};
    el["clickable"] = e.clickable;
    el["focused"] = e.focused;
    elements.push_back(std::move(el));
  }
  j["elements"] = std::move(elements);
  return j;
}

UiScreen screen_from_json(const Json& j) {
  UiScreen s;
  s.id = j.at("screen-id").get<std::string>();
  s.width = j.at("width").get<int>();
  s.height = j.at("height").get<int>();
  for (const auto& el : j.at("elements")) {
    UiElement e;
    e.type = el.at("type").get<std::string>();
    e.text = el.at("text").get<std::string>();
    const auto& b = el.at("bbox");
    e.bbox = Bbox{b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
    e.clickable = el.at("clickable").get<bool>();
    e.focused = el.value("focused", false);
    s.elements.push_back(std::move(e));
  }
  return s;
}

Json history_to_json(const std::vector<HistoryEntry>& history) {
  Json arr = Json::array();
  for (const auto& h : history) {
    Json e;
    e["action-type"] = h.action_type;
    if (h.target_descriptor) e["target-descriptor"] = *h.target_descriptor;
    if (h.text_payload) e["text-payload"] = *h.text_payload;
    arr.push_back(std::move(e));
  }
  return arr;
}

std::vector<HistoryEntry> history_from_json(const Json& j) {
  std::vector<HistoryEntry> out;
  for (const auto& e : j) {
    HistoryEntry h;
    h.action_type = e.at("action-type").get<std::string>();
    if (e.contains("target-descriptor")) h.target_descriptor = e["target-descriptor"].get<std::string>();
    if (e.contains("text-payload")) h.text_payload = e["text-payload"].get<std::string>();
    out.push_back(std::move(h));
  }
  return out;
}

namespace {

std::string fingerprint_hex(uint64_t fp) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fp));
  return buf;
}

}  // namespace

Json trajectory_to_json(const Trajectory& trajectory) {
  Json j;
  Json inst;
  inst["template-id"] = trajectory.instance.template_id;
  inst["seed"] = trajectory.instance.seed;
  Json params;
  for (const auto& [k, v] : trajectory.instance.params) params[k] = v;
  inst["params"] = std::move(params);
  inst["goal"] = trajectory.instance.goal;
  inst["max-steps"] = trajectory.instance.max_steps;
  j["instance"] = std::move(inst);

  Json steps = Json::array();
  for (const auto& s : trajectory.steps) {
    Json step;
    step["fingerprint"] = fingerprint_hex(observation_fingerprint(s.screen_before));
    step["screen"] = screen_to_json(s.screen_before);
    step["action"] = serialize_action(s.action);
    step["reward"] = s.reward;
    steps.push_back(std::move(step));
  }
  j["steps"] = std::move(steps);
  j["return"] = trajectory.ret;
  return j;
}

Trajectory trajectory_from_json(const Json& j) {
  Trajectory t;
  const auto& inst = j.at("instance");
  t.instance.template_id = inst.at("template-id").get<std::string>();
  t.instance.seed = inst.at("seed").get<uint64_t>();
  for (const auto& [k, v] : inst.at("params").items()) {
    t.instance.params[k] = v.get<std::string>();
  }
  t.instance.goal = inst.at("goal").get<std::string>();
  t.instance.max_steps = inst.at("max-steps").get<int>();
  t.ret = j.at("return").get<int>();

  // prompts are not stored; rebuild them from the replayed history
  std::vector<HistoryEntry> history;
  for (const auto& sj : j.at("steps")) {
    StepRecord s;
    s.screen_before = screen_from_json(sj.at("screen"));
    s.action = parse_action(sj.at("action").get<std::string>());
    s.reward = sj.at("reward").get<int>();
    s.prompt = build_prompt(t.instance.goal, truncate_history(history), s.screen_before);
    HistoryEntry entry;
    try {
      entry = to_history_entry(s.action, s.screen_before);
    } catch (const IndexOutOfRange&) {
      entry.action_type = to_string(s.action.kind);
      entry.target_descriptor = "unknown ''";
    }
    history.push_back(std::move(entry));
    t.steps.push_back(std::move(s));
  }
  return t;
}

Json report_to_json(const EpisodeReport& report) {
  Json j;
  j["ticket-id"] = report.ticket_id;
  j["trajectory"] = trajectory_to_json(report.trajectory);
  j["wall-time"] = report.wall_time_s;
  j["inference-times"] = report.inference_times_s;
  return j;
}

EpisodeReport report_from_json(const Json& j) {
  EpisodeReport r;
  r.ticket_id = j.at("ticket-id").get<std::string>();
  r.trajectory = trajectory_from_json(j.at("trajectory"));
  r.wall_time_s = j.at("wall-time").get<double>();
  r.inference_times_s = j.at("inference-times").get<std::vector<double>>();
  return r;
}

}  // namespace rftforge
