#include "rftforge/action.hpp"

#include <json.hpp>

#include <map>
#include <utility>

namespace rftforge {

const char* to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::OpenApp: return "open-app";
    case ActionKind::Click: return "click";
    case ActionKind::LongPress: return "long-press";
    case ActionKind::InputText: return "input-text";
    case ActionKind::ScrollUp: return "scroll-up";
    case ActionKind::ScrollDown: return "scroll-down";
    case ActionKind::ScrollLeft: return "scroll-left";
    case ActionKind::ScrollRight: return "scroll-right";
    case ActionKind::NavigateHome: return "navigate-home";
    case ActionKind::NavigateBack: return "navigate-back";
    case ActionKind::Wait: return "wait";
  }
  return "wait";
}

Action Action::open_app(std::string name) {
  Action a;
  a.kind = ActionKind::OpenApp;
  a.app_name = std::move(name);
  return a;
}

Action Action::click(int index) {
  Action a;
  a.kind = ActionKind::Click;
  a.target = index;
  return a;
}

Action Action::long_press(int index) {
  Action a;
  a.kind = ActionKind::LongPress;
  a.target = index;
  return a;
}

Action Action::input_text(std::string text) {
  Action a;
  a.kind = ActionKind::InputText;
  a.text = std::move(text);
  return a;
}

namespace {
Action plain(ActionKind kind) {
  Action a;
  a.kind = kind;
  return a;
}
}  // namespace

Action Action::scroll_up() { return plain(ActionKind::ScrollUp); }
Action Action::scroll_down() { return plain(ActionKind::ScrollDown); }
Action Action::scroll_left() { return plain(ActionKind::ScrollLeft); }
Action Action::scroll_right() { return plain(ActionKind::ScrollRight); }
Action Action::navigate_home() { return plain(ActionKind::NavigateHome); }
Action Action::navigate_back() { return plain(ActionKind::NavigateBack); }
Action Action::wait() { return plain(ActionKind::Wait); }

std::string serialize_action(const Action& action) {
  nlohmann::ordered_json j;
  j["action-type"] = to_string(action.kind);
  switch (action.kind) {
    case ActionKind::OpenApp:
      j["app-name"] = action.app_name;
      break;
    case ActionKind::Click:
    case ActionKind::LongPress:
      j["target-element"] = action.target;
      break;
    case ActionKind::InputText:
      j["text"] = action.text;
      break;
    default:
      break;
  }
  return j.dump();
}

namespace {

const std::map<std::string, ActionKind>& kind_table() {
  static const std::map<std::string, ActionKind> table = {
      {"open-app", ActionKind::OpenApp},
      {"click", ActionKind::Click},
      {"long-press", ActionKind::LongPress},
      {"input-text", ActionKind::InputText},
      {"scroll-up", ActionKind::ScrollUp},
      {"scroll-down", ActionKind::ScrollDown},
      {"scroll-left", ActionKind::ScrollLeft},
      {"scroll-right", ActionKind::ScrollRight},
      {"navigate-home", ActionKind::NavigateHome},
      {"navigate-back", ActionKind::NavigateBack},
      {"wait", ActionKind::Wait},
  };
  return table;
}

}  // namespace

Action parse_action(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw MalformedAction("not a valid single-object action: " + line);
  }
  if (!j.is_object()) throw MalformedAction("action must be a JSON object");
  auto type_it = j.find("action-type");
  if (type_it == j.end() || !type_it->is_string()) {
    throw MalformedAction("missing or non-text action-type");
  }
  const std::string type = type_it->get<std::string>();
  auto kind_it = kind_table().find(type);
  if (kind_it == kind_table().end()) {
    throw UnknownActionType("unrecognized action-type: " + type);
  }
  const ActionKind kind = kind_it->second;

  std::size_t expected_fields = 1;
  Action a;
  a.kind = kind;
  switch (kind) {
    case ActionKind::OpenApp: {
      expected_fields = 2;
      auto it = j.find("app-name");
      if (it == j.end()) throw MissingField("app-name");
      if (!it->is_string()) throw MalformedAction("app-name must be text");
      a.app_name = it->get<std::string>();
      break;
    }
    case ActionKind::Click:
    case ActionKind::LongPress: {
      expected_fields = 2;
      auto it = j.find("target-element");
      if (it == j.end()) throw MissingField("target-element");
      if (!it->is_number_integer() || it->is_number_float()) {
        throw MalformedAction("target-element must be an integer");
      }
      long long v = it->get<long long>();
      if (v < 0) throw MalformedAction("target-element must be non-negative");
      a.target = static_cast<int>(v);
      break;
    }
    case ActionKind::InputText: {
      expected_fields = 2;
      auto it = j.find("text");
      if (it == j.end()) throw MissingField("text");
      if (!it->is_string()) throw MalformedAction("text must be text");
      a.text = it->get<std::string>();
      break;
    }
    default:
      break;
  }
  if (j.size() != expected_fields) {
    throw MalformedAction("unexpected fields for action-type " + type);
  }
  return a;
}

GroundedAction ground_action(const Action& action, const UiScreen& screen) {
  GroundedAction g;
  g.kind = action.kind;
  g.app_name = action.app_name;
  g.text = action.text;
  if (action.has_target()) {
    const UiElement* e = screen.clickable(action.target);
    if (e == nullptr) {
      throw IndexOutOfRange("target-element " + std::to_string(action.target) +
                            " not in clickable list of screen " + screen.id);
    }
    g.x = (e->bbox.left + e->bbox.right) / 2;
    g.y = (e->bbox.top + e->bbox.bottom) / 2;
  }
  return g;
}

HistoryEntry to_history_entry(const Action& action, const UiScreen& screen) {
  HistoryEntry entry;
  entry.action_type = to_string(action.kind);
  if (action.has_target()) {
    const UiElement* e = screen.clickable(action.target);
    if (e == nullptr) {
      throw IndexOutOfRange("target-element " + std::to_string(action.target) +
                            " not in clickable list of screen " + screen.id);
    }
    entry.target_descriptor = e->type + " '" + e->text + "'";
  } else if (action.kind == ActionKind::InputText) {
    entry.text_payload = action.text;
  } else if (action.kind == ActionKind::OpenApp) {
    entry.text_payload = action.app_name;
  }
  return entry;
}

std::string render_history_entry(const HistoryEntry& entry) {
  std::string out = entry.action_type;
  if (entry.target_descriptor) {
    out += ' ';
    out += *entry.target_descriptor;
  }
  if (entry.text_payload) {
    out += ' ';
    out += *entry.text_payload;
  }
  return out;
}

}  // namespace rftforge
