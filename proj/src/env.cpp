#include "rftforge/env.hpp"

#include <algorithm>
#include <regex>
#include <sstream>
#include <utility>

#include "rftforge/rng.hpp"

namespace rftforge {

const char* to_string(Difficulty d) {
  switch (d) {
    case Difficulty::Easy: return "easy";
    case Difficulty::Medium: return "medium";
    case Difficulty::Hard: return "hard";
  }
  return "easy";
}

namespace {

constexpr char kItemSep = '\x1e';
constexpr char kFieldSep = '\x1f';
constexpr int kScreenW = 1080;
constexpr int kScreenH = 2400;

std::vector<std::string> split_list(const std::string& joined) {
  std::vector<std::string> out;
  if (joined.empty()) return out;
  size_t start = 0;
  while (true) {
    size_t pos = joined.find(kItemSep, start);
    if (pos == std::string::npos) {
      out.push_back(joined.substr(start));
      return out;
    }
    out.push_back(joined.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) out += kItemSep;
    out += items[i];
  }
  return out;
}

std::pair<std::string, std::string> split_pair(const std::string& record) {
  size_t pos = record.find(kFieldSep);
  if (pos == std::string::npos) return {record, ""};
  return {record.substr(0, pos), record.substr(pos + 1)};
}

std::string make_pair_record(const std::string& a, const std::string& b) {
  return a + kFieldSep + b;
}

bool list_contains(const std::string& joined, const std::string& item) {
  for (const auto& v : split_list(joined)) {
    if (v == item) return true;
  }
  return false;
}

void list_remove(StateMap& st, const std::string& key, const std::string& item) {
  auto items = split_list(st[key]);
  items.erase(std::remove(items.begin(), items.end(), item), items.end());
  st[key] = join_list(items);
}

void list_append(StateMap& st, const std::string& key, const std::string& item) {
  auto items = split_list(st[key]);
  items.push_back(item);
  st[key] = join_list(items);
}

bool pair_list_contains(const std::string& joined, const std::string& a, const std::string& b) {
  for (const auto& rec : split_list(joined)) {
    auto [x, y] = split_pair(rec);
    if (x == a && y == b) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Screen construction
// ---------------------------------------------------------------------------

class ScreenBuilder {
 public:
  explicit ScreenBuilder(std::string id) {
    screen_.id = std::move(id);
    screen_.width = kScreenW;
    screen_.height = kScreenH;
  }

  ScreenBuilder& add(std::string type, std::string text, bool clickable, bool focused = false) {
    UiElement e;
    e.type = std::move(type);
    e.text = std::move(text);
    e.bbox = Bbox{40, y_, kScreenW - 40, y_ + 96};
    e.clickable = clickable;
    e.focused = focused;
    y_ += 120;
    screen_.elements.push_back(std::move(e));
    return *this;
  }

  ScreenBuilder& label(std::string text) { return add("label", std::move(text), false); }
  ScreenBuilder& button(std::string text) { return add("button", std::move(text), true); }
  ScreenBuilder& item(std::string text) { return add("list-item", std::move(text), true); }
  ScreenBuilder& tab(std::string text) { return add("tab", std::move(text), true); }
  ScreenBuilder& toggle(std::string text) { return add("toggle", std::move(text), true); }

  ScreenBuilder& field(const StateMap& st, const std::string& key, const std::string& placeholder) {
    const std::string& content = st.count(key) ? st.at(key) : std::string();
    bool focused = st.count("focus") && st.at("focus") == key;
    return add("text-field", content.empty() ? placeholder : content, true, focused);
  }

  UiScreen take() { return std::move(screen_); }

 private:
  UiScreen screen_;
  int y_ = 40;
};

const std::vector<std::string>& app_names() {
  static const std::vector<std::string> apps = {
      "Clock", "Contacts", "Expenses", "Files", "Messages", "Recipes", "Recorder", "Settings"};
  return apps;
}

std::string app_root(const StateMap& st, const std::string& app) {
  if (app == "Clock") return "clock.timer";
  if (app == "Contacts") return "contacts.list";
  if (app == "Expenses") return "expenses.list";
  if (app == "Files") return "files.list";
  if (app == "Messages") return "sms.list";
  if (app == "Recipes") return "recipes.list";
  if (app == "Settings") return "settings.main";
  if (app == "Recorder") {
    const std::string phase = st.count("rec.phase") ? st.at("rec.phase") : "idle";
    if (phase == "rec") return "recorder.recording";
    if (phase == "save") return "recorder.save";
    return "recorder.idle";
  }
  return "";
}

void goto_screen(StateMap& st, const std::string& id) {
  st["screen"] = id;
  st["focus"] = "";
}

void open_app(StateMap& st, const std::string& app) {
  std::string root = app_root(st, app);
  if (root.empty()) return;  // unknown app: ineffective
  goto_screen(st, root);
  if (app == "Recipes") st["rscroll"] = "0";
  if (root == "recorder.save") st["focus"] = "rec.fname";
}

UiScreen build_screen(const StateMap& st) {
  const std::string& id = st.at("screen");

  if (id == "home") {
    ScreenBuilder b(id);
    b.label("Launcher");
    for (const auto& app : app_names()) b.add("icon", app, true);
    return b.take();
  }

  // Contacts
  if (id == "contacts.list") {
    ScreenBuilder b(id);
    b.label("Contacts");
    for (const auto& rec : split_list(st.at("contacts"))) b.item(split_pair(rec).first);
    b.button("New contact");
    return b.take();
  }
  if (id == "contacts.new") {
    ScreenBuilder b(id);
    b.label("New contact");
    b.field(st, "form.name", "Name");
    b.field(st, "form.phone", "Phone");
    b.button("Save");
    b.button("Cancel");
    return b.take();
  }
  if (id == "contacts.detail") {
    const std::string& name = st.at("detail.contact");
    std::string phone;
    for (const auto& rec : split_list(st.at("contacts"))) {
      auto [n, p] = split_pair(rec);
      if (n == name) phone = p;
    }
    ScreenBuilder b(id);
    b.label(name);
    b.label(phone);
    b.button("Delete contact");
    return b.take();
  }
  if (id == "contacts.menu") {
    ScreenBuilder b(id);
    b.label("Contact: " + st.at("menu.contact"));
    b.button("Delete");
    b.button("Cancel");
    return b.take();
  }
  if (id == "contacts.confirm") {
    ScreenBuilder b(id);
    b.label("Delete " + st.at("menu.contact") + "?");
    b.button("Cancel");
    b.button("Confirm");
    return b.take();
  }

  // Messages
  if (id == "sms.list") {
    ScreenBuilder b(id);
    b.label("Messages");
    for (const auto& name : split_list(st.at("threads"))) b.item(name);
    b.button("New message");
    return b.take();
  }
  if (id == "sms.thread") {
    ScreenBuilder b(id);
    b.label("Conversation with " + st.at("thread"));
    b.button("Archive");
    b.button("Delete");
    return b.take();
  }
  if (id == "sms.menu") {
    ScreenBuilder b(id);
    b.label("Thread: " + st.at("menu.thread"));
    b.button("Archive");
    b.button("Delete");
    b.button("Cancel");
    return b.take();
  }
  if (id == "sms.compose") {
    ScreenBuilder b(id);
    b.label("New message");
    b.field(st, "form.to", "To");
    b.field(st, "form.msg", "Message");
    b.button("Send");
    b.button("Cancel");
    return b.take();
  }

  // Clock
  if (id == "clock.timer") {
    ScreenBuilder b(id);
    b.tab("Timer");
    b.tab("Stopwatch");
    b.field(st, "timer.minutes", "Minutes");
    b.button("Start");
    b.label(st.at("timer.running") == "1" ? "Timer running" : "Timer idle");
    return b.take();
  }
  if (id == "clock.stopwatch") {
    ScreenBuilder b(id);
    b.tab("Timer");
    b.tab("Stopwatch");
    b.button("Start");
    b.button("Reset");
    b.label(st.at("sw.running") == "1" ? "Stopwatch running" : "Stopwatch stopped");
    return b.take();
  }

  // Settings
  if (id == "settings.main") {
    ScreenBuilder b(id);
    b.label("Settings");
    b.toggle("Wi-Fi: " + st.at("wifi"));
    b.toggle("Bluetooth: " + st.at("bluetooth"));
    b.toggle("Airplane mode: " + st.at("airplane"));
    b.toggle("Battery saver: " + st.at("saver"));
    return b.take();
  }

  // Files
  if (id == "files.list") {
    ScreenBuilder b(id);
    b.label("Files");
    for (const auto& name : split_list(st.at("files"))) b.item(name);
    return b.take();
  }
  if (id == "files.view") {
    ScreenBuilder b(id);
    b.label("Viewing " + st.at("view.file"));
    return b.take();
  }
  if (id == "files.menu") {
    ScreenBuilder b(id);
    b.label("File: " + st.at("menu.file"));
    b.button("Rename");
    b.button("Delete");
    b.button("Cancel");
    return b.take();
  }
  if (id == "files.rename") {
    ScreenBuilder b(id);
    b.label("Rename " + st.at("menu.file"));
    b.field(st, "form.newname", "New name");
    b.button("OK");
    b.button("Cancel");
    return b.take();
  }

  // Expenses
  if (id == "expenses.list") {
    ScreenBuilder b(id);
    b.label("Expenses");
    b.label("Lunch 9.50");
    b.label("Bus ticket 2.75");
    b.button("Add expense");
    return b.take();
  }
  if (id == "expenses.add") {
    ScreenBuilder b(id);
    b.label("New expense");
    b.field(st, "form.amount", "Amount");
    b.field(st, "form.note", "Note");
    b.button("Save");
    b.button("Cancel");
    return b.take();
  }

  // Recipes
  if (id == "recipes.list") {
    auto items = split_list(st.at("recipes"));
    int s = std::stoi(st.at("rscroll"));
    int lo = 3 * s;
    int hi = std::min<int>(lo + 4, static_cast<int>(items.size()));
    ScreenBuilder b(id);
    b.label("Recipes");
    for (int i = lo; i < hi; ++i) b.item(items[static_cast<size_t>(i)]);
    return b.take();
  }
  if (id == "recipes.detail") {
    ScreenBuilder b(id);
    b.label(st.at("detail.recipe"));
    b.button("Delete");
    b.button("Share");
    return b.take();
  }
  if (id == "recipes.confirm") {
    ScreenBuilder b(id);
    b.label("Delete " + st.at("detail.recipe") + "?");
    b.button("Cancel");
    b.button("Delete forever");
    return b.take();
  }

  // Recorder
  if (id == "recorder.idle") {
    ScreenBuilder b(id);
    b.label("Recorder ready");
    if (!st.at("rec.saved").empty()) b.label("Last saved: " + st.at("rec.saved"));
    b.button("Record");
    return b.take();
  }
  if (id == "recorder.recording") {
    ScreenBuilder b(id);
    b.label("Recording...");
    b.button("Stop");
    return b.take();
  }
  if (id == "recorder.save") {
    ScreenBuilder b(id);
    b.label("Save recording");
    b.field(st, "rec.fname", "Filename");
    b.button("Save");
    b.button("Discard");
    return b.take();
  }
  if (id == "recorder.save.menu") {
    ScreenBuilder b(id);
    b.label("Text options");
    if (st.at("rec.sel") == "1") {
      b.button("Delete");
      b.button("Copy");
      b.button("Cancel");
    } else {
      b.button("Select all");
      b.button("Cancel");
    }
    return b.take();
  }

  ScreenBuilder b("home");
  b.label("Launcher");
  for (const auto& app : app_names()) b.add("icon", app, true);
  return b.take();
}

// ---------------------------------------------------------------------------
// Transitions
// ---------------------------------------------------------------------------

void navigate_back_state(StateMap& st) {
  const std::string id = st.at("screen");
  auto to = [&](const char* target) { goto_screen(st, target); };
  if (id == "contacts.new" || id == "contacts.menu" || id == "contacts.confirm" ||
      id == "contacts.detail") {
    to("contacts.list");
  } else if (id == "sms.thread" || id == "sms.menu" || id == "sms.compose") {
    to("sms.list");
  } else if (id == "files.menu" || id == "files.rename" || id == "files.view") {
    to("files.list");
  } else if (id == "expenses.add") {
    to("expenses.list");
  } else if (id == "recipes.detail") {
    to("recipes.list");
  } else if (id == "recipes.confirm") {
    to("recipes.detail");
  } else if (id == "recorder.save.menu") {
    goto_screen(st, "recorder.save");
    st["focus"] = "rec.fname";
  } else if (id == "recorder.save") {
    st["rec.phase"] = "idle";
    to("recorder.idle");
  } else if (id == "recorder.recording") {
    // recording continues; back is ignored
  } else if (id != "home") {
    to("home");
  }
}

void handle_scroll(StateMap& st, ActionKind kind) {
  if (st.at("screen") != "recipes.list") return;
  int s = std::stoi(st.at("rscroll"));
  if (kind == ActionKind::ScrollDown) s = std::min(s + 1, 3);
  if (kind == ActionKind::ScrollUp) s = std::max(s - 1, 0);
  st["rscroll"] = std::to_string(s);
}

void handle_input(StateMap& st, const std::string& text) {
  const std::string& focus = st.at("focus");
  if (focus.empty()) return;
  st[focus] += text;  // typing inserts after any existing content
}

void archive_thread(StateMap& st, const std::string& name) {
  if (!list_contains(st.at("threads"), name)) return;
  list_remove(st, "threads", name);
  list_append(st, "archived", name);
}

void handle_press(StateMap& st, int clickable_index, const UiElement& el, bool long_press) {
  const std::string id = st.at("screen");

  if (id == "home") {
    if (el.type == "icon") open_app(st, el.text);
    return;
  }

  if (id == "contacts.list") {
    if (el.type == "list-item") {
      if (long_press) {
        st["menu.contact"] = el.text;
        goto_screen(st, "contacts.menu");
      } else {
        st["detail.contact"] = el.text;
        goto_screen(st, "contacts.detail");
      }
    } else if (el.text == "New contact") {
      st["form.name"] = "";
      st["form.phone"] = "";
      goto_screen(st, "contacts.new");
    }
    return;
  }
  if (id == "contacts.new") {
    if (clickable_index == 0) {
      st["focus"] = "form.name";
    } else if (clickable_index == 1) {
      st["focus"] = "form.phone";
    } else if (el.text == "Save") {
      if (!st.at("form.name").empty()) {
        list_append(st, "contacts", make_pair_record(st.at("form.name"), st.at("form.phone")));
        goto_screen(st, "contacts.list");
      }
    } else if (el.text == "Cancel") {
      goto_screen(st, "contacts.list");
    }
    return;
  }
  if (id == "contacts.detail") {
    if (el.text == "Delete contact") {
      st["menu.contact"] = st.at("detail.contact");
      goto_screen(st, "contacts.confirm");
    }
    return;
  }
  if (id == "contacts.menu") {
    if (el.text == "Delete") {
      goto_screen(st, "contacts.confirm");
    } else if (el.text == "Cancel") {
      goto_screen(st, "contacts.list");
    }
    return;
  }
  if (id == "contacts.confirm") {
    if (el.text == "Confirm") {
      auto items = split_list(st.at("contacts"));
      items.erase(std::remove_if(items.begin(), items.end(),
                                 [&](const std::string& rec) {
                                   return split_pair(rec).first == st.at("menu.contact");
                                 }),
                  items.end());
      st["contacts"] = join_list(items);
      goto_screen(st, "contacts.list");
    } else if (el.text == "Cancel") {
      goto_screen(st, "contacts.list");
    }
    return;
  }

  if (id == "sms.list") {
    if (el.type == "list-item") {
      if (long_press) {
        st["menu.thread"] = el.text;
        goto_screen(st, "sms.menu");
      } else {
        st["thread"] = el.text;
        goto_screen(st, "sms.thread");
      }
    } else if (el.text == "New message") {
      st["form.to"] = "";
      st["form.msg"] = "";
      goto_screen(st, "sms.compose");
    }
    return;
  }
  if (id == "sms.thread") {
    if (el.text == "Archive") {
      archive_thread(st, st.at("thread"));
      goto_screen(st, "sms.list");
    } else if (el.text == "Delete") {
      list_remove(st, "threads", st.at("thread"));
      goto_screen(st, "sms.list");
    }
    return;
  }
  if (id == "sms.menu") {
    if (el.text == "Archive") {
      archive_thread(st, st.at("menu.thread"));
      goto_screen(st, "sms.list");
    } else if (el.text == "Delete") {
      list_remove(st, "threads", st.at("menu.thread"));
      goto_screen(st, "sms.list");
    } else if (el.text == "Cancel") {
      goto_screen(st, "sms.list");
    }
    return;
  }
  if (id == "sms.compose") {
    if (clickable_index == 0) {
      st["focus"] = "form.to";
    } else if (clickable_index == 1) {
      st["focus"] = "form.msg";
    } else if (el.text == "Send") {
      if (!st.at("form.to").empty() && !st.at("form.msg").empty()) {
        list_append(st, "sent", make_pair_record(st.at("form.to"), st.at("form.msg")));
        goto_screen(st, "sms.list");
      }
    } else if (el.text == "Cancel") {
      goto_screen(st, "sms.list");
    }
    return;
  }

  if (id == "clock.timer") {
    if (el.type == "tab" && el.text == "Stopwatch") {
      goto_screen(st, "clock.stopwatch");
    } else if (clickable_index == 2) {
      st["focus"] = "timer.minutes";
    } else if (el.text == "Start") {
      if (!st.at("timer.minutes").empty()) st["timer.running"] = "1";
    }
    return;
  }
  if (id == "clock.stopwatch") {
    if (el.type == "tab" && el.text == "Timer") {
      goto_screen(st, "clock.timer");
    } else if (el.text == "Start") {
      st["sw.running"] = "1";
    } else if (el.text == "Reset") {
      st["sw.running"] = "0";
    }
    return;
  }

  if (id == "settings.main") {
    auto flip = [&](const char* key) { st[key] = st.at(key) == "on" ? "off" : "on"; };
    if (clickable_index == 0) flip("wifi");
    if (clickable_index == 1) flip("bluetooth");
    if (clickable_index == 2) flip("airplane");
    if (clickable_index == 3) flip("saver");
    return;
  }

  if (id == "files.list") {
    if (el.type == "list-item") {
      if (long_press) {
        st["menu.file"] = el.text;
        goto_screen(st, "files.menu");
      } else {
        st["view.file"] = el.text;
        goto_screen(st, "files.view");
      }
    }
    return;
  }
  if (id == "files.menu") {
    if (el.text == "Rename") {
      st["form.newname"] = "";
      goto_screen(st, "files.rename");
      st["focus"] = "form.newname";
    } else if (el.text == "Delete") {
      list_remove(st, "files", st.at("menu.file"));
      goto_screen(st, "files.list");
    } else if (el.text == "Cancel") {
      goto_screen(st, "files.list");
    }
    return;
  }
  if (id == "files.rename") {
    if (clickable_index == 0) {
      st["focus"] = "form.newname";
    } else if (el.text == "OK") {
      if (!st.at("form.newname").empty()) {
        auto items = split_list(st.at("files"));
        for (auto& f : items) {
          if (f == st.at("menu.file")) f = st.at("form.newname");
        }
        st["files"] = join_list(items);
        goto_screen(st, "files.list");
      }
    } else if (el.text == "Cancel") {
      goto_screen(st, "files.list");
    }
    return;
  }

  if (id == "expenses.list") {
    if (el.text == "Add expense") {
      st["form.amount"] = "";
      st["form.note"] = "";
      goto_screen(st, "expenses.add");
      st["focus"] = "form.amount";
    }
    return;
  }
  if (id == "expenses.add") {
    if (clickable_index == 0) {
      st["focus"] = "form.amount";
    } else if (clickable_index == 1) {
      st["focus"] = "form.note";
    } else if (el.text == "Save") {
      if (!st.at("form.amount").empty()) {
        list_append(st, "expenses", make_pair_record(st.at("form.amount"), st.at("form.note")));
        goto_screen(st, "expenses.list");
      }
    } else if (el.text == "Cancel") {
      goto_screen(st, "expenses.list");
    }
    return;
  }

  if (id == "recipes.list") {
    if (el.type == "list-item") {
      st["detail.recipe"] = el.text;
      goto_screen(st, "recipes.detail");
    }
    return;
  }
  if (id == "recipes.detail") {
    if (el.text == "Delete") goto_screen(st, "recipes.confirm");
    // Share is inert
    return;
  }
  if (id == "recipes.confirm") {
    if (el.text == "Delete forever") {
      list_remove(st, "recipes", st.at("detail.recipe"));
      st["rscroll"] = "0";
      goto_screen(st, "recipes.list");
    } else if (el.text == "Cancel") {
      goto_screen(st, "recipes.detail");
    }
    return;
  }

  if (id == "recorder.idle") {
    if (el.text == "Record") {
      st["rec.phase"] = "rec";
      goto_screen(st, "recorder.recording");
    }
    return;
  }
  if (id == "recorder.recording") {
    if (el.text == "Stop") {
      st["rec.phase"] = "save";
      st["rec.fname"] = "recording_1";
      st["rec.sel"] = "0";
      goto_screen(st, "recorder.save");
      st["focus"] = "rec.fname";
    }
    return;
  }
  if (id == "recorder.save") {
    if (clickable_index == 0) {
      if (long_press) {
        goto_screen(st, "recorder.save.menu");
      } else {
        st["focus"] = "rec.fname";
      }
    } else if (el.text == "Save") {
      st["rec.saved"] = st.at("rec.fname");
      st["rec.phase"] = "idle";
      goto_screen(st, "recorder.idle");
    } else if (el.text == "Discard") {
      st["rec.phase"] = "idle";
      goto_screen(st, "recorder.idle");
    }
    return;
  }
  if (id == "recorder.save.menu") {
    if (el.text == "Select all") {
      st["rec.sel"] = "1";
    } else if (el.text == "Delete") {
      st["rec.fname"] = "";
      st["rec.sel"] = "0";
      goto_screen(st, "recorder.save");
      st["focus"] = "rec.fname";
    } else if (el.text == "Cancel") {
      st["rec.sel"] = "0";
      goto_screen(st, "recorder.save");
      st["focus"] = "rec.fname";
    }
    // Copy is inert
    return;
  }
}

void default_state(StateMap& st) {
  st["screen"] = "home";
  st["focus"] = "";
  st["contacts"] = join_list({make_pair_record("Dana Fox", "+15550100001"),
                              make_pair_record("Liam Reed", "+15550100002")});
  st["threads"] = join_list({"Dana Fox", "Liam Reed"});
  st["archived"] = "";
  st["sent"] = "";
  st["form.name"] = "";
  st["form.phone"] = "";
  st["form.to"] = "";
  st["form.msg"] = "";
  st["timer.minutes"] = "";
  st["timer.running"] = "0";
  st["sw.running"] = "0";
  st["wifi"] = "on";
  st["bluetooth"] = "off";
  st["airplane"] = "off";
  st["saver"] = "off";
  st["files"] = join_list({"budget.xlsx", "holiday.png", "notes.txt"});
  st["menu.file"] = "";
  st["form.newname"] = "";
  st["expenses"] = "";
  st["form.amount"] = "";
  st["form.note"] = "";
  st["recipes"] = join_list({"Apple Pie", "Bean Chili", "Carrot Soup", "Date Loaf",
                             "Egg Fried Rice", "Falafel Wrap", "Greek Salad", "Herb Bread",
                             "Onion Tart", "Plum Crumble", "Quince Jam"});
  st["rscroll"] = "0";
  st["detail.recipe"] = "";
  st["rec.phase"] = "idle";
  st["rec.fname"] = "";
  st["rec.sel"] = "0";
  st["rec.saved"] = "";
}

// ---------------------------------------------------------------------------
// Parameter generators
// ---------------------------------------------------------------------------

const std::vector<std::string>& first_names() {
  static const std::vector<std::string> v = {"Sofija", "Amara", "Kenji",  "Noor",
                                             "Mateo",  "Ingrid", "Tariq", "Wei",
                                             "Paulo",  "Esther", "Ravi",  "Clara"};
  return v;
}

const std::vector<std::string>& surnames() {
  static const std::vector<std::string> v = {"Alves", "Okafor", "Tanaka", "Haddad",
                                             "Rossi", "Larsen", "Aziz",   "Chen",
                                             "Silva", "Abebe",  "Iyer",   "Novak"};
  return v;
}

std::string gen_param(const std::string& kind, std::mt19937_64& rng) {
  auto pick = [&](const std::vector<std::string>& pool) {
    return pool[static_cast<size_t>(rng() % pool.size())];
  };
  if (kind == "full-name") {
    return pick(first_names()) + " " + pick(surnames());
  }
  if (kind == "phone") {
    std::string out = "+1";
    out += static_cast<char>('2' + rng() % 8);
    for (int i = 0; i < 9; ++i) out += static_cast<char>('0' + rng() % 10);
    return out;
  }
  if (kind == "message") {
    static const std::vector<std::string> pool = {
        "Running late, see you soon", "Happy birthday!",       "Call me when you can",
        "The meeting moved to 3pm",   "Do not forget tickets", "Lunch tomorrow?",
        "Package arrived",            "Good luck today"};
    return pick(pool);
  }
  if (kind == "minutes") {
    static const std::vector<std::string> pool = {"5", "10", "15", "20", "25", "30", "45", "90"};
    return pick(pool);
  }
  if (kind == "file-old") {
    static const std::vector<std::string> pool = {
        "draft_v2.txt", "scan_001.pdf",  "song_mix.mp3",      "recipe_list.txt",
        "photo_edit.png", "meeting.ics", "invoice_march.pdf", "todo_old.txt"};
    return pick(pool);
  }
  if (kind == "file-new") {
    static const std::vector<std::string> pool = {
        "final_report.txt", "archive_2025.zip", "trip_plan.txt",  "summary.pdf",
        "mix_master.mp3",   "scan_keep.pdf",    "notes_2025.txt", "budget_q3.xlsx"};
    return pick(pool);
  }
  if (kind == "recording-name") {
    static const std::vector<std::string> pool = {
        "Interview Notes", "Band Practice", "Lecture 12",   "Field Memo",
        "Standup Recap",   "Choir Take 3",  "Podcast Draft", "Voice Diary"};
    return pick(pool);
  }
  if (kind == "recipe") {
    static const std::vector<std::string> pool = {
        "Saffron Risotto", "Miso Ramen",    "Lamb Tagine",   "Corn Chowder",
        "Kale Pesto Pasta", "Beet Salad",   "Mushroom Pie",  "Ginger Stir Fry"};
    return pick(pool);
  }
  if (kind == "amount") {
    std::string dollars = std::to_string(5 + rng() % 120);
    unsigned cents = static_cast<unsigned>(rng() % 100);
    std::string c = std::to_string(cents);
    if (c.size() < 2) c = "0" + c;
    return dollars + "." + c;
  }
  if (kind == "note") {
    static const std::vector<std::string> pool = {"team lunch",   "client gift", "taxi ride",
                                                  "office snacks", "printer ink", "parking fee",
                                                  "coffee beans",  "train ticket"};
    return pick(pool);
  }
  if (kind == "on-off") {
    return (rng() & 1) ? "on" : "off";
  }
  return "";
}

std::string fill_pattern(const std::string& pattern, const ParamMap& params) {
  std::string out;
  size_t i = 0;
  while (i < pattern.size()) {
    if (pattern[i] == '{') {
      size_t close = pattern.find('}', i);
      std::string name = pattern.substr(i + 1, close - i - 1);
      out += params.at(name);
      i = close + 1;
    } else {
      out += pattern[i++];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Oracle helpers
// ---------------------------------------------------------------------------

int find_clickable(const UiScreen& s, const std::string& type, const std::string& text) {
  int index = 0;
  for (const auto& e : s.elements) {
    if (!e.clickable) continue;
    if (e.type == type && e.text == text) return index;
    ++index;
  }
  return -1;
}

int find_button(const UiScreen& s, const std::string& text) {
  return find_clickable(s, "button", text);
}

Action click_or_home(int index) {
  return index >= 0 ? Action::click(index) : Action::navigate_home();
}

Action long_press_or_home(int index) {
  return index >= 0 ? Action::long_press(index) : Action::navigate_home();
}

// Drive a form field toward `value`: focus it, type into it, or signal
// completion by returning nullopt.
std::optional<Action> fill_field(const UiScreen& s, int field_clickable_index,
                                 const std::string& value) {
  const UiElement* field = s.clickable(field_clickable_index);
  if (field == nullptr) return Action::navigate_home();
  if (field->text == value) return std::nullopt;
  if (field->focused) return Action::input_text(value);
  return Action::click(field_clickable_index);
}

}  // namespace

// ---------------------------------------------------------------------------
// Template registry
// ---------------------------------------------------------------------------

namespace {

std::vector<TaskTemplate> make_registry() {
  std::vector<TaskTemplate> reg;

  {
    TaskTemplate t;
    t.id = "clock-stopwatch";
    t.app = "Clock";
    t.category = "utilities";
    t.difficulty = Difficulty::Easy;
    t.goal_pattern = "Start the stopwatch in the Clock app.";
    t.param_schema = {};
    t.optimal_length = 3;
    t.split = "task-unseen";
    t.init_state = [](StateMap&, const ParamMap&, std::mt19937_64&) {};
    t.success = [](const StateMap& st, const ParamMap&) { return st.at("sw.running") == "1"; };
    t.oracle_step = [](const ParamMap&, const UiScreen& s) -> Action {
      if (s.id == "home") return Action::open_app("Clock");
      if (s.id == "clock.timer") return click_or_home(find_clickable(s, "tab", "Stopwatch"));
      if (s.id == "clock.stopwatch") return click_or_home(find_button(s, "Start"));
      return Action::navigate_home();
    };
    reg.push_back(std::move(t));
  }

  {
    TaskTemplate t;
    t.id = "clock-timer";
    t.app = "Clock";
    t.category = "utilities";
    t.difficulty = Difficulty::Medium;
    t.goal_pattern = "Set a timer for '{minutes}' minutes.";
    t.param_schema = {{"minutes", "minutes"}};
    t.optimal_length = 4;
    t.split = "train";
    t.init_state = [](StateMap&, const ParamMap&, std::mt19937_64&) {};
    t.success = [](const StateMap& st, const ParamMap& p) {
      return st.at("timer.running") == "1" && st.at("timer.minutes") == p.at("minutes");
    };
    t.oracle_step = [](const ParamMap& p, const UiScreen& s) -> Action {
      if (s.id == "home") return Action::open_app("Clock");
      if (s.id == "clock.timer") {
        if (auto a = fill_field(s, 2, p.at("minutes"))) return *a;
        return click_or_home(find_button(s, "Start"));
      }
      if (s.id == "clock.stopwatch") return click_or_home(find_clickable(s, "tab", "Timer"));
      return Action::navigate_home();
    };
    reg.push_back(std::move(t));
  }

  {
    TaskTemplate t;
    t.id = "contacts-add";
    t.app = "Contacts";
    t.category = "communication";
    t.difficulty = Difficulty::Medium;
    t.goal_pattern = "Create a new contact for '{name}'. Their number is '{phone}'.";
    t.param_schema = {{"name", "full-name"}, {"phone", "phone"}};
    t.optimal_length = 7;
    t.split = "train";
    t.init_state = [](StateMap&, const ParamMap&, std::mt19937_64&) {};
    t.success = [](const StateMap& st, const ParamMap& p) {
      return pair_list_contains(st.at("contacts"), p.at("name"), p.at("phone"));
    };
    t.oracle_step = [](const ParamMap& p, const UiScreen& s) -> Action {
      if (s.id == "home") return Action::open_app("Contacts");
      if (s.id == "contacts.list") return click_or_home(find_button(s, "New contact"));
      if (s.id == "contacts.new") {
        if (auto a = fill_field(s, 0, p.at("name"))) return *a;
        if (auto a = fill_field(s, 1, p.at("phone"))) return *a;
        return click_or_home(find_button(s, "Save"));
      }
      return Action::navigate_home();
    };
    reg.push_back(std::move(t));
  }

  {
    TaskTemplate t;
    t.id = "contacts-delete";
    t.app = "Contacts";
    t.category = "communication";
    t.difficulty = Difficulty::Easy;
    t.goal_pattern = "Delete the contact named '{name}'.";
    t.param_schema = {{"name", "full-name"}};
    t.optimal_length = 4;
    t.split = "train";
    t.init_state = [](StateMap& st, const ParamMap& p, std::mt19937_64&) {
      list_append(st, "contacts", make_pair_record(p.at("name"), "+15550009999"));
    };
    t.success = [](const StateMap& st, const ParamMap& p) {
      for (const auto& rec : split_list(st.at("contacts"))) {
        if (split_pair(rec).first == p.at("name")) return false;
      }
      return true;
    };
    t.oracle_step = [](const ParamMap& p, const UiScreen& s) -> Action {
      if (s.id == "home") return Action::open_app("Contacts");
      if (s.id == "contacts.list")
        return long_press_or_home(find_clickable(s, "list-item", p.at("name")));
      if (s.id == "contacts.menu") return click_or_home(find_button(s, "Delete"));
      if (s.id == "contacts.confirm") return click_or_home(find_button(s, "Confirm"));
      return Action::navigate_home();
    };
    reg.push_back(std::move(t));
  }

  {
    TaskTemplate t;
    t.id = "expense-add";
    t.app = "Expenses";
    t.category = "lifestyle";
    t.difficulty = Difficulty::Medium;
    t.goal_pattern = "Log an expense of '{amount}' dollars with note '{note}'.";
    t.param_schema = {{"amount", "amount"}, {"note", "note"}};
    t.optimal_length = 6;
    t.split = "cat-unseen";
    t.init_state = [](StateMap&, const ParamMap&, std::mt19937_64&) {};
    t.success = [](const StateMap& st, const ParamMap& p) {
      return pair_list_contains(st.at("expenses"), p.at("amount"), p.at("note"));
    };
    t.oracle_step = [](const ParamMap& p, const UiScreen& s) -> Action {
      if (s.id == "home") return Action::open_app("Expenses");
      if (s.id == "expenses.list") return click_or_home(find_button(s, "Add expense"));
      if (s.id == "expenses.add") {
        if (auto a = fill_field(s, 0, p.at("amount"))) return *a;
        if (auto a = fill_field(s, 1, p.at("note"))) return *a;
        return click_or_home(find_button(s, "Save"));
      }
      return Action::navigate_home();
    };
    reg.push_back(std::move(t));
  }

  {
    TaskTemplate t;
    t.id = "files-rename";
    t.app = "Files";
    t.category = "media";
    t.difficulty = Difficulty::Easy;
    t.goal_pattern = "Rename the file '{old}' to '{new}'.";
    t.param_schema = {{"old", "file-old"}, {"new", "file-new"}};
    t.optimal_length = 5;
    t.split = "train";
    t.init_state = [](StateMap& st, const ParamMap& p, std::mt19937_64&) {
      list_append(st, "files", p.at("old"));
    };
    t.success = [](const StateMap& st, const ParamMap& p) {
      return list_contains(st.at("files"), p.at("new")) &&
             !list_contains(st.at("files"), p.at("old"));
    };
    t.oracle_step = [](const ParamMap& p, const UiScreen& s) -> Action {
      if (s.id == "home") return Action::open_app("Files");
      if (s.id == "files.list")
        return long_press_or_home(find_clickable(s, "list-item", p.at("old")));
      if (s.id == "files.menu") return click_or_home(find_button(s, "Rename"));
      if (s.id == "files.rename") {
        if (auto a = fill_field(s, 0, p.at("new"))) return *a;
        return click_or_home(find_button(s, "OK"));
      }
      return Action::navigate_home();
    };
    reg.push_back(std::move(t));
  }

  {
    TaskTemplate t;
    t.id = "recipes-delete";
    t.app = "Recipes";
    t.category = "lifestyle";
    t.difficulty = Difficulty::Hard;
    t.goal_pattern = "Delete the recipe for '{recipe}' from the Recipes app.";
    t.param_schema = {{"recipe", "recipe"}};
    t.optimal_length = 6;
    t.split = "cat-unseen";
    t.init_state = [](StateMap& st, const ParamMap& p, std::mt19937_64&) {
      auto items = split_list(st.at("recipes"));
      items.insert(items.begin() + 8, p.at("recipe"));
      st["recipes"] = join_list(items);
    };
    t.success = [](const StateMap& st, const ParamMap& p) {
      return !list_contains(st.at("recipes"), p.at("recipe"));
    };
    t.oracle_step = [](const ParamMap& p, const UiScreen& s) -> Action {
      if (s.id == "home") return Action::open_app("Recipes");
      if (s.id == "recipes.list") {
        int idx = find_clickable(s, "list-item", p.at("recipe"));
        if (idx >= 0) return Action::click(idx);
        return Action::scroll_down();
      }
      if (s.id == "recipes.detail") return click_or_home(find_button(s, "Delete"));
      if (s.id == "recipes.confirm") return click_or_home(find_button(s, "Delete forever"));
      return Action::navigate_home();
    };
    reg.push_back(std::move(t));
  }

  {
    TaskTemplate t;
    t.id = "recorder-save";
    t.app = "Recorder";
    t.category = "media";
    t.difficulty = Difficulty::Hard;
    t.goal_pattern = "Record an audio clip and save it with the name '{fname}'.";
    t.param_schema = {{"fname", "recording-name"}};
    t.optimal_length = 8;
    t.split = "app-unseen";
    t.init_state = [](StateMap&, const ParamMap&, std::mt19937_64&) {};
    t.success = [](const StateMap& st, const ParamMap& p) {
      return st.at("rec.saved") == p.at("fname");
    };
    t.oracle_step = [](const ParamMap& p, const UiScreen& s) -> Action {
      if (s.id == "home") return Action::open_app("Recorder");
      if (s.id == "recorder.idle") return click_or_home(find_button(s, "Record"));
      if (s.id == "recorder.recording") return click_or_home(find_button(s, "Stop"));
      if (s.id == "recorder.save") {
        const UiElement* field = s.clickable(0);
        if (field == nullptr) return Action::navigate_home();
        if (field->text == p.at("fname")) return click_or_home(find_button(s, "Save"));
        if (field->text == "Filename") {  // cleared; placeholder showing
          if (field->focused) return Action::input_text(p.at("fname"));
          return Action::click(0);
        }
        return Action::long_press(0);
      }
      if (s.id == "recorder.save.menu") {
        int del = find_button(s, "Delete");
        if (del >= 0) return Action::click(del);
        return click_or_home(find_button(s, "Select all"));
      }
      return Action::navigate_home();
    };
    reg.push_back(std::move(t));
  }

  {
    TaskTemplate t;
    t.id = "settings-bluetooth";
    t.app = "Settings";
    t.category = "utilities";
    t.difficulty = Difficulty::Easy;
    t.goal_pattern = "Turn Bluetooth '{state}' in the Settings app.";
    t.param_schema = {{"state", "on-off"}};
    t.optimal_length = 2;
    t.split = "task-unseen";
    t.init_state = [](StateMap& st, const ParamMap& p, std::mt19937_64&) {
      st["bluetooth"] = p.at("state") == "on" ? "off" : "on";
    };
    t.success = [](const StateMap& st, const ParamMap& p) {
      return st.at("bluetooth") == p.at("state");
    };
    t.oracle_step = [](const ParamMap&, const UiScreen& s) -> Action {
      if (s.id == "home") return Action::open_app("Settings");
      if (s.id == "settings.main") return Action::click(1);
      return Action::navigate_home();
    };
    reg.push_back(std::move(t));
  }

  {
    TaskTemplate t;
    t.id = "settings-wifi";
    t.app = "Settings";
    t.category = "utilities";
    t.difficulty = Difficulty::Easy;
    t.goal_pattern = "Turn Wi-Fi '{state}' in the Settings app.";
    t.param_schema = {{"state", "on-off"}};
    t.optimal_length = 2;
    t.split = "train";
    t.init_state = [](StateMap& st, const ParamMap& p, std::mt19937_64&) {
      st["wifi"] = p.at("state") == "on" ? "off" : "on";
    };
    t.success = [](const StateMap& st, const ParamMap& p) {
      return st.at("wifi") == p.at("state");
    };
    t.oracle_step = [](const ParamMap&, const UiScreen& s) -> Action {
      if (s.id == "home") return Action::open_app("Settings");
      if (s.id == "settings.main") return Action::click(0);
      return Action::navigate_home();
    };
    reg.push_back(std::move(t));
  }

  {
    TaskTemplate t;
    t.id = "sms-archive";
    t.app = "Messages";
    t.category = "communication";
    t.difficulty = Difficulty::Easy;
    t.goal_pattern = "Archive the conversation with '{name}'.";
    t.param_schema = {{"name", "full-name"}};
    t.optimal_length = 3;
    t.split = "task-unseen";
    t.init_state = [](StateMap& st, const ParamMap& p, std::mt19937_64&) {
      list_append(st, "threads", p.at("name"));
    };
    t.success = [](const StateMap& st, const ParamMap& p) {
      return list_contains(st.at("archived"), p.at("name"));
    };
    t.oracle_step = [](const ParamMap& p, const UiScreen& s) -> Action {
      if (s.id == "home") return Action::open_app("Messages");
      if (s.id == "sms.list")
        return long_press_or_home(find_clickable(s, "list-item", p.at("name")));
      if (s.id == "sms.menu") return click_or_home(find_button(s, "Archive"));
      return Action::navigate_home();
    };
    reg.push_back(std::move(t));
  }

  {
    TaskTemplate t;
    t.id = "sms-send";
    t.app = "Messages";
    t.category = "communication";
    t.difficulty = Difficulty::Medium;
    t.goal_pattern = "Send the message '{text}' to '{phone}'.";
    t.param_schema = {{"text", "message"}, {"phone", "phone"}};
    t.optimal_length = 7;
    t.split = "train";
    t.init_state = [](StateMap&, const ParamMap&, std::mt19937_64&) {};
    t.success = [](const StateMap& st, const ParamMap& p) {
      return pair_list_contains(st.at("sent"), p.at("phone"), p.at("text"));
    };
    t.oracle_step = [](const ParamMap& p, const UiScreen& s) -> Action {
      if (s.id == "home") return Action::open_app("Messages");
      if (s.id == "sms.list") return click_or_home(find_button(s, "New message"));
      if (s.id == "sms.compose") {
        if (auto a = fill_field(s, 0, p.at("phone"))) return *a;
        if (auto a = fill_field(s, 1, p.at("text"))) return *a;
        return click_or_home(find_button(s, "Send"));
      }
      return Action::navigate_home();
    };
    reg.push_back(std::move(t));
  }

  return reg;
}

}  // namespace

const std::vector<TaskTemplate>& registry() {
  static const std::vector<TaskTemplate> reg = make_registry();
  return reg;
}

const TaskTemplate& find_template(const std::string& template_id) {
  for (const auto& t : registry()) {
    if (t.id == template_id) return t;
  }
  throw UnknownTemplate("no task template named " + template_id);
}

std::optional<ParamMap> TaskTemplate::match_goal(const std::string& goal) const {
  std::string rx;
  std::vector<std::string> names;
  size_t i = 0;
  while (i < goal_pattern.size()) {
    char c = goal_pattern[i];
    if (c == '{') {
      size_t close = goal_pattern.find('}', i);
      names.push_back(goal_pattern.substr(i + 1, close - i - 1));
      rx += "([^']*)";
      i = close + 1;
    } else {
      if (std::string("\\^$.|?*+()[]{}").find(c) != std::string::npos) rx += '\\';
      rx += c;
      ++i;
    }
  }
  std::regex re(rx);
  std::smatch m;
  if (!std::regex_match(goal, m, re)) return std::nullopt;
  ParamMap params;
  for (size_t k = 0; k < names.size(); ++k) params[names[k]] = m[k + 1].str();
  return params;
}

TaskInstance instantiate(const std::string& template_id, uint64_t seed) {
  const TaskTemplate& t = find_template(template_id);
  std::mt19937_64 rng(derive_seed(seed, "params." + template_id));
  TaskInstance inst;
  inst.template_id = template_id;
  inst.seed = seed;
  for (const auto& [name, kind] : t.param_schema) {
    inst.params[name] = gen_param(kind, rng);
  }
  inst.goal = fill_pattern(t.goal_pattern, inst.params);
  inst.max_steps = std::max(2 * t.optimal_length, 10);
  return inst;
}

std::unique_ptr<Session> reset(const TaskInstance& instance) {
  const TaskTemplate& t = find_template(instance.template_id);
  return std::make_unique<Session>(t, instance);
}

std::vector<std::pair<std::string, Difficulty>> registry_manifest() {
  std::vector<std::pair<std::string, Difficulty>> out;
  for (const auto& t : registry()) out.emplace_back(t.id, t.difficulty);
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

// ---------------------------------------------------------------------------
// Session
// ---------------------------------------------------------------------------

Session::Session(const TaskTemplate& tpl, TaskInstance instance)
    : tpl_(tpl), instance_(std::move(instance)) {
  default_state(state_);
  std::mt19937_64 rng(derive_seed(instance_.seed, "hidden." + instance_.template_id));
  tpl_.init_state(state_, instance_.params, rng);
  screen_ = build_screen(state_);
}

StepOutcome Session::step(const Action& action) {
  if (done_) throw SessionClosed("episode for ticket " + instance_.template_id + " is over");
  if (action.has_target() && screen_.clickable(action.target) == nullptr) {
    throw IndexOutOfRange("target-element " + std::to_string(action.target) +
                          " not on screen " + screen_.id);
  }
  switch (action.kind) {
    case ActionKind::OpenApp:
      open_app(state_, action.app_name);
      break;
    case ActionKind::NavigateHome:
      goto_screen(state_, "home");
      break;
    case ActionKind::NavigateBack:
      navigate_back_state(state_);
      break;
    case ActionKind::Wait:
      break;
    case ActionKind::ScrollUp:
    case ActionKind::ScrollDown:
    case ActionKind::ScrollLeft:
    case ActionKind::ScrollRight:
      handle_scroll(state_, action.kind);
      break;
    case ActionKind::InputText:
      handle_input(state_, action.text);
      break;
    case ActionKind::Click:
    case ActionKind::LongPress: {
      const UiElement* el = screen_.clickable(action.target);
      handle_press(state_, action.target, *el, action.kind == ActionKind::LongPress);
      break;
    }
  }
  screen_ = build_screen(state_);
  return finish_step();
}

StepOutcome Session::burn_step() {
  if (done_) throw SessionClosed("episode for ticket " + instance_.template_id + " is over");
  return finish_step();
}

StepOutcome Session::finish_step() {
  ++steps_;
  int reward = 0;
  if (!succeeded_ && tpl_.success(state_, instance_.params)) {
    succeeded_ = true;
    reward = 1;
  }
  done_ = succeeded_ || steps_ >= instance_.max_steps;
  return {reward, done_};
}

}  // namespace rftforge
