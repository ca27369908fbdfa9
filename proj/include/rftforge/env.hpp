#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rftforge/action.hpp"
#include "rftforge/screen.hpp"

namespace rftforge {

enum class Difficulty { Easy, Medium, Hard };

const char* to_string(Difficulty d);

// Episodes are undiscounted; the binary reward fires once, on success.
inline constexpr double kGamma = 1.0;

using ParamMap = std::map<std::string, std::string>;
using StateMap = std::map<std::string, std::string>;

struct TaskInstance {
  std::string template_id;
  uint64_t seed = 0;
  ParamMap params;
  std::string goal;
  int max_steps = 0;

  bool operator==(const TaskInstance&) const = default;
};

// A parameterized task family: a goal pattern, seeded generators, a screen
// graph rooted at the phone home screen, a success predicate over hidden
// state, and a scripted solver that finishes in exactly optimal_length steps.
struct TaskTemplate {
  std::string id;
  std::string app;
  std::string category;
  Difficulty difficulty = Difficulty::Easy;
  std::string goal_pattern;  // parameter slots written as {name}
  std::vector<std::pair<std::string, std::string>> param_schema;  // name -> generator kind
  int optimal_length = 1;
  std::string split;  // train | task-unseen | cat-unseen | app-unseen

  std::function<void(StateMap&, const ParamMap&, std::mt19937_64&)> init_state;
  std::function<bool(const StateMap&, const ParamMap&)> success;
  std::function<Action(const ParamMap&, const UiScreen&)> oracle_step;

  // Extracts the parameter map when `goal` matches goal_pattern.
  std::optional<ParamMap> match_goal(const std::string& goal) const;
};

struct StepRecord {
  UiScreen screen_before;
  std::string prompt;
  Action action;
  int reward = 0;

  bool operator==(const StepRecord&) const = default;
};

struct Trajectory {
  TaskInstance instance;
  std::vector<StepRecord> steps;
  int ret = 0;  // binary return

  int step_count() const { return static_cast<int>(steps.size()); }
  bool operator==(const Trajectory&) const = default;
};

struct StepOutcome {
  int reward = 0;
  bool done = false;
};

// One live episode. Single-owner: exactly one driver may call step().
class Session {
 public:
  Session(const TaskTemplate& tpl, TaskInstance instance);

  const UiScreen& screen() const { return screen_; }
  const TaskInstance& instance() const { return instance_; }
  bool done() const { return done_; }
  bool succeeded() const { return succeeded_; }
  int steps_taken() const { return steps_; }
  int horizon() const { return instance_.max_steps; }

  // Applies one action. Unknown or ineffective actions leave the screen
  // unchanged. Throws SessionClosed when the episode is over and
  // IndexOutOfRange when a click/long-press target does not exist; in the
  // latter case no step has been consumed (see burn_step).
  StepOutcome step(const Action& action);

  // Consumes one step without touching the screen. Used by drivers that treat
  // an invalid target as an ineffective action rather than a crash.
  StepOutcome burn_step();

 private:
  StepOutcome finish_step();

  const TaskTemplate& tpl_;
  TaskInstance instance_;
  StateMap state_;
  UiScreen screen_;
  int steps_ = 0;
  bool done_ = false;
  bool succeeded_ = false;
};

const std::vector<TaskTemplate>& registry();
const TaskTemplate& find_template(const std::string& template_id);

// Deterministic: identical (template-id, seed) yields identical instances.
TaskInstance instantiate(const std::string& template_id, uint64_t seed);

std::unique_ptr<Session> reset(const TaskInstance& instance);

// Full registry listing, sorted by template id.
std::vector<std::pair<std::string, Difficulty>> registry_manifest();

}  // namespace rftforge
