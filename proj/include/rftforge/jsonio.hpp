#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "rftforge/action.hpp"
#include "rftforge/datapipe.hpp"
#include "rftforge/env.hpp"
#include "rftforge/screen.hpp"

namespace rftforge {

using Json = nlohmann::ordered_json;

Json screen_to_json(const UiScreen& screen);
UiScreen screen_from_json(const Json& j);

Json history_to_json(const std::vector<HistoryEntry>& history);
std::vector<HistoryEntry> history_from_json(const Json& j);

Json trajectory_to_json(const Trajectory& trajectory);
Trajectory trajectory_from_json(const Json& j);

Json report_to_json(const EpisodeReport& report);
EpisodeReport report_from_json(const Json& j);

}  // namespace rftforge
