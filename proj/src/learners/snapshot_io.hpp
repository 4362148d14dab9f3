#pragma once

#include <string_view>

#include "json.hpp"
#include "slapred/core.hpp"
#include "slapred/learners/hoeffding_tree.hpp"

namespace slapred {

nlohmann::json sample_to_json(const LabeledSample& s);
LabeledSample sample_from_json(const nlohmann::json& j);

nlohmann::json hoeffding_config_to_json(const HoeffdingTreeConfig& c);
HoeffdingTreeConfig hoeffding_config_from_json(const nlohmann::json& j);

/// Parses snapshot text and checks its kind and version tags.
nlohmann::json parse_snapshot(std::string_view text);
void expect_kind(const nlohmann::json& j, std::string_view kind);

}  // namespace slapred
