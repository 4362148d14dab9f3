#pragma once

#include <memory>
#include <string_view>

#include "slapred/learners/hoeffding_tree.hpp"
#include "slapred/learners/oaue.hpp"
#include "slapred/learners/sgd_logistic.hpp"

namespace slapred {

enum class OnlineMethod { sgd_logistic, hoeffding_tree, oaue };

std::string_view to_string(OnlineMethod m);
OnlineMethod online_method_from_string(std::string_view name);

struct OnlineConfig {
  SgdLogisticConfig sgd;
  HoeffdingTreeConfig tree;
  OaueConfig oaue;
};

std::unique_ptr<OnlineClassifier> make_online_classifier(OnlineMethod method, const OnlineConfig& config = {});

}  // namespace slapred
