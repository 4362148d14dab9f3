#include "slapred/learners/online.hpp"

#include <stdexcept>
#include <string>

namespace slapred {

std::string_view to_string(OnlineMethod m) {
  switch (m) {
    case OnlineMethod::sgd_logistic:
      return "sgd_logistic";
    case OnlineMethod::hoeffding_tree:
      return "hoeffding_tree";
    case OnlineMethod::oaue:
      return "oaue";
  }
  return "oaue";
}

OnlineMethod online_method_from_string(std::string_view name) {
  if (name == "sgd_logistic") return OnlineMethod::sgd_logistic;
  if (name == "hoeffding_tree") return OnlineMethod::hoeffding_tree;
  if (name == "oaue") return OnlineMethod::oaue;
  throw std::invalid_argument("unknown online method: " + std::string(name));
}

std::unique_ptr<OnlineClassifier> make_online_classifier(OnlineMethod method, const OnlineConfig& config) {
  switch (method) {
    case OnlineMethod::sgd_logistic:
      return std::make_unique<SgdLogistic>(config.sgd);
    case OnlineMethod::hoeffding_tree:
      return std::make_unique<HoeffdingTree>(config.tree);
    case OnlineMethod::oaue:
      return std::make_unique<Oaue>(config.oaue);
  }
  throw std::invalid_argument("unknown online method");
}

}  // namespace slapred
