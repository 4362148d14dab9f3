#include <cmath>

#include "doctest.h"
#include "slapred/evaluation.hpp"
#include "slapred/learners/offline.hpp"
#include "slapred/learners/sgd_logistic.hpp"
#include "support.hpp"

using namespace slapred;
using slapred::testing::accuracy;
using slapred::testing::two_clusters;

TEST_CASE("sigmoid") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(-800.0) == 0.0);
  CHECK(sigmoid(2.0) + sigmoid(-2.0) == doctest::Approx(1.0));
}

TEST_CASE("untrained model scores one half everywhere") {
  SgdLogistic m;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) CHECK(m.predict(slapred::testing::uniform_features(rng)).score == 0.5);
}

TEST_CASE("config validation") {
  SgdLogisticConfig c;
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.iterations_per_chunk = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("chunked SGD fits separable clusters like the batch fit") {
  const auto data = two_clusters(500, 2);
  SgdLogistic sgd;
  for (std::size_t i = 0; i < data.size(); i += 10) sgd.learn_chunk(std::span(data).subspan(i, 10));
  const double sgd_acc = accuracy(sgd, data);
  const auto batch = BatchLogistic::train(data);
  const double batch_acc = accuracy(batch, data);
  MESSAGE("sgd " << sgd_acc << ", batch " << batch_acc);
  CHECK(sgd_acc >= 0.95);
  CHECK(batch_acc >= 0.95);
  CHECK(std::abs(sgd_acc - batch_acc) <= 0.03);
}

TEST_CASE("repeated single positive sample raises its score") {
  SgdLogistic m;
  FeatureVector x;
  x[Feature::cpu_user] = 40.0;
  x[Feature::net_rx_kb] = 1200.0;
  const LabeledSample s{0, x, SlaLabel::violated};
  double prev = m.predict(x).score;
  for (int k = 0; k < 20; ++k) {
    m.learn_chunk(std::span(&s, 1));
    const double now = m.predict(x).score;
    CHECK(now > prev);
    prev = now;
  }
}

TEST_CASE("non-finite update rolls back and reports divergence") {
  SgdLogisticConfig c;
  c.standardize = false;
  c.learning_rate = 1e10;
  SgdLogistic m(c);
  FeatureVector small;
  small[Feature::cpu_user] = 1.0;
  const LabeledSample ok{0, small, SlaLabel::violated};
  m.learn_chunk(std::span(&ok, 1));
  const auto weights = m.weights();
  const double bias = m.bias();

  FeatureVector huge;
  huge[Feature::mem_used] = 1e300;
  const LabeledSample bad{1, huge, SlaLabel::conforming};
  CHECK_THROWS_AS(m.learn_chunk(std::span(&bad, 1)), DivergenceError);
  CHECK_THROWS_WITH(m.learn_chunk(std::span(&bad, 1)), "divergence");
  CHECK(m.weights() == weights);
  CHECK(m.bias() == bias);
}

TEST_CASE("batch logistic holdout on separable clusters") {
  const auto data = two_clusters(1000, 3);
  const auto r = holdout_evaluate(OfflineMethod::logistic, data, 0.7, 4);
  CHECK(r.metrics.ca >= 0.95);
  const auto model = BatchLogistic::train(data);
  CHECK(model.iterations() >= 1);
  CHECK(model.iterations() <= 10000);
  CHECK(std::isfinite(model.log_likelihood()));
}

TEST_CASE("batch logistic log-likelihood does not decrease with more iterations") {
  const auto data = two_clusters(300, 5);
  BatchLogisticConfig few;
  few.max_iterations = 5;
  BatchLogisticConfig many;
  many.max_iterations = 200;
  CHECK(BatchLogistic::train(data, many).log_likelihood() >= BatchLogistic::train(data, few).log_likelihood());
}
