#include <doctest.h>

#include <cmath>

#include "attrprobe/error.hpp"
#include "attrprobe/fusion.hpp"
#include "fusion_tasks.hpp"

using namespace attrprobe;

namespace {

ResolvedExample tiny_example(const FusionConfig& config, Rng& rng, std::size_t words = 4) {
  ResolvedExample ex;
  for (int k = 0; k < 2; ++k) {
    ex.sequence[static_cast<std::size_t>(k)] = Eigen::VectorXd::Random(static_cast<Eigen::Index>(config.sequence_dim));
    for (std::size_t w = 0; w < words; ++w) {
      const long r = rng.uniform() < 0.3 ? -1 : static_cast<long>(rng.index(config.relations));
      ex.relations[static_cast<std::size_t>(k)].push_back(r);
    }
  }
  ex.gold = static_cast<int>(rng.index(2));
  return ex;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

TEST_CASE("zero relations and a zero classifier give even odds") {
  FusionConfig config{4, 30, 32, 6};
  FusionParams params = FusionParams::zeros(config);
  Rng rng(1);
  params.relation_embeddings.setRandom();
  FusionHead head(config, params);
  ResolvedExample ex;
  ex.sequence = {Eigen::VectorXd::Random(6), Eigen::VectorXd::Random(6)};
  ex.relations = {std::vector<long>{-1, -1, -1}, std::vector<long>{-1, -1}};
  auto p = head.probabilities(ex);
  CHECK(p[0] == 0.5);
  CHECK(p[1] == 0.5);
}

TEST_CASE("probabilities sum to one") {
  FusionConfig config{5, 6, 4, 3};
  Rng rng(2);
  auto head = FusionHead::initialize(config, rng);
  for (int i = 0; i < 1000; ++i) {
    auto ex = tiny_example(config, rng, 1 + rng.index(6));
    auto p = head.probabilities(ex);
    CHECK(std::abs(p[0] + p[1] - 1.0) < 1e-6);
  }
}

TEST_CASE("swapping answers swaps probabilities") {
  FusionConfig config{5, 6, 4, 3};
  Rng rng(3);
  auto head = FusionHead::initialize(config, rng);
  for (int i = 0; i < 50; ++i) {
    auto ex = tiny_example(config, rng);
    auto swapped = ex;
    std::swap(swapped.sequence[0], swapped.sequence[1]);
    std::swap(swapped.relations[0], swapped.relations[1]);
    auto p = head.probabilities(ex);
    auto q = head.probabilities(swapped);
    CHECK(p[0] == q[1]);
    CHECK(p[1] == q[0]);
  }
}

TEST_CASE("gradient matches central differences") {
  FusionConfig config{5, 4, 3, 3};
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    auto head = FusionHead::initialize(config, rng);
    auto ex = tiny_example(config, rng, 5);
    CHECK(oracle::fusion_gradient_error(head, ex) < 1e-4);
  }
}

TEST_CASE("input validation") {
  FusionConfig config{3, 4, 2, 2};
  Rng rng(5);
  auto head = FusionHead::initialize(config, rng);
  ResolvedExample ex;
  ex.sequence = {Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)};
  ex.relations = {std::vector<long>{}, std::vector<long>{0}};
  CHECK_THROWS_WITH_AS(head.probabilities(ex), doctest::Contains("empty prompt"), Error);
  ex.relations = {std::vector<long>{3}, std::vector<long>{0}};
  CHECK_THROWS_AS(head.probabilities(ex), Error);
  ex.relations = {std::vector<long>{0}, std::vector<long>{0}};
  ex.sequence[1] = Eigen::VectorXd::Zero(5);
  CHECK_THROWS_AS(head.probabilities(ex), Error);
  CHECK_THROWS(FusionHead(FusionConfig{4, 4, 2, 2}, FusionParams::zeros(config)));
}

TEST_CASE("first batch loss equals a hand-computed cross-entropy") {
  // One hidden unit, one-dimensional embeddings, one word per answer.
  FusionConfig config{1, 1, 1, 1};
  FusionParams p = FusionParams::zeros(config);
  p.relation_embeddings(0, 0) = 0.5;
  p.forward.input << 0.2, -0.1, 0.3, 0.4;
  p.forward.bias << 0.1, 0.0, -0.2, 0.05;
  p.backward.input << -0.3, 0.2, 0.1, 0.6;
  p.backward.bias << 0.0, 0.1, 0.2, -0.1;
  p.classifier << 0.7, 1.1, -0.9;
  p.classifier_bias = 0.25;

  auto lstm_step = [](double e, const Eigen::MatrixXd& W, const Eigen::VectorXd& b) {
    const double i = sigmoid(W(0, 0) * e + b[0]);
    const double g = std::tanh(W(2, 0) * e + b[2]);
    const double o = sigmoid(W(3, 0) * e + b[3]);
    const double c = i * g;  // previous cell is zero
    return o * std::tanh(c);
  };
  const double seq0 = 0.3, seq1 = -0.6;
  const double hf0 = lstm_step(0.5, p.forward.input, p.forward.bias);
  const double hb0 = lstm_step(0.5, p.backward.input, p.backward.bias);
  const double hf1 = lstm_step(0.0, p.forward.input, p.forward.bias);
  const double hb1 = lstm_step(0.0, p.backward.input, p.backward.bias);
  const double l0 = 0.7 * seq0 + 1.1 * hf0 - 0.9 * hb0 + 0.25;
  const double l1 = 0.7 * seq1 + 1.1 * hf1 - 0.9 * hb1 + 0.25;
  const double expected = -std::log(std::exp(l1) / (std::exp(l0) + std::exp(l1)));

  FusionExample ex;
  ex.id = "only";
  ex.answers[0].sequence = Eigen::VectorXd::Constant(1, seq0);
  ex.answers[0].word_relations = {{0}};
  ex.answers[1].sequence = Eigen::VectorXd::Constant(1, seq1);
  ex.answers[1].word_relations = {{}};
  ex.gold = 1;

  FusionTrainOptions options;
  options.epochs = 1;
  options.batch_size = 1;
  auto result = fusion_train(FusionHead(config, p), {ex}, {}, options);
  REQUIRE(result.batch_losses.size() == 1);
  CHECK(result.batch_losses[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(result.epochs[0].train_loss == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("training is seeded and reduces loss on the planted task") {
  auto train = oracle::planted_fusion(1, 200, false);
  auto dev = oracle::planted_fusion(2, 100, false);
  FusionTrainOptions options;
  options.epochs = 3;
  options.learning_rate = 0.5;
  options.seed = 7;
  auto a = fusion_train(oracle::planted_config(), train, dev, options);
  auto b = fusion_train(oracle::planted_config(), train, dev, options);
  CHECK(a.batch_losses == b.batch_losses);
  CHECK(a.head.params().flatten() == b.head.params().flatten());
  REQUIRE(a.epochs.size() == 3);
  CHECK(a.epochs.back().train_loss < a.epochs.front().train_loss);
  CHECK(training_log_csv(a.epochs).starts_with("epoch,train_loss,dev_accuracy\n1,"));
}

TEST_CASE("forward is deterministic given the rng stream") {
  auto data = oracle::planted_fusion(3, 20, false);
  Rng init(1);
  auto head = FusionHead::initialize(oracle::planted_config(), init);
  Rng r1(9), r2(9);
  for (const auto& ex : data) CHECK(head.forward(ex, r1) == head.forward(ex, r2));
}

TEST_CASE("fusion data parsing") {
  auto data = parse_fusion_data(
      R"({"id":"a","seq_embedding":[0.1,0.2],"per_word_relations":[[[0],[],[1,2]],[[2]]],"gold":1}
{"id":7,"seq_embedding":[[1,2],[3,4]],"per_word_relations":[[[]],[[0]]],"gold":0}
)",
      "f.jsonl");
  REQUIRE(data.size() == 2);
  CHECK(data[0].answers[1].sequence[1] == 0.2);
  CHECK(data[0].answers[0].word_relations.size() == 3);
  CHECK(data[0].answers[0].word_relations[2] == std::vector<std::size_t>{1, 2});
  CHECK(data[1].id == "7");
  CHECK(data[1].answers[1].sequence[0] == 3.0);
  CHECK_THROWS_AS(parse_fusion_data(R"({"seq_embedding":[1],"per_word_relations":[[[0]]],"gold":0})", "f"), ParseError);
  CHECK_THROWS_AS(parse_fusion_data(R"({"seq_embedding":[1],"per_word_relations":[[[0]],[[0]]],"gold":2})", "f"),
                  ParseError);
}

TEST_CASE("head serializes its configuration") {
  Rng rng(1);
  auto head = FusionHead::initialize(FusionConfig{2, 3, 2, 1}, rng);
  auto j = head.to_json();
  CHECK(j["config"]["hidden"] == 2);
  CHECK(j["relation_embeddings"].size() == 2);
  CHECK(j["relation_embeddings"][0].size() == 3);
  CHECK(j["lstm_forward"]["input"].size() == 8);
}
