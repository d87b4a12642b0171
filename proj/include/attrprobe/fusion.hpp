#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "attrprobe/rng.hpp"

namespace attrprobe {

struct FusionConfig {
  std::size_t relations = 0;      // rows of the relation embedding table
  std::size_t relation_dim = 30;
  std::size_t hidden = 32;        // per direction
  std::size_t sequence_dim = 0;   // width of the frozen sequence embedding
};

/// One answer candidate: its answer-conditioned sequence embedding and the
/// relation ids matched at each prompt word.
struct AnswerInput {
  Eigen::VectorXd sequence;
  std::vector<std::vector<std::size_t>> word_relations;
};

struct FusionExample {
  std::string id;
  std::array<AnswerInput, 2> answers;
  int gold = 0;
};

/// An example after choosing one relation per word (-1 for none).
struct ResolvedExample {
  std::array<Eigen::VectorXd, 2> sequence;
  std::array<std::vector<long>, 2> relations;
  int gold = 0;
};

/// Picks one relation per word uniformly, answer 0 first, words in order.
ResolvedExample resolve(const FusionExample& example, Rng& rng);

struct LstmWeights {
  Eigen::MatrixXd input;      // 4H x E, gate order i, f, g, o
  Eigen::MatrixXd recurrent;  // 4H x H
  Eigen::VectorXd bias;       // 4H
};

struct FusionParams {
  Eigen::MatrixXd relation_embeddings;  // R x E
  LstmWeights forward;
  LstmWeights backward;
  Eigen::VectorXd classifier;  // sequence_dim + 2H
  double classifier_bias = 0.0;

  static FusionParams zeros(const FusionConfig& config);
  Eigen::Index size() const;
  Eigen::VectorXd flatten() const;
  void assign(const Eigen::VectorXd& flat);
  /// this += scale * other
  void add_scaled(const FusionParams& other, double scale);
};

/// Relation-sequence fusion classifier: a bidirectional LSTM summarizes the
/// per-word relation embeddings, the summary (final state of each direction)
/// is concatenated with the sequence embedding, and a shared linear layer
/// scores each answer. The two answer scores are softmaxed jointly.
class FusionHead {
 public:
  FusionHead(FusionConfig config, FusionParams params);

  /// Seeded init: N(0,1) relation embeddings; uniform(+-1/sqrt(H)) LSTM and
  /// uniform(+-1/sqrt(fan_in)) classifier weights.
  static FusionHead initialize(const FusionConfig& config, Rng& rng);

  const FusionConfig& config() const { return config_; }
  FusionParams& params() { return params_; }
  const FusionParams& params() const { return params_; }

  std::array<double, 2> logits(const ResolvedExample& example) const;
  std::array<double, 2> probabilities(const ResolvedExample& example) const;
  std::array<double, 2> forward(const FusionExample& example, Rng& rng) const;

  /// Cross-entropy of the gold answer. Adds scale * d(loss)/d(params) to `gradient`.
  double loss_and_gradient(const ResolvedExample& example, FusionParams& gradient, double scale = 1.0) const;

  nlohmann::json to_json() const;

 private:
  void validate(const ResolvedExample& example) const;

  FusionConfig config_;
  FusionParams params_;
};

struct FusionTrainOptions {
  std::size_t epochs = 4;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_accuracy = 0.0;
};

struct FusionTrainResult {
  FusionHead head;
  std::vector<EpochLog> epochs;
  /// Mean loss of every mini-batch before its update, in training order.
  std::vector<double> batch_losses;
};

/// Accuracy of argmax predictions (ties go to answer 0).
double fusion_accuracy(const FusionHead& head, const std::vector<FusionExample>& data, Rng& rng);

/// Mini-batch gradient descent on the mean cross-entropy. The relation
/// embeddings are trained with everything else.
FusionTrainResult fusion_train(const FusionConfig& config, const std::vector<FusionExample>& train,
                               const std::vector<FusionExample>& dev, const FusionTrainOptions& options);

/// Continues training an existing head.
FusionTrainResult fusion_train(FusionHead head, const std::vector<FusionExample>& train,
                               const std::vector<FusionExample>& dev, const FusionTrainOptions& options);

/// Reads {id, seq_embedding, per_word_relations, gold} lines. seq_embedding
/// is either one vector shared by both answers or a pair of vectors;
/// per_word_relations is a pair of per-word id lists.
std::vector<FusionExample> parse_fusion_data(const std::string& text, std::string_view source);
std::vector<FusionExample> load_fusion_data(const std::filesystem::path& path);

std::string training_log_csv(const std::vector<EpochLog>& epochs);

}  // namespace attrprobe
