#include "attrprobe/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "attrprobe/error.hpp"
#include "attrprobe/io.hpp"
#include "attrprobe/text.hpp"

namespace attrprobe {

using nlohmann::json;

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::array<double, 2> softmax(const std::array<double, 2>& logits) {
  const double m = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - m);
  const double e1 = std::exp(logits[1] - m);
  const double z = e0 + e1;
  return {e0 / z, e1 / z};
}

/// Activations of one LSTM pass, kept for backpropagation.
struct LstmTrace {
  std::vector<Eigen::VectorXd> gates;  // [i; f; g; o] after nonlinearity
  std::vector<Eigen::VectorXd> cell;
  std::vector<Eigen::VectorXd> hidden;
  std::vector<long> inputs;            // relation id per step
};

/// Runs one direction over `order` and returns its final hidden state.
LstmTrace run_lstm(const FusionParams& p, const LstmWeights& w, const std::vector<long>& order, Eigen::Index hidden) {
  LstmTrace trace;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(hidden);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(hidden);
  const Eigen::Index H = hidden;
  for (long relation : order) {
    Eigen::VectorXd z = w.recurrent * h + w.bias;
    if (relation >= 0) z.noalias() += w.input * p.relation_embeddings.row(relation).transpose();
    Eigen::VectorXd gates(4 * H);
    for (Eigen::Index k = 0; k < H; ++k) {
      gates[k] = sigmoid(z[k]);
      gates[H + k] = sigmoid(z[H + k]);
      gates[2 * H + k] = std::tanh(z[2 * H + k]);
      gates[3 * H + k] = sigmoid(z[3 * H + k]);
    }
    c = gates.segment(H, H).cwiseProduct(c) + gates.head(H).cwiseProduct(gates.segment(2 * H, H));
    h = gates.tail(H).cwiseProduct(c.array().tanh().matrix());
    trace.gates.push_back(std::move(gates));
    trace.cell.push_back(c);
    trace.hidden.push_back(h);
    trace.inputs.push_back(relation);
  }
  return trace;
}

void backprop_lstm(const FusionParams& p, const LstmWeights& w, const LstmTrace& trace, Eigen::VectorXd dh,
                   FusionParams& grad, LstmWeights& gw, double scale) {
  const Eigen::Index H = dh.size();
  Eigen::VectorXd dc = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd dz(4 * H);
  for (std::size_t t = trace.hidden.size(); t-- > 0;) {
    const auto& gates = trace.gates[t];
    const auto i = gates.head(H);
    const auto f = gates.segment(H, H);
    const auto g = gates.segment(2 * H, H);
    const auto o = gates.tail(H);
    const Eigen::VectorXd tanh_c = trace.cell[t].array().tanh();
    const Eigen::VectorXd c_prev = t > 0 ? trace.cell[t - 1] : Eigen::VectorXd::Zero(H);
    const Eigen::VectorXd h_prev = t > 0 ? trace.hidden[t - 1] : Eigen::VectorXd::Zero(H);

    dc += dh.cwiseProduct(o).cwiseProduct((1.0 - tanh_c.array().square()).matrix());
    for (Eigen::Index k = 0; k < H; ++k) {
      dz[k] = dc[k] * g[k] * i[k] * (1.0 - i[k]);
      dz[H + k] = dc[k] * c_prev[k] * f[k] * (1.0 - f[k]);
      dz[2 * H + k] = dc[k] * i[k] * (1.0 - g[k] * g[k]);
      dz[3 * H + k] = dh[k] * tanh_c[k] * o[k] * (1.0 - o[k]);
    }
    const long relation = trace.inputs[t];
    if (relation >= 0) {
      gw.input.noalias() += scale * dz * p.relation_embeddings.row(relation);
      grad.relation_embeddings.row(relation).noalias() += scale * (w.input.transpose() * dz).transpose();
    }
    gw.recurrent.noalias() += scale * dz * h_prev.transpose();
    gw.bias += scale * dz;
    dh = w.recurrent.transpose() * dz;
    dc = dc.cwiseProduct(f);
  }
}

struct AnswerPass {
  LstmTrace forward;
  LstmTrace backward;
  Eigen::VectorXd features;
  double logit = 0.0;
};

AnswerPass run_answer(const FusionParams& p, const FusionConfig& config, const Eigen::VectorXd& sequence,
                      const std::vector<long>& relations) {
  const auto H = static_cast<Eigen::Index>(config.hidden);
  AnswerPass pass;
  pass.forward = run_lstm(p, p.forward, relations, H);
  std::vector<long> reversed(relations.rbegin(), relations.rend());
  pass.backward = run_lstm(p, p.backward, reversed, H);
  const auto D = sequence.size();
  pass.features.resize(D + 2 * H);
  pass.features.head(D) = sequence;
  pass.features.segment(D, H) = pass.forward.hidden.back();
  pass.features.tail(H) = pass.backward.hidden.back();
  pass.logit = p.classifier.dot(pass.features) + p.classifier_bias;
  return pass;
}

double uniform_fill(Rng& rng, double bound) { return rng.uniform(-bound, bound); }

void init_lstm(LstmWeights& w, Rng& rng, double bound) {
  for (Eigen::Index i = 0; i < w.input.size(); ++i) w.input.data()[i] = uniform_fill(rng, bound);
  for (Eigen::Index i = 0; i < w.recurrent.size(); ++i) w.recurrent.data()[i] = uniform_fill(rng, bound);
  for (Eigen::Index i = 0; i < w.bias.size(); ++i) w.bias[i] = uniform_fill(rng, bound);
}

template <typename Fn>
void for_each_block(FusionParams& p, Fn&& fn) {
  fn(p.relation_embeddings.data(), p.relation_embeddings.size());
  for (LstmWeights* w : {&p.forward, &p.backward}) {
    fn(w->input.data(), w->input.size());
    fn(w->recurrent.data(), w->recurrent.size());
    fn(w->bias.data(), w->bias.size());
  }
  fn(p.classifier.data(), p.classifier.size());
  fn(&p.classifier_bias, Eigen::Index{1});
}

}  // namespace

ResolvedExample resolve(const FusionExample& example, Rng& rng) {
  ResolvedExample resolved;
  resolved.gold = example.gold;
  for (std::size_t k = 0; k < 2; ++k) {
    resolved.sequence[k] = example.answers[k].sequence;
    auto& chosen = resolved.relations[k];
    for (const auto& options : example.answers[k].word_relations) {
      chosen.push_back(options.empty() ? -1 : static_cast<long>(options[rng.index(options.size())]));
    }
  }
  return resolved;
}

FusionParams FusionParams::zeros(const FusionConfig& config) {
  const auto R = static_cast<Eigen::Index>(config.relations);
  const auto E = static_cast<Eigen::Index>(config.relation_dim);
  const auto H = static_cast<Eigen::Index>(config.hidden);
  const auto D = static_cast<Eigen::Index>(config.sequence_dim);
  FusionParams p;
  p.relation_embeddings = Eigen::MatrixXd::Zero(R, E);
  for (LstmWeights* w : {&p.forward, &p.backward}) {
    w->input = Eigen::MatrixXd::Zero(4 * H, E);
    w->recurrent = Eigen::MatrixXd::Zero(4 * H, H);
    w->bias = Eigen::VectorXd::Zero(4 * H);
  }
  p.classifier = Eigen::VectorXd::Zero(D + 2 * H);
  p.classifier_bias = 0.0;
  return p;
}

Eigen::Index FusionParams::size() const {
  Eigen::Index total = 0;
  for_each_block(const_cast<FusionParams&>(*this), [&](double*, Eigen::Index n) { total += n; });
  return total;
}

Eigen::VectorXd FusionParams::flatten() const {
  Eigen::VectorXd flat(size());
  Eigen::Index offset = 0;
  for_each_block(const_cast<FusionParams&>(*this), [&](double* data, Eigen::Index n) {
    flat.segment(offset, n) = Eigen::Map<const Eigen::VectorXd>(data, n);
    offset += n;
  });
  return flat;
}

void FusionParams::assign(const Eigen::VectorXd& flat) {
  if (flat.size() != size()) throw Error("parameter vector has the wrong length");
  Eigen::Index offset = 0;
  for_each_block(*this, [&](double* data, Eigen::Index n) {
    Eigen::Map<Eigen::VectorXd>(data, n) = flat.segment(offset, n);
    offset += n;
  });
}

void FusionParams::add_scaled(const FusionParams& other, double scale) {
  relation_embeddings += scale * other.relation_embeddings;
  forward.input += scale * other.forward.input;
  forward.recurrent += scale * other.forward.recurrent;
  forward.bias += scale * other.forward.bias;
  backward.input += scale * other.backward.input;
  backward.recurrent += scale * other.backward.recurrent;
  backward.bias += scale * other.backward.bias;
  classifier += scale * other.classifier;
  classifier_bias += scale * other.classifier_bias;
}

FusionHead::FusionHead(FusionConfig config, FusionParams params) : config_(config), params_(std::move(params)) {
  const FusionParams shape = FusionParams::zeros(config_);
  if (params_.relation_embeddings.rows() != shape.relation_embeddings.rows() ||
      params_.relation_embeddings.cols() != shape.relation_embeddings.cols() ||
      params_.forward.recurrent.rows() != shape.forward.recurrent.rows() ||
      params_.classifier.size() != shape.classifier.size()) {
    throw Error("fusion parameters do not match the configuration");
  }
}

FusionHead FusionHead::initialize(const FusionConfig& config, Rng& rng) {
  if (config.hidden == 0 || config.relation_dim == 0) throw Error("fusion head needs positive sizes");
  FusionParams p = FusionParams::zeros(config);
  for (Eigen::Index i = 0; i < p.relation_embeddings.size(); ++i) p.relation_embeddings.data()[i] = rng.normal();
  const double lstm_bound = 1.0 / std::sqrt(static_cast<double>(config.hidden));
  init_lstm(p.forward, rng, lstm_bound);
  init_lstm(p.backward, rng, lstm_bound);
  const double classifier_bound = 1.0 / std::sqrt(static_cast<double>(p.classifier.size()));
  for (Eigen::Index i = 0; i < p.classifier.size(); ++i) p.classifier[i] = uniform_fill(rng, classifier_bound);
  p.classifier_bias = uniform_fill(rng, classifier_bound);
  return FusionHead(config, std::move(p));
}

void FusionHead::validate(const ResolvedExample& example) const {
  if (example.gold != 0 && example.gold != 1) throw Error("gold answer must be 0 or 1");
  for (std::size_t k = 0; k < 2; ++k) {
    if (example.relations[k].empty()) throw Error("empty prompt: answer has no words");
    if (example.sequence[k].size() != static_cast<Eigen::Index>(config_.sequence_dim)) {
      throw Error("sequence embedding has dimension " + std::to_string(example.sequence[k].size()) + ", expected " +
                  std::to_string(config_.sequence_dim));
    }
    for (long r : example.relations[k]) {
      if (r >= static_cast<long>(config_.relations)) throw Error("relation id " + std::to_string(r) + " out of range");
    }
  }
}

std::array<double, 2> FusionHead::logits(const ResolvedExample& example) const {
  validate(example);
  return {run_answer(params_, config_, example.sequence[0], example.relations[0]).logit,
          run_answer(params_, config_, example.sequence[1], example.relations[1]).logit};
}

std::array<double, 2> FusionHead::probabilities(const ResolvedExample& example) const {
  return softmax(logits(example));
}

std::array<double, 2> FusionHead::forward(const FusionExample& example, Rng& rng) const {
  return probabilities(resolve(example, rng));
}

double FusionHead::loss_and_gradient(const ResolvedExample& example, FusionParams& gradient, double scale) const {
  validate(example);
  const auto H = static_cast<Eigen::Index>(config_.hidden);
  const auto D = static_cast<Eigen::Index>(config_.sequence_dim);
  std::array<AnswerPass, 2> passes = {run_answer(params_, config_, example.sequence[0], example.relations[0]),
                                      run_answer(params_, config_, example.sequence[1], example.relations[1])};
  const auto probs = softmax({passes[0].logit, passes[1].logit});
  const double m = std::max(passes[0].logit, passes[1].logit);
  const double loss = m + std::log(std::exp(passes[0].logit - m) + std::exp(passes[1].logit - m)) -
                      passes[static_cast<std::size_t>(example.gold)].logit;

  for (std::size_t k = 0; k < 2; ++k) {
    const double dlogit = probs[k] - (static_cast<int>(k) == example.gold ? 1.0 : 0.0);
    gradient.classifier += scale * dlogit * passes[k].features;
    gradient.classifier_bias += scale * dlogit;
    const Eigen::VectorXd dfeatures = dlogit * params_.classifier;
    backprop_lstm(params_, params_.forward, passes[k].forward, dfeatures.segment(D, H), gradient, gradient.forward,
                  scale);
    backprop_lstm(params_, params_.backward, passes[k].backward, dfeatures.tail(H), gradient, gradient.backward,
                  scale);
  }
  return loss;
}

json FusionHead::to_json() const {
  auto matrix = [](const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  auto vector = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  auto lstm = [&](const LstmWeights& w) {
    return json{{"input", matrix(w.input)}, {"recurrent", matrix(w.recurrent)}, {"bias", vector(w.bias)}};
  };
  return {{"config",
           {{"relations", config_.relations},
            {"relation_dim", config_.relation_dim},
            {"hidden", config_.hidden},
            {"sequence_dim", config_.sequence_dim}}},
          {"relation_embeddings", matrix(params_.relation_embeddings)},
          {"lstm_forward", lstm(params_.forward)},
          {"lstm_backward", lstm(params_.backward)},
          {"classifier", vector(params_.classifier)},
          {"classifier_bias", params_.classifier_bias}};
}

double fusion_accuracy(const FusionHead& head, const std::vector<FusionExample>& data, Rng& rng) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& example : data) {
    const auto p = head.forward(example, rng);
    const int predicted = p[1] > p[0] ? 1 : 0;
    correct += predicted == example.gold;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

FusionTrainResult fusion_train(FusionHead head, const std::vector<FusionExample>& train,
                               const std::vector<FusionExample>& dev, const FusionTrainOptions& options) {
  if (options.batch_size == 0) throw Error("batch size must be positive");
  if (train.empty()) throw Error("fusion training set is empty");
  Rng order_rng(derive_seed(options.seed, "fusion-order"));
  Rng sample_rng(derive_seed(options.seed, "fusion-sampling"));

  FusionTrainResult result{std::move(head), {}, {}};
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng.index(i)]);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      FusionParams gradient = FusionParams::zeros(result.head.config());
      double batch_loss = 0.0;
      for (std::size_t j = start; j < end; ++j) {
        const ResolvedExample example = resolve(train[order[j]], sample_rng);
        batch_loss += result.head.loss_and_gradient(example, gradient, scale);
      }
      result.head.params().add_scaled(gradient, -options.learning_rate);
      result.batch_losses.push_back(batch_loss * scale);
      epoch_loss += batch_loss;
    }

    Rng dev_rng(derive_seed(options.seed, "fusion-dev"));
    result.epochs.push_back({epoch, epoch_loss / static_cast<double>(train.size()),
                             fusion_accuracy(result.head, dev, dev_rng)});
  }
  return result;
}

FusionTrainResult fusion_train(const FusionConfig& config, const std::vector<FusionExample>& train,
                               const std::vector<FusionExample>& dev, const FusionTrainOptions& options) {
  Rng init_rng(derive_seed(options.seed, "fusion-init"));
  return fusion_train(FusionHead::initialize(config, init_rng), train, dev, options);
}

namespace {

Eigen::VectorXd to_vector(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

std::vector<FusionExample> parse_fusion_data(const std::string& text, std::string_view source) {
  std::vector<FusionExample> data;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (normalize(line).empty()) continue;
    try {
      const json j = json::parse(line);
      FusionExample example;
      example.id = j.contains("id") ? (j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump())
                                    : std::to_string(data.size());
      const auto& seq = j.at("seq_embedding");
      const bool per_answer = seq.is_array() && seq.size() == 2 && seq[0].is_array();
      const auto& relations = j.at("per_word_relations");
      if (!relations.is_array() || relations.size() != 2) {
        throw ParseError(std::string(source), line_no, "per_word_relations needs one list per answer");
      }
      for (std::size_t k = 0; k < 2; ++k) {
        example.answers[k].sequence = to_vector(per_answer ? seq[k] : seq);
        example.answers[k].word_relations = relations[k].get<std::vector<std::vector<std::size_t>>>();
      }
      example.gold = j.at("gold").get<int>();
      if (example.gold != 0 && example.gold != 1) throw ParseError(std::string(source), line_no, "gold must be 0 or 1");
      data.push_back(std::move(example));
    } catch (const json::exception& e) {
      throw ParseError(std::string(source), line_no, e.what());
    }
  }
  return data;
}

std::vector<FusionExample> load_fusion_data(const std::filesystem::path& path) {
  return parse_fusion_data(read_file(path), path.string());
}

std::string training_log_csv(const std::vector<EpochLog>& epochs) {
  std::ostringstream out;
  out << "epoch,train_loss,dev_accuracy\n";
  for (const auto& e : epochs) {
    out << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.dev_accuracy) << '\n';
  }
  return out.str();
}

}  // namespace attrprobe
