#include "attrprobe/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "attrprobe/error.hpp"

namespace attrprobe {
namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

constexpr double kArmijo = 1e-4;
constexpr double kCurvature = 0.9;
constexpr int kMaxLineSearchEvals = 25;

struct Point {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd g;
};

class WolfeSearch {
 public:
  WolfeSearch(const LogisticObjective& objective, const Point& start, const Eigen::VectorXd& direction)
      : objective_(objective), start_(start), direction_(direction), slope0_(start.g.dot(direction)) {}

  /// Strong Wolfe step (bracketing + cubic zoom). Falls back to the best
  /// sufficient-decrease point found; nullopt if there is none.
  std::optional<Point> run(double alpha) {
    double prev_alpha = 0.0;
    double prev_f = start_.f;
    double prev_slope = slope0_;
    for (int i = 0; i < kMaxLineSearchEvals; ++i) {
      Point p = at(alpha);
      const double slope = p.g.dot(direction_);
      if (p.f > start_.f + kArmijo * alpha * slope0_ || (i > 0 && p.f >= prev_f)) {
        return zoom(prev_alpha, prev_f, prev_slope, alpha, p.f, slope);
      }
      if (std::abs(slope) <= -kCurvature * slope0_) return p;
      if (slope >= 0) return zoom(alpha, p.f, slope, prev_alpha, prev_f, prev_slope);
      remember(alpha, p);
      prev_alpha = alpha;
      prev_f = p.f;
      prev_slope = slope;
      alpha *= 2.0;
    }
    return best_;
  }

 private:
  Point at(double alpha) {
    Point p;
    p.x = start_.x + alpha * direction_;
    p.f = objective_.evaluate(p.x, p.g);
    return p;
  }

  void remember(double alpha, const Point& p) {
    if (alpha > 0 && p.f <= start_.f + kArmijo * alpha * slope0_ && (!best_ || p.f < best_->f)) best_ = p;
  }

  std::optional<Point> zoom(double lo, double f_lo, double s_lo, double hi, double f_hi, double s_hi) {
    for (int j = 0; j < kMaxLineSearchEvals; ++j) {
      double alpha = cubic_minimizer(lo, f_lo, s_lo, hi, f_hi, s_hi);
      const double left = std::min(lo, hi);
      const double width = std::abs(hi - lo);
      if (!std::isfinite(alpha) || alpha < left + 0.1 * width || alpha > left + 0.9 * width) {
        alpha = 0.5 * (lo + hi);
      }
      if (width < 1e-16 * std::max(1.0, std::abs(lo))) break;
      Point p = at(alpha);
      const double slope = p.g.dot(direction_);
      if (p.f > start_.f + kArmijo * alpha * slope0_ || p.f >= f_lo) {
        hi = alpha;
        f_hi = p.f;
        s_hi = slope;
      } else {
        if (std::abs(slope) <= -kCurvature * slope0_) return p;
        remember(alpha, p);
        if (slope * (hi - lo) >= 0) {
          hi = lo;
          f_hi = f_lo;
          s_hi = s_lo;
        }
        lo = alpha;
        f_lo = p.f;
        s_lo = slope;
      }
    }
    return best_;
  }

  static double cubic_minimizer(double a, double fa, double sa, double b, double fb, double sb) {
    const double d1 = sa + sb - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - sa * sb;
    if (disc < 0) return std::nan("");
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    return b - (b - a) * (sb + d2 - d1) / (sb - sa + 2.0 * d2);
  }

  const LogisticObjective& objective_;
  const Point& start_;
  const Eigen::VectorXd& direction_;
  double slope0_;
  std::optional<Point> best_;
};

/// Armijo backtracking along the steepest-descent direction.
std::optional<Point> backtrack(const LogisticObjective& objective, const Point& start) {
  const Eigen::VectorXd direction = -start.g;
  const double slope = start.g.dot(direction);
  double alpha = 1.0 / std::max(1.0, start.g.norm());
  for (int i = 0; i < 60; ++i, alpha *= 0.5) {
    Point p;
    p.x = start.x + alpha * direction;
    p.f = objective.evaluate(p.x, p.g);
    if (p.f <= start.f + kArmijo * alpha * slope && p.f < start.f) return p;
  }
  return std::nullopt;
}

}  // namespace

double LogisticModel::decision(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (constant_label) return *constant_label ? 1.0 : -1.0;
  return weights.dot(x) + bias;
}

double LogisticModel::probability(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (constant_label) return *constant_label ? 1.0 : 0.0;
  return sigmoid(decision(x));
}

bool LogisticModel::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (constant_label) return *constant_label;
  return decision(x) >= 0.0;
}

LogisticObjective::LogisticObjective(const Eigen::Ref<const Eigen::MatrixXd>& features,
                                     std::span<const std::uint8_t> labels, double inverse_regularization)
    : features_(features), labels_(static_cast<Eigen::Index>(labels.size())) {
  if (static_cast<Eigen::Index>(labels.size()) != features.rows()) {
    throw Error("feature rows and label count differ");
  }
  if (features.rows() == 0) throw Error("cannot train on zero examples");
  if (!(inverse_regularization > 0)) throw Error("inverse regularization must be positive");
  for (std::size_t i = 0; i < labels.size(); ++i) labels_[static_cast<Eigen::Index>(i)] = labels[i] ? 1.0 : 0.0;
  penalty_ = 1.0 / (inverse_regularization * static_cast<double>(features.rows()));
}

double LogisticObjective::value(const Eigen::VectorXd& params) const {
  Eigen::VectorXd unused;
  return evaluate(params, unused);
}

double LogisticObjective::evaluate(const Eigen::VectorXd& params, Eigen::VectorXd& gradient) const {
  const Eigen::Index d = features_.cols();
  const auto w = params.head(d);
  const double b = params[d];
  const Eigen::VectorXd z = (features_ * w).array() + b;
  const double n = static_cast<double>(features_.rows());

  double loss = 0.0;
  Eigen::VectorXd residual(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    loss += softplus(z[i]) - labels_[i] * z[i];
    residual[i] = sigmoid(z[i]) - labels_[i];
  }
  gradient.resize(d + 1);
  gradient.head(d) = features_.transpose() * residual / n + penalty_ * w;
  gradient[d] = residual.sum() / n;
  return loss / n + 0.5 * penalty_ * w.squaredNorm();
}

TrainResult train_logistic(const Eigen::Ref<const Eigen::MatrixXd>& features,
                           std::span<const std::uint8_t> labels, const LogisticOptions& options) {
  if (!features.allFinite()) throw Error("non-finite value in feature matrix");
  if (static_cast<Eigen::Index>(labels.size()) != features.rows()) {
    throw Error("feature rows and label count differ");
  }
  if (labels.empty()) throw Error("cannot train on zero examples");

  TrainResult result;
  result.model.weights = Eigen::VectorXd::Zero(features.cols());
  const auto positives = std::count_if(labels.begin(), labels.end(), [](auto v) { return v != 0; });
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(labels.size())) {
    result.model.constant_label = positives != 0;
    result.report.converged = true;
    return result;
  }

  const LogisticObjective objective(features, labels, options.inverse_regularization);
  const Eigen::Index d = features.cols();
  Point current;
  current.x = Eigen::VectorXd::Zero(d + 1);
  current.f = objective.evaluate(current.x, current.g);

  TrainReport& report = result.report;
  report.objective_trace.push_back(current.f);
  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> memory;  // (s, y)

  double gnorm = current.g.norm();
  int iteration = 0;
  while (gnorm >= options.gradient_tolerance && iteration < options.max_iterations) {
    ++iteration;

    // Two-loop recursion.
    Eigen::VectorXd q = current.g;
    std::vector<double> alphas(memory.size());
    for (std::size_t k = memory.size(); k-- > 0;) {
      const auto& [s, y] = memory[k];
      alphas[k] = s.dot(q) / y.dot(s);
      q -= alphas[k] * y;
    }
    if (!memory.empty()) {
      const auto& [s, y] = memory.back();
      q *= s.dot(y) / y.squaredNorm();
    }
    for (std::size_t k = 0; k < memory.size(); ++k) {
      const auto& [s, y] = memory[k];
      const double beta = y.dot(q) / y.dot(s);
      q += (alphas[k] - beta) * s;
    }
    Eigen::VectorXd direction = -q;
    if (!(direction.dot(current.g) < 0) || !direction.allFinite()) {
      memory.clear();
      direction = -current.g;
    }
    const double initial_step = memory.empty() ? std::min(1.0, 1.0 / gnorm) : 1.0;

    std::optional<Point> next = WolfeSearch(objective, current, direction).run(initial_step);
    if (!next || !(next->f < current.f)) {
      memory.clear();
      next = backtrack(objective, current);
      if (!next) break;  // no representable decrease left
      ++report.fallback_steps;
    }

    Eigen::VectorXd s = next->x - current.x;
    Eigen::VectorXd y = next->g - current.g;
    const double sy = s.dot(y);
    if (sy > 1e-10 * y.squaredNorm() && sy > 0) {
      memory.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(memory.size()) > options.history) memory.pop_front();
    }
    current = std::move(*next);
    report.objective_trace.push_back(current.f);
    gnorm = current.g.norm();
  }

  report.iterations = iteration;
  report.gradient_norm = gnorm;
  report.converged = gnorm < options.gradient_tolerance;
  result.model.weights = current.x.head(d);
  result.model.bias = current.x[d];
  return result;
}

}  // namespace attrprobe
