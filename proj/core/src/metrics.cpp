#include "fn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fn {

double accuracy(const ad::Tensor& logits, const std::vector<int>& labels) {
  if (static_cast<int>(labels.size()) != logits.rows())
    throw std::invalid_argument("accuracy: label count mismatch");
  std::int64_t hit = 0, total = 0;
  for (int i = 0; i < logits.rows(); ++i) {
    if (labels[static_cast<std::size_t>(i)] < 0) continue;
    int arg = 0;
    for (int j = 1; j < logits.cols(); ++j)
      if (logits.at(i, j) > logits.at(i, arg)) arg = j;
    hit += arg == labels[static_cast<std::size_t>(i)];
    total++;
  }
  return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

double mean_absolute_error(const ad::Tensor& pred, const Matrix& targets) {
  if (pred.rows() != targets.rows || pred.cols() != targets.cols)
    throw std::invalid_argument("mae: shape mismatch");
  double acc = 0.0;
  for (int i = 0; i < pred.rows(); ++i)
    for (int j = 0; j < pred.cols(); ++j) acc += std::abs(pred.at(i, j) - targets(i, j));
  return acc / (static_cast<double>(pred.rows()) * pred.cols());
}

double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("ap: size mismatch");
  const std::int64_t total_pos = std::count(labels.begin(), labels.end(), 1);
  if (total_pos == 0) return 0.0;
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double ap = 0.0;
  std::int64_t tp = 0, seen = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::int64_t group_tp = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      group_tp += labels[order[j]] == 1;
      ++j;
    }
    tp += group_tp;
    seen += static_cast<std::int64_t>(j - i);
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += precision * static_cast<double>(group_tp) / static_cast<double>(total_pos);
    i = j;
  }
  return ap;
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("rocauc: size mismatch");
  const std::int64_t pos = std::count(labels.begin(), labels.end(), 1);
  const std::int64_t neg = static_cast<std::int64_t>(labels.size()) - pos;
  if (pos == 0 || neg == 0) throw std::invalid_argument("rocauc: needs both classes");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Rank-sum with average ranks over ties.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    i = j;
  }
  const double u = rank_sum_pos - static_cast<double>(pos) * (static_cast<double>(pos) + 1.0) / 2.0;
  return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

namespace {

template <class F>
double columnwise_mean(const ad::Tensor& logits, const Matrix& targets, F per_column) {
  if (logits.rows() != targets.rows || logits.cols() != targets.cols)
    throw std::invalid_argument("metrics: shape mismatch");
  double acc = 0.0;
  int used = 0;
  std::vector<double> scores(static_cast<std::size_t>(logits.rows()));
  std::vector<int> labels(static_cast<std::size_t>(logits.rows()));
  for (int j = 0; j < logits.cols(); ++j) {
    for (int i = 0; i < logits.rows(); ++i) {
      scores[static_cast<std::size_t>(i)] = logits.at(i, j);
      labels[static_cast<std::size_t>(i)] = targets(i, j) > 0.5 ? 1 : 0;
    }
    const std::int64_t pos = std::count(labels.begin(), labels.end(), 1);
    if (pos == 0 || pos == static_cast<std::int64_t>(labels.size())) continue;
    acc += per_column(scores, labels);
    used++;
  }
  return used == 0 ? 0.0 : acc / used;
}

}  // namespace

double multilabel_ap(const ad::Tensor& logits, const Matrix& targets) {
  return columnwise_mean(logits, targets, average_precision);
}

double multilabel_roc_auc(const ad::Tensor& logits, const Matrix& targets) {
  return columnwise_mean(logits, targets, roc_auc);
}

std::map<std::string, double> compute_metrics(Task task, const ad::Tensor& preds,
                                              const std::vector<int>& labels, const Matrix& targets) {
  std::map<std::string, double> out;
  switch (task) {
    case Task::Classification:
    case Task::NodeClassification:
      out["accuracy"] = accuracy(preds, labels);
      break;
    case Task::Multilabel:
      out["ap"] = multilabel_ap(preds, targets);
      out["rocauc"] = multilabel_roc_auc(preds, targets);
      break;
    case Task::Regression:
      out["mae"] = mean_absolute_error(preds, targets);
      break;
  }
  return out;
}

std::string selection_metric(Task task) {
  switch (task) {
    case Task::Classification:
    case Task::NodeClassification: return "accuracy";
    case Task::Multilabel: return "ap";
    case Task::Regression: return "mae";
  }
  return "accuracy";
}

bool metric_higher_better(Task task) { return task != Task::Regression; }

}  // namespace fn
