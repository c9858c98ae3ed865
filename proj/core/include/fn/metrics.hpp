#pragma once

#include <map>
#include <string>
#include <vector>

#include "fn/autodiff.hpp"
#include "fn/graph.hpp"
#include "fn/matrix.hpp"

namespace fn {

// Argmax accuracy; rows with label -1 are skipped.
double accuracy(const ad::Tensor& logits, const std::vector<int>& labels);

double mean_absolute_error(const ad::Tensor& pred, const Matrix& targets);

// Average precision with tied scores merged into one threshold group, so a
// constant predictor scores exactly the label prevalence.
double average_precision(const std::vector<double>& scores, const std::vector<int>& labels);

// Mann-Whitney ROCAUC with the tie correction (ties count 1/2).
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Column-wise means over labels that have at least one positive (AP) or both
// classes present (ROCAUC).
double multilabel_ap(const ad::Tensor& logits, const Matrix& targets);
double multilabel_roc_auc(const ad::Tensor& logits, const Matrix& targets);

// Task-appropriate metric bundle, keys: accuracy | ap | rocauc | mae.
std::map<std::string, double> compute_metrics(Task task, const ad::Tensor& preds,
                                              const std::vector<int>& labels, const Matrix& targets);

// Name of the model-selection metric per task and whether higher is better.
std::string selection_metric(Task task);
bool metric_higher_better(Task task);

}  // namespace fn
