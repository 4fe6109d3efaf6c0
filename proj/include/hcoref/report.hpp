#pragma once

#include <string>
#include <vector>

#include "hcoref/cluster_graph.hpp"
#include "hcoref/metrics.hpp"

namespace hcoref {

/// One rendered result row: the four headline scores as fractions in [0,1].
struct EvalRow {
    std::string label;
    double conll_f1 = 0.0;
    double hierarchy_f1 = 0.0;
    double hierarchy_f1_50 = 0.0;
    double path_ratio = 0.0;
};

/// "71.90, 56.98, 45.93, 53.85" — percent, two decimals.
std::string format_row_values(const EvalRow& row);

struct RenderedReport {
    std::string table;
    std::string csv;
};

/// Aligned-text table plus CSV with columns
/// {CoNLL F1, F1, F1-50%, Ratio}, one row per configuration.
RenderedReport render_report(const std::vector<EvalRow>& rows);

struct TopicEvaluation {
    std::string topic_id;
    metrics::CoreferenceReport coref;
    metrics::HierarchyReport hierarchy;
};

struct EvaluationBundle {
    std::vector<TopicEvaluation> per_topic;
    TopicEvaluation macro;  // mean of per-topic scores (headline)
    TopicEvaluation micro;  // metrics over all topics pooled into one universe
};

/// Evaluates predicted graphs against gold graphs matched by topic_id.
/// Topics without a prediction or without gold are an error.
EvaluationBundle evaluate_graphs(
    const std::vector<std::pair<std::string, ClusterGraph>>& gold,
    const std::vector<std::pair<std::string, ClusterGraph>>& pred);

EvalRow to_eval_row(const std::string& label, const TopicEvaluation& evaluation);

nlohmann::json evaluation_to_json(const EvaluationBundle& bundle);
EvaluationBundle evaluation_from_json(const nlohmann::json& record);

}  // namespace hcoref
