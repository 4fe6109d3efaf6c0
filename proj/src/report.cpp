#include "hcoref/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "hcoref/errors.hpp"

namespace hcoref {

namespace {

std::string percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
    return buf;
}

std::string pad(std::string text, std::size_t width) {
    if (text.size() < width) text.append(width - text.size(), ' ');
    return text;
}

nlohmann::json prf_to_json(const metrics::Prf& prf) {
    return {{"recall", prf.recall}, {"precision", prf.precision}, {"f1", prf.f1}};
}

metrics::Prf prf_from_json(const nlohmann::json& record) {
    return {record.at("recall").get<double>(), record.at("precision").get<double>(),
            record.at("f1").get<double>()};
}

nlohmann::json topic_evaluation_to_json(const TopicEvaluation& eval) {
    return {{"topic_id", eval.topic_id},
            {"muc", prf_to_json(eval.coref.muc)},
            {"b3", prf_to_json(eval.coref.b3)},
            {"ceafe", prf_to_json(eval.coref.ceafe)},
            {"lea", prf_to_json(eval.coref.lea)},
            {"conll_f1", eval.coref.conll_f1},
            {"hierarchy", prf_to_json(eval.hierarchy.hierarchy)},
            {"hierarchy_50", prf_to_json(eval.hierarchy.hierarchy_50)},
            {"path_ratio", eval.hierarchy.path_ratio}};
}

TopicEvaluation topic_evaluation_from_json(const nlohmann::json& record) {
    TopicEvaluation eval;
    eval.topic_id = record.at("topic_id").get<std::string>();
    eval.coref.muc = prf_from_json(record.at("muc"));
    eval.coref.b3 = prf_from_json(record.at("b3"));
    eval.coref.ceafe = prf_from_json(record.at("ceafe"));
    eval.coref.lea = prf_from_json(record.at("lea"));
    eval.coref.conll_f1 = record.at("conll_f1").get<double>();
    eval.hierarchy.hierarchy = prf_from_json(record.at("hierarchy"));
    eval.hierarchy.hierarchy_50 = prf_from_json(record.at("hierarchy_50"));
    eval.hierarchy.path_ratio = record.at("path_ratio").get<double>();
    return eval;
}

}  // namespace

std::string format_row_values(const EvalRow& row) {
    return percent(row.conll_f1) + ", " + percent(row.hierarchy_f1) + ", " +
           percent(row.hierarchy_f1_50) + ", " + percent(row.path_ratio);
}

RenderedReport render_report(const std::vector<EvalRow>& rows) {
    std::size_t label_width = std::string("Model").size();
    for (const auto& row : rows) label_width = std::max(label_width, row.label.size());
    label_width += 2;

    constexpr std::size_t kCol = 12;
    std::string table;
    table += pad("Model", label_width) + pad("Coreference", kCol) + pad("Hierarchy", kCol) +
             pad("", kCol) + pad("Path", kCol) + "\n";
    table += pad("", label_width) + pad("CoNLL F1", kCol) + pad("F1", kCol) +
             pad("F1-50%", kCol) + pad("Ratio", kCol) + "\n";
    table += std::string(label_width + 4 * kCol, '-') + "\n";
    for (const auto& row : rows) {
        table += pad(row.label, label_width) + pad(percent(row.conll_f1), kCol) +
                 pad(percent(row.hierarchy_f1), kCol) +
                 pad(percent(row.hierarchy_f1_50), kCol) +
                 pad(percent(row.path_ratio), kCol) + "\n";
    }

    std::string csv = "model,conll_f1,hierarchy_f1,hierarchy_f1_50,path_ratio\n";
    for (const auto& row : rows) {
        csv += row.label + "," + percent(row.conll_f1) + "," + percent(row.hierarchy_f1) +
               "," + percent(row.hierarchy_f1_50) + "," + percent(row.path_ratio) + "\n";
    }
    return {std::move(table), std::move(csv)};
}

EvaluationBundle evaluate_graphs(
    const std::vector<std::pair<std::string, ClusterGraph>>& gold,
    const std::vector<std::pair<std::string, ClusterGraph>>& pred) {
    std::map<std::string, const ClusterGraph*> pred_of;
    for (const auto& [topic_id, graph] : pred) pred_of[topic_id] = &graph;

    EvaluationBundle bundle;
    ClusterGraph pooled_gold, pooled_pred;

    for (const auto& [topic_id, gold_graph] : gold) {
        auto it = pred_of.find(topic_id);
        if (it == pred_of.end())
            throw ValidationError("no prediction for topic " + topic_id);
        const ClusterGraph& pred_graph = *it->second;

        TopicEvaluation eval;
        eval.topic_id = topic_id;
        Partition gold_partition = gold_graph.clusters;
        Partition pred_partition = pred_graph.clusters;
        eval.coref = metrics::coreference_report(gold_partition, pred_partition);
        eval.hierarchy = metrics::hierarchy_report(gold_graph, pred_graph);
        bundle.per_topic.push_back(eval);

        // Pool into the micro universe under topic-namespaced mention ids.
        auto pool = [&](ClusterGraph& pooled, const ClusterGraph& graph) {
            std::size_t offset = pooled.clusters.size();
            for (const auto& cluster : graph.clusters) {
                std::vector<std::string> namespaced;
                namespaced.reserve(cluster.size());
                for (const auto& id : cluster) namespaced.push_back(topic_id + "::" + id);
                pooled.clusters.push_back(std::move(namespaced));
            }
            for (const auto& edge : graph.edges)
                pooled.edges.push_back(
                    {edge.parent + offset, edge.child + offset, edge.confidence});
        };
        pool(pooled_gold, gold_graph);
        pool(pooled_pred, pred_graph);
    }

    if (bundle.per_topic.empty()) throw ValidationError("no topics to evaluate");

    auto mean_prf = [&](auto select) {
        metrics::Prf mean;
        for (const auto& eval : bundle.per_topic) {
            const metrics::Prf& prf = select(eval);
            mean.recall += prf.recall;
            mean.precision += prf.precision;
            mean.f1 += prf.f1;
        }
        double n = static_cast<double>(bundle.per_topic.size());
        mean.recall /= n;
        mean.precision /= n;
        mean.f1 /= n;
        return mean;
    };

    bundle.macro.topic_id = "macro";
    bundle.macro.coref.muc = mean_prf([](const TopicEvaluation& e) { return e.coref.muc; });
    bundle.macro.coref.b3 = mean_prf([](const TopicEvaluation& e) { return e.coref.b3; });
    bundle.macro.coref.ceafe =
        mean_prf([](const TopicEvaluation& e) { return e.coref.ceafe; });
    bundle.macro.coref.lea = mean_prf([](const TopicEvaluation& e) { return e.coref.lea; });
    bundle.macro.hierarchy.hierarchy =
        mean_prf([](const TopicEvaluation& e) { return e.hierarchy.hierarchy; });
    bundle.macro.hierarchy.hierarchy_50 =
        mean_prf([](const TopicEvaluation& e) { return e.hierarchy.hierarchy_50; });
    double conll_sum = 0.0, path_sum = 0.0;
    for (const auto& eval : bundle.per_topic) {
        conll_sum += eval.coref.conll_f1;
        path_sum += eval.hierarchy.path_ratio;
    }
    bundle.macro.coref.conll_f1 = conll_sum / static_cast<double>(bundle.per_topic.size());
    bundle.macro.hierarchy.path_ratio =
        path_sum / static_cast<double>(bundle.per_topic.size());

    bundle.micro.topic_id = "micro";
    bundle.micro.coref =
        metrics::coreference_report(pooled_gold.clusters, pooled_pred.clusters);
    bundle.micro.hierarchy = metrics::hierarchy_report(pooled_gold, pooled_pred);
    return bundle;
}

EvalRow to_eval_row(const std::string& label, const TopicEvaluation& evaluation) {
    return {label, evaluation.coref.conll_f1, evaluation.hierarchy.hierarchy.f1,
            evaluation.hierarchy.hierarchy_50.f1, evaluation.hierarchy.path_ratio};
}

nlohmann::json evaluation_to_json(const EvaluationBundle& bundle) {
    nlohmann::json per_topic = nlohmann::json::array();
    for (const auto& eval : bundle.per_topic)
        per_topic.push_back(topic_evaluation_to_json(eval));
    return {{"per_topic", per_topic},
            {"macro", topic_evaluation_to_json(bundle.macro)},
            {"micro", topic_evaluation_to_json(bundle.micro)}};
}

EvaluationBundle evaluation_from_json(const nlohmann::json& record) {
    EvaluationBundle bundle;
    for (const auto& entry : record.at("per_topic"))
        bundle.per_topic.push_back(topic_evaluation_from_json(entry));
    bundle.macro = topic_evaluation_from_json(record.at("macro"));
    bundle.micro = topic_evaluation_from_json(record.at("micro"));
    return bundle;
}

}  // namespace hcoref
