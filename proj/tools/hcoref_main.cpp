#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hcoref/errors.hpp"
#include "hcoref/pipeline.hpp"
#include "hcoref/util.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;
constexpr int kExitValidation = 4;

void print_stage(const std::string& name, const hcoref::StageRecord& record) {
    std::cout << name << (record.skipped ? ": skipped" : ": done");
    if (!record.skipped) {
        for (const auto& [key, value] : record.counters)
            std::cout << "  " << key << "=" << value;
        std::cout << "  (" << record.wall_ms << " ms)";
    }
    std::cout << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical cross-document coreference engine"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> out_override;
    bool force = false;
    app.add_option("--config", config_path, "Pipeline config JSON file");
    app.add_option("--seed", seed_override, "Override run.seed");
    app.add_option("--out", out_override, "Override run.out_dir");
    app.add_flag("--force", force, "Re-run stages whose outputs already exist");

    auto* cmd_ingest = app.add_subcommand("ingest", "Validate topics and stage them");
    auto* cmd_index = app.add_subcommand("index", "Embed the passage corpus");
    auto* cmd_define =
        app.add_subcommand("define-singleton", "Generate singleton definitions");
    auto* cmd_score = app.add_subcommand("score", "Score all within-topic mention pairs");
    auto* cmd_cascade =
        app.add_subcommand("cascade", "Relational rescoring of stage-1 candidates");
    auto* cmd_cluster =
        app.add_subcommand("cluster", "Induce coreference clusters and hierarchy");
    auto* cmd_evaluate = app.add_subcommand("evaluate", "Score predictions against gold");
    auto* cmd_hard = app.add_subcommand("hard-subset", "Rank topics by baseline CoNLL F1");
    double hard_fraction = 0.1;
    std::string hard_out;
    cmd_hard->add_option("--fraction", hard_fraction, "Fraction of topics to select");
    cmd_hard->add_option("--listing", hard_out, "Write topic_id,score CSV here");
    auto* cmd_export =
        app.add_subcommand("export-training-data", "Serialized pairs with gold labels");
    std::string export_format = "chatml";
    std::string export_path;
    cmd_export->add_option("--format", export_format, "chatml or marker")
        ->check(CLI::IsMember({"chatml", "marker"}));
    cmd_export->add_option("--file", export_path, "Output JSONL path")->required();
    auto* cmd_report = app.add_subcommand("report", "Render evaluation as table and CSV");
    auto* cmd_run = app.add_subcommand("run", "Full pipeline, all stages in order");

    CLI11_PARSE(app, argc, argv);

    try {
        hcoref::PipelineConfig config;
        if (!config_path.empty()) config = hcoref::PipelineConfig::load(config_path);
        if (seed_override) config.seed = *seed_override;
        if (out_override) config.out_dir = *out_override;

        hcoref::Pipeline pipeline(config);
        pipeline.set_force(force);

        if (cmd_ingest->parsed()) print_stage("ingest", pipeline.ingest());
        if (cmd_index->parsed()) print_stage("index", pipeline.index());
        if (cmd_define->parsed())
            print_stage("define-singleton", pipeline.define_singleton());
        if (cmd_score->parsed()) print_stage("score", pipeline.score());
        if (cmd_cascade->parsed()) print_stage("cascade", pipeline.cascade_stage());
        if (cmd_cluster->parsed()) print_stage("cluster", pipeline.cluster());
        if (cmd_evaluate->parsed()) {
            print_stage("evaluate", pipeline.evaluate());
            std::cout << hcoref::read_text_file(pipeline.out_path("report.txt"));
        }
        if (cmd_hard->parsed()) {
            auto scores = pipeline.hard_subset_scores();
            auto selected = hcoref::metrics::select_hard_subset(
                pipeline.topics(), hard_fraction, pipeline.config().baseline_tau_c);
            std::string listing = "topic_id,baseline_conll_f1\n";
            for (const auto& score : scores) {
                char line[256];
                std::snprintf(line, sizeof(line), "%s,%.6f\n", score.topic_id.c_str(),
                              score.baseline_conll_f1);
                listing += line;
            }
            if (!hard_out.empty()) hcoref::write_text_file(hard_out, listing);
            std::cout << "hard subset (fraction " << hard_fraction << "):\n";
            for (const auto& id : selected) std::cout << "  " << id << "\n";
        }
        if (cmd_export->parsed()) {
            pipeline.export_training(hcoref::serializer_from_name(export_format),
                                     export_path);
            std::cout << "wrote " << export_path << "\n";
        }
        if (cmd_report->parsed()) {
            auto rendered = pipeline.render_from_evaluation();
            std::cout << rendered.table;
            hcoref::write_text_file(pipeline.out_path("report.csv"), rendered.csv);
            hcoref::write_text_file(pipeline.out_path("report.txt"), rendered.table);
        }
        if (cmd_run->parsed()) {
            auto manifest = pipeline.run();
            for (const auto& [name, record] : manifest.stages) print_stage(name, record);
            std::cout << "manifest: " << pipeline.out_path("manifest.json") << "\n";
        }
        return kExitOk;
    } catch (const hcoref::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const hcoref::BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const hcoref::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const hcoref::ParseError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}
