#include "churnkit/cli.hpp"
#include "churnkit/errors.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

int main(int argc, char** argv) {
    CLI::App app{"churnkit: new-user clustering and churn prediction pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> days;
    app.add_option("--config", config_path, "JSON pipeline configuration");
    app.add_option("--out-dir", out_dir, "output directory override");
    app.add_option("--seed", seed, "seed override for the invoked command");
    app.add_option("--days", days, "observation window override (1-14)");

    auto* generate = app.add_subcommand("generate", "write a synthetic dataset");
    auto* extract = app.add_subcommand("extract", "activity series -> feature CSV");
    auto* cluster = app.add_subcommand("cluster", "fit the three-step clustering");
    auto* train = app.add_subcommand("train", "train the parallel-LSTM churn model");
    auto* evaluate = app.add_subcommand("evaluate", "split/train/evaluate metric sweep");
    auto* predict = app.add_subcommand("predict", "score users with a checkpoint");
    std::string predict_input;
    predict->add_option("input", predict_input, "activity file to score")->required();

    for (auto* sub : {generate, extract, cluster, train, evaluate, predict}) {
        sub->fallthrough();
    }

    CLI11_PARSE(app, argc, argv);

    try {
        churnkit::PipelineConfig cfg = churnkit::load_pipeline_config(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (days) {
            cfg.train.days_window = *days;
            cfg.eval_days = {*days};
        }
        if (seed) {
            if (generate->parsed()) cfg.generator.seed = *seed;
            if (cluster->parsed()) cfg.cluster_seed = *seed;
            if (train->parsed()) cfg.train.seed = *seed;
            if (evaluate->parsed()) cfg.eval_seed = *seed;
        }

        if (generate->parsed()) churnkit::cmd_generate(cfg);
        if (extract->parsed()) churnkit::cmd_extract(cfg);
        if (cluster->parsed()) churnkit::cmd_cluster(cfg);
        if (train->parsed()) churnkit::cmd_train(cfg);
        if (evaluate->parsed()) churnkit::cmd_evaluate(cfg);
        if (predict->parsed()) churnkit::cmd_predict(cfg, predict_input, days);
    } catch (const churnkit::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const churnkit::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
