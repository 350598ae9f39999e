#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "gih/error.hpp"
#include "gih/harness.hpp"
#include "gih/parallel.hpp"

namespace {

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw gih::ConfigError("config file not found: " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw gih::ConfigError(std::string("config parse error: ") + e.what());
    }
}

int run(const std::string& id, const std::string& config_path, const std::string& out_dir,
        uint64_t seed, int threads) {
    gih::harness::ExperimentConfig config;
    config.id = id;
    if (!config_path.empty()) config.params = load_json_file(config_path);
    config.out_dir = out_dir.empty() ? ("out/" + id) : out_dir;
    config.seed = seed;
    config.threads = threads;
    auto dir = gih::harness::run_experiment(config);
    std::printf("wrote %s\n", dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"input-space geometry experiment harness"};
    app.require_subcommand(1);

    std::string config_path, out_dir, experiment_id, model_path;
    uint64_t seed = 1;
    int threads = 0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed, "master seed");
        cmd->add_option("--threads", threads, "worker threads (default: GIH_THREADS or all cores)");
    };

    CLI::App* cmd_run = app.add_subcommand("run", "run a registered experiment");
    cmd_run->add_option("experiment", experiment_id, "experiment id")->required();
    cmd_run->add_option("--config", config_path, "JSON file overriding the experiment defaults");
    add_common(cmd_run);

    CLI::App* cmd_verify = app.add_subcommand("verify-theorems",
                                              "run the closed-form claim suite");
    cmd_verify->add_option("--config", config_path, "JSON file overriding the claim defaults");
    add_common(cmd_verify);

    CLI::App* cmd_estimate =
        app.add_subcommand("estimate-geometry", "estimate the average geometry of a model");
    cmd_estimate->add_option("--model", model_path, "model spec JSON file")->required();
    add_common(cmd_estimate);

    CLI::App* cmd_list = app.add_subcommand("list", "list registered experiments");

    try {
        app.parse(argc, argv);
        if (threads > 0) gih::set_thread_count(threads);

        if (cmd_list->parsed()) {
            for (const auto& id : gih::harness::experiment_ids())
                std::printf("%-18s %s\n", id.c_str(),
                            gih::harness::experiment_target(id).c_str());
            return 0;
        }
        if (cmd_verify->parsed())
            return run("verify-theorems", config_path, out_dir, seed, threads);
        if (cmd_estimate->parsed()) {
            nlohmann::json params = {{"model_path", model_path}};
            gih::harness::ExperimentConfig config;
            config.id = "geometry-heatmap";
            config.params = params;
            config.out_dir = out_dir.empty() ? "out/geometry" : out_dir;
            config.seed = seed;
            config.threads = threads;
            auto dir = gih::harness::run_experiment(config);
            std::printf("wrote %s\n", dir.c_str());
            return 0;
        }
        return run(experiment_id, config_path, out_dir, seed, threads);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const gih::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
