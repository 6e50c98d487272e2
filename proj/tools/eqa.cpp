// eqa: index, train, predict, eval and ablate from one JSON config.
//
// Precedence: command-line flags, then the config file (--config, or the
// EQA_CONFIG environment variable), then built-in defaults.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "eqa/commands.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Answer multiple-choice science questions with answer-entailing structures"};
    app.require_subcommand(1);

    std::string config_path;
    eqa::RunOverrides overrides;
    std::uint64_t seed = 0;
    std::size_t beam = 0;
    std::size_t threads = 0;
    std::string scheme;
    std::string ablate;

    app.add_option("--config", config_path, "JSON run configuration")->envname("EQA_CONFIG");
    auto* seed_opt = app.add_option("--seed", seed, "random seed");
    auto* beam_opt = app.add_option("--beam", beam, "beam width")->check(CLI::PositiveNumber);
    auto* scheme_opt = app.add_option("--task-scheme", scheme, "none, qword or qtype");
    app.add_flag("--no-negation", overrides.no_negation, "disable negation handling");
    app.add_flag("--joint-review", overrides.joint_review, "train jointly on review questions");
    auto* ablate_opt = app.add_option("--ablate", ablate, "comma-separated blocks to zero (z1..z5, K)");
    auto* threads_opt = app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    auto* index_cmd = app.add_subcommand("index", "build the retrieval index cache");
    auto* train_cmd = app.add_subcommand("train", "train a model");
    auto* predict_cmd = app.add_subcommand("predict", "write predictions JSONL");
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a model");
    auto* ablate_cmd = app.add_subcommand("ablate", "run feature ablations");
    for (auto* sub : {index_cmd, train_cmd, predict_cmd, eval_cmd, ablate_cmd}) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (config_path.empty()) {
            eqa::fail(eqa::ErrorKind::config, "no config file given (use --config or set EQA_CONFIG)");
        }
        auto config = eqa::load_run_config(config_path);
        if (*seed_opt) {
            overrides.seed = seed;
        }
        if (*beam_opt) {
            overrides.beam = beam;
        }
        if (*scheme_opt) {
            overrides.task_scheme = scheme;
        }
        if (*ablate_opt) {
            overrides.ablate = ablate;
        }
        if (*threads_opt) {
            overrides.threads = threads;
        }
        eqa::apply_overrides(config, overrides);

        if (index_cmd->parsed()) {
            eqa::cmd_index(config, std::cout);
        } else if (train_cmd->parsed()) {
            eqa::cmd_train(config, std::cout);
        } else if (predict_cmd->parsed()) {
            eqa::cmd_predict(config, std::cout);
        } else if (eval_cmd->parsed()) {
            eqa::cmd_eval(config, std::cout);
        } else if (ablate_cmd->parsed()) {
            eqa::cmd_ablate(config, std::cout);
        }
    } catch (const eqa::Error& e) {
        std::cerr << "error [" << eqa::to_string(e.kind()) << "]: " << e.what() << '\n';
        return eqa::exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error [internal]: " << e.what() << '\n';
        return 1;
    }
    return EXIT_SUCCESS;
}
