#pragma once

#include <iosfwd>
#include <string>

#include "eqa/error.hpp"
#include "eqa/run_config.hpp"

namespace eqa {

/// Process exit code for a failure category.
int exit_code(ErrorKind kind) noexcept;

/// Corpus, indices (from the cache when it matches), knowledge resources and
/// the question processor, as named by a run configuration.
struct Workspace {
    Resources resources;
    QuestionProcessor processor;
};

Workspace load_workspace(const RunConfig& config, const FeatureConfig& features);

/// One predictions-JSONL record: per-candidate scores and the winning
/// structure by ids.
std::string prediction_json(const Question& question, const Prediction& prediction, const Resources& resources);

/// Writes the index cache.
void cmd_index(const RunConfig& config, std::ostream& log);
/// Writes the model file and the objective trace.
void cmd_train(const RunConfig& config, std::ostream& log);
/// Writes predictions JSONL (to stdout when no path is configured).
void cmd_predict(const RunConfig& config, std::ostream& out);
/// Writes the report JSON and prints the table.
EvalReport cmd_eval(const RunConfig& config, std::ostream& out);
/// Runs the full setting plus one setting per ablated block.
std::vector<EvalReport> cmd_ablate(const RunConfig& config, std::ostream& out);

}  // namespace eqa
