#pragma once

#include <filesystem>
#include <string>

#include "app/pipeline.hpp"
#include "metric/evaluate.hpp"
#include "threat/attack.hpp"

namespace gaitfuse::app {

namespace fs = std::filesystem;

// Per-subject trace CSVs (<id>.csv) and manifest.json.
void cmd_synth(const RunConfig& cfg, const fs::path& out, const Log& log = {});

// model.gfck and history.jsonl. On divergence the history so far is written
// and NumericDivergence is rethrown.
void cmd_train(const RunConfig& cfg, const fs::path& out, const Log& log = {});

// eval.json for the checkpoint against the configured dataset.
void cmd_eval(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& out,
              const Log& log = {});

// Frozen-k training (and optionally from scratch) for one fresh subject:
// transfer.gfck, transfer_history.jsonl and transfer.json.
void cmd_transfer(const RunConfig& cfg, const fs::path& source, const fs::path& out,
                  const Log& log = {});

// Simulated login sessions through SPRT: decisions.jsonl and fuse.json. The
// checkpoint is not read for the "wald" stream. The "drift" stream instead
// runs the session-2 feedback retrain: drift.json and drift.gfck.
void cmd_fuse(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& out,
              const Log& log = {});

// Scenario matrix over an undefended and a defended model: attack.json.
// Missing checkpoints are trained from the config and saved at those paths.
void cmd_attack(const RunConfig& cfg, const fs::path& undefended, const fs::path& defended,
                const fs::path& out, const Log& log = {});

// Timing report: profile.json.
void cmd_profile(const RunConfig& cfg, const fs::path& out, const Log& log = {});

std::string eval_report_json(const metric::EvalReport& r);
std::string attack_report_json(const threat::AttackReport& r);

}  // namespace gaitfuse::app
