#include <gaitfuse/gaitfuse.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

void print_line(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

int report(gf_status s, const char* what) {
  if (s == GF_OK) return 0;
  std::fprintf(stderr, "gaitfuse %s: %s (%s)\n", what, gf_last_error(), gf_status_name(s));
  return s == GF_E_CONFIG ? kExitUsage : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gaitfuse: Siamese gait authentication toolkit"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path, out = "out";
  std::uint64_t seed = 0;
  bool quiet = false, dump_config = false;
  auto* seed_opt = app.add_option("--seed", seed, "Override every seed in the config");
  app.add_option("--config", config_path, "JSON run config (defaults when omitted)")
      ->check(CLI::ExistingFile);
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_flag("--quiet", quiet, "No progress output");
  app.add_flag("--dump-config", dump_config,
               "Print the effective config as canonical JSON and exit");

  std::string checkpoint, defended, source;
  auto* synth = app.add_subcommand("synth", "Write synthetic trace CSVs and a manifest");
  auto* train = app.add_subcommand("train", "Train a model: model.gfck, history.jsonl");
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint: eval.json");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint (default <out>/model.gfck)");
  auto* transfer = app.add_subcommand("transfer", "Frozen-layer transfer to a fresh subject");
  transfer->add_option("--source", source, "Source checkpoint (default <out>/model.gfck)");
  auto* fuse = app.add_subcommand("fuse", "SPRT login sessions (fuse.json), or the drift retrain (drift.json)");
  fuse->add_option("--checkpoint", checkpoint, "Checkpoint (default <out>/model.gfck)");
  auto* attack = app.add_subcommand("attack", "Passive/active attack matrix: attack.json");
  attack->add_option("--checkpoint", checkpoint,
                     "Undefended checkpoint (default <out>/model.gfck)");
  attack->add_option("--defended", defended, "Defended checkpoint (default <out>/defended.gfck)");
  auto* profile = app.add_subcommand("profile", "Timing report: profile.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  gf_config* cfg = nullptr;
  gf_status s = config_path.empty() ? gf_config_default(&cfg) : gf_config_load(config_path.c_str(), &cfg);
  if (s != GF_OK) return report(s, "config");
  if (*seed_opt) gf_config_set_seed(cfg, seed);
  if (!quiet) gf_set_log(print_line, nullptr);

  if (dump_config) {
    char* text = nullptr;
    s = gf_config_to_json(cfg, &text);
    if (s == GF_OK) {
      std::fputs(text, stdout);
      gf_string_free(text);
    }
    gf_config_free(cfg);
    return report(s, "config");
  }
  if (app.get_subcommands().empty()) {
    std::fputs(app.help().c_str(), stderr);
    gf_config_free(cfg);
    return kExitUsage;
  }

  const std::string default_ckpt = (std::filesystem::path(out) / "model.gfck").string();
  if (checkpoint.empty()) checkpoint = default_ckpt;
  if (defended.empty()) defended = (std::filesystem::path(out) / "defended.gfck").string();

  int rc = 0;
  if (*synth) {
    rc = report(gf_cmd_synth(cfg, out.c_str()), "synth");
  } else if (*train) {
    rc = report(gf_cmd_train(cfg, out.c_str()), "train");
  } else if (*eval) {
    rc = report(gf_cmd_eval(cfg, checkpoint.c_str(), out.c_str()), "eval");
  } else if (*transfer) {
    rc = report(gf_cmd_transfer(cfg, source.c_str(), out.c_str()), "transfer");
  } else if (*fuse) {
    rc = report(gf_cmd_fuse(cfg, checkpoint.c_str(), out.c_str()), "fuse");
  } else if (*attack) {
    rc = report(gf_cmd_attack(cfg, checkpoint.c_str(), defended.c_str(), out.c_str()), "attack");
  } else if (*profile) {
    rc = report(gf_cmd_profile(cfg, out.c_str()), "profile");
  }
  gf_config_free(cfg);
  return rc;
}
