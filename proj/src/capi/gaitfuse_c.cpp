#include <gaitfuse/gaitfuse.h>

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "app/commands.hpp"
#include "common/error.hpp"
#include "metric/losses.hpp"
#include "metric/siamese.hpp"
#include "nn/checkpoint.hpp"

struct gf_config {
  gaitfuse::app::RunConfig cfg;
};

struct gf_model {
  gaitfuse::nn::Model trunk;
};

namespace {

thread_local std::string g_last_error;
gf_log_fn g_log = nullptr;
void* g_log_user = nullptr;

gf_status to_status(gaitfuse::ErrorCode c) {
  using gaitfuse::ErrorCode;
  switch (c) {
    case ErrorCode::InvalidArgument: return GF_E_INVALID_ARGUMENT;
    case ErrorCode::ShapeMismatch: return GF_E_SHAPE_MISMATCH;
    case ErrorCode::NumericDivergence: return GF_E_NUMERIC_DIVERGENCE;
    case ErrorCode::Io: return GF_E_IO;
    case ErrorCode::Parse: return GF_E_PARSE;
    case ErrorCode::NonMonotoneTime: return GF_E_NON_MONOTONE_TIME;
    case ErrorCode::MissingColumns: return GF_E_MISSING_COLUMNS;
    case ErrorCode::EmptyInput: return GF_E_EMPTY_INPUT;
    case ErrorCode::CheckpointMagic: return GF_E_CHECKPOINT_MAGIC;
    case ErrorCode::CheckpointVersion: return GF_E_CHECKPOINT_VERSION;
    case ErrorCode::CheckpointTruncated: return GF_E_CHECKPOINT_TRUNCATED;
    case ErrorCode::CheckpointFormat: return GF_E_CHECKPOINT_FORMAT;
    case ErrorCode::Config: return GF_E_CONFIG;
    case ErrorCode::StructureMismatch: return GF_E_STRUCTURE_MISMATCH;
  }
  return GF_E_INTERNAL;
}

template <typename F>
gf_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return GF_OK;
  } catch (const gaitfuse::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return GF_E_INTERNAL;
}

gf_status null_arg(const char* what) {
  g_last_error = std::string(what) + " must not be NULL";
  return GF_E_INVALID_ARGUMENT;
}

gaitfuse::app::Log logger() {
  if (!g_log) return {};
  return [](const std::string& line) { g_log(line.c_str(), g_log_user); };
}

}  // namespace

extern "C" {

const char* gf_last_error(void) { return g_last_error.c_str(); }

const char* gf_status_name(gf_status s) {
  switch (s) {
    case GF_OK: return "ok";
    case GF_E_INTERNAL: return "internal";
    default:
      if (s >= GF_E_INVALID_ARGUMENT && s <= GF_E_STRUCTURE_MISMATCH)
        return gaitfuse::to_string(static_cast<gaitfuse::ErrorCode>(s));
  }
  return "unknown";
}

const char* gf_version(void) { return "0.1.0"; }

void gf_set_log(gf_log_fn fn, void* user) {
  g_log = fn;
  g_log_user = user;
}

gf_status gf_config_default(gf_config** out) {
  if (!out) return null_arg("out");
  return guarded([&] { *out = new gf_config{gaitfuse::app::RunConfig::defaults()}; });
}

gf_status gf_config_load(const char* path, gf_config** out) {
  if (!path) return null_arg("path");
  if (!out) return null_arg("out");
  return guarded([&] { *out = new gf_config{gaitfuse::app::load_config(path)}; });
}

gf_status gf_config_parse(const char* json_text, gf_config** out) {
  if (!json_text) return null_arg("json_text");
  if (!out) return null_arg("out");
  return guarded([&] { *out = new gf_config{gaitfuse::app::parse_config(json_text)}; });
}

gf_status gf_config_set_seed(gf_config* c, uint64_t seed) {
  if (!c) return null_arg("cfg");
  return guarded([&] {
    // Offsets reproduce the default seeds when seed = 1.
    auto& r = c->cfg;
    r.dataset.seed = seed;
    r.model.seed = seed + 2;
    r.train.seed = seed + 4;
    r.fusion.seed = seed + 10;
    r.drift.seed = seed + 12;
    r.transfer.target_seed = seed + 70;
    r.threat.noise.seed = seed + 1233;
    r.threat.attack_seed = seed + 4241;
    for (auto& s : r.threat.scenarios) s.seed = seed + 8;
  });
}

gf_status gf_config_to_json(const gf_config* c, char** out) {
  if (!c) return null_arg("cfg");
  if (!out) return null_arg("out");
  return guarded([&] {
    const std::string s = gaitfuse::app::to_json(c->cfg);
    char* buf = new char[s.size() + 1];
    std::memcpy(buf, s.c_str(), s.size() + 1);
    *out = buf;
  });
}

void gf_config_free(gf_config* c) { delete c; }
void gf_string_free(char* s) { delete[] s; }

gf_status gf_cmd_synth(const gf_config* c, const char* out_dir) {
  if (!c) return null_arg("cfg");
  if (!out_dir) return null_arg("out_dir");
  return guarded([&] { gaitfuse::app::cmd_synth(c->cfg, out_dir, logger()); });
}

gf_status gf_cmd_train(const gf_config* c, const char* out_dir) {
  if (!c) return null_arg("cfg");
  if (!out_dir) return null_arg("out_dir");
  return guarded([&] { gaitfuse::app::cmd_train(c->cfg, out_dir, logger()); });
}

gf_status gf_cmd_eval(const gf_config* c, const char* checkpoint, const char* out_dir) {
  if (!c) return null_arg("cfg");
  if (!checkpoint) return null_arg("checkpoint");
  if (!out_dir) return null_arg("out_dir");
  return guarded([&] { gaitfuse::app::cmd_eval(c->cfg, checkpoint, out_dir, logger()); });
}

gf_status gf_cmd_transfer(const gf_config* c, const char* source, const char* out_dir) {
  if (!c) return null_arg("cfg");
  if (!out_dir) return null_arg("out_dir");
  return guarded([&] {
    std::filesystem::path src = source && *source ? std::filesystem::path(source)
                                : !c->cfg.transfer.source.empty()
                                    ? std::filesystem::path(c->cfg.transfer.source)
                                    : std::filesystem::path(out_dir) / "model.gfck";
    gaitfuse::app::cmd_transfer(c->cfg, src, out_dir, logger());
  });
}

gf_status gf_cmd_fuse(const gf_config* c, const char* checkpoint, const char* out_dir) {
  if (!c) return null_arg("cfg");
  if (!out_dir) return null_arg("out_dir");
  return guarded([&] {
    gaitfuse::app::cmd_fuse(c->cfg, checkpoint ? checkpoint : "", out_dir, logger());
  });
}

gf_status gf_cmd_attack(const gf_config* c, const char* undefended, const char* defended,
                        const char* out_dir) {
  if (!c) return null_arg("cfg");
  if (!undefended) return null_arg("undefended_checkpoint");
  if (!defended) return null_arg("defended_checkpoint");
  if (!out_dir) return null_arg("out_dir");
  return guarded(
      [&] { gaitfuse::app::cmd_attack(c->cfg, undefended, defended, out_dir, logger()); });
}

gf_status gf_cmd_profile(const gf_config* c, const char* out_dir) {
  if (!c) return null_arg("cfg");
  if (!out_dir) return null_arg("out_dir");
  return guarded([&] { gaitfuse::app::cmd_profile(c->cfg, out_dir, logger()); });
}

gf_status gf_model_load(const char* checkpoint, gf_model** out) {
  if (!checkpoint) return null_arg("checkpoint");
  if (!out) return null_arg("out");
  return guarded([&] {
    auto ck = gaitfuse::nn::load_checkpoint(gaitfuse::nn::read_file(checkpoint));
    *out = new gf_model{std::move(ck.trunk)};
  });
}

void gf_model_free(gf_model* m) { delete m; }

gf_status gf_model_param_count(const gf_model* m, size_t* out) {
  if (!m) return null_arg("model");
  if (!out) return null_arg("out");
  *out = m->trunk.param_count();
  g_last_error.clear();
  return GF_OK;
}

gf_status gf_model_embedding_dim(const gf_model* m, size_t* out) {
  if (!m) return null_arg("model");
  if (!out) return null_arg("out");
  return guarded([&] {
    size_t n = 1;
    for (size_t d : m->trunk.output_shape()) n *= d;
    *out = n;
  });
}

gf_status gf_model_embed(const gf_model* m, const double* pixels, size_t n_pixels, double* out,
                         size_t out_len) {
  if (!m) return null_arg("model");
  if (!pixels) return null_arg("pixels");
  if (!out) return null_arg("out");
  return guarded([&] {
    const auto& shape = m->trunk.input_shape();
    size_t need = 1;
    for (size_t d : shape) need *= d;
    gaitfuse::require(n_pixels == need, gaitfuse::ErrorCode::ShapeMismatch,
                      "expected " + std::to_string(need) + " pixels, got " +
                          std::to_string(n_pixels));
    gaitfuse::nn::Tensor t(shape, std::vector<double>(pixels, pixels + n_pixels));
    const auto e = gaitfuse::metric::embed(m->trunk, t);
    gaitfuse::require(out_len == e.size(), gaitfuse::ErrorCode::ShapeMismatch,
                      "output buffer holds " + std::to_string(out_len) + " values, embedding has " +
                          std::to_string(e.size()));
    std::memcpy(out, e.data(), e.size() * sizeof(double));
  });
}

double gf_distance(const double* a, const double* b, size_t n) {
  if (!a || !b) return -1.0;
  return gaitfuse::metric::distance({a, n}, {b, n});
}

}  // extern "C"
