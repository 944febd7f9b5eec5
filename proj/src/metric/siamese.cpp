#include "metric/siamese.hpp"

#include <map>

namespace gaitfuse::metric {

SiameseModel make_siamese(const nn::ArchSpec& arch, const LossConfig& loss, std::uint64_t seed) {
  loss.validate();
  SiameseModel m{nn::build_model(arch, seed), std::nullopt, loss};
  require(m.trunk.output_shape().size() == 1, ErrorCode::ShapeMismatch,
          "trunk must end in a flat embedding");
  if (loss.needs_head())
    m.head = make_probability_head(m.trunk.output_shape()[0], seed ^ 0x5bd1e995ULL);
  return m;
}

std::vector<double> embed(const nn::Model& trunk, const nn::Tensor& image) {
  return nn::forward_range(trunk, image, 0, nn::kAllLayers, nullptr).vec();
}

std::vector<std::vector<double>> embed_all(const nn::Model& trunk, const pairing::SampleStore& store,
                                           std::span<const std::size_t> ids) {
  std::vector<std::vector<double>> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) out.push_back(embed(trunk, store[id].pixels));
  return out;
}

PrefixCache::PrefixCache(const nn::Model& trunk, const pairing::SampleStore& store)
    : trunk_(&trunk), store_(&store), begin_(trunk.first_trainable_layer()),
      acts_(store.size()) {}

const nn::Tensor& PrefixCache::input(std::size_t sample) {
  auto& slot = acts_.at(sample);
  if (!slot) slot = nn::forward_range(*trunk_, (*store_)[sample].pixels, 0, begin_, nullptr);
  return *slot;
}

BatchGrad batch_gradient(const SiameseModel& model, const pairing::SampleStore& store,
                         std::span<const pairing::PairRecord> batch, PrefixCache* prefix) {
  require(!model.loss.needs_head() || model.head.has_value(), ErrorCode::InvalidArgument,
          "loss mode needs a probability head");
  const std::size_t begin = prefix ? prefix->begin() : 0;

  // Distinct images in first-use order keep the reduction order fixed.
  std::map<std::size_t, std::size_t> slot;
  std::vector<std::size_t> ids;
  for (const auto& p : batch)
    for (std::size_t s : {p.left, p.right})
      if (slot.emplace(s, ids.size()).second) ids.push_back(s);

  std::vector<nn::ForwardCache> caches(ids.size());
  std::vector<std::vector<double>> phi(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const nn::Tensor& in = prefix ? prefix->input(ids[i]) : store[ids[i]].pixels;
    phi[i] = nn::forward_range(model.trunk, in, begin, nn::kAllLayers, &caches[i]).vec();
  }

  BatchGrad out;
  out.trunk = nn::Gradients::zeros_like(model.trunk);
  if (model.head) out.head = nn::Gradients::zeros_like(*model.head);
  const std::size_t dim = phi.empty() ? 0 : phi[0].size();
  std::vector<std::vector<double>> dphi(ids.size(), std::vector<double>(dim, 0.0));
  for (const auto& p : batch) {
    const std::size_t a = slot[p.left], b = slot[p.right];
    const PairTerm t = pair_term(model.loss, model.head ? &*model.head : nullptr, phi[a], phi[b],
                                 p.label, model.head ? &out.head : nullptr);
    out.loss_sum += t.loss;
    for (std::size_t k = 0; k < dim; ++k) {
      dphi[a][k] += t.d_phi1[k];
      dphi[b][k] += t.d_phi2[k];
    }
  }
  for (std::size_t i = 0; i < ids.size(); ++i)
    nn::backward_accumulate(model.trunk, caches[i], nn::Tensor({dim}, dphi[i]), out.trunk);
  return out;
}

std::vector<EpochStats> train(SiameseModel& model, const pairing::SampleStore& store,
                              const pairing::PairPool& pool, const TrainConfig& cfg,
                              const EpochCallback& on_epoch) {
  require(cfg.lr > 0.0 && std::isfinite(cfg.lr), ErrorCode::InvalidArgument,
          "learning rate must be positive");
  require(pool.size() > 0, ErrorCode::EmptyInput, "training buffer is empty");
  std::vector<EpochStats> history;
  if (cfg.epochs == 0) return history;
  pairing::BatchSampler sampler(pool, cfg.batch_size, cfg.seed);
  PrefixCache prefix(model.trunk, store);

  for (std::size_t e = 1; e <= cfg.epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    double total = 0.0;
    std::size_t pairs = 0;
    for (const auto& b : sampler.epoch()) {
      BatchGrad g = batch_gradient(model, store, b, &prefix);
      if (!std::isfinite(g.loss_sum))
        fail(ErrorCode::NumericDivergence,
             "loss became non-finite in epoch " + std::to_string(e));
      const double scale = 1.0 / static_cast<double>(b.size());
      g.trunk.scale(scale);
      nn::sgd_step(model.trunk, g.trunk, cfg.lr);
      if (model.head) {
        g.head.scale(scale);
        nn::sgd_step(*model.head, g.head, cfg.lr);
      }
      total += g.loss_sum;
      pairs += b.size();
    }
    const auto t1 = std::chrono::steady_clock::now();
    EpochStats s{e, total / static_cast<double>(pairs),
                 std::chrono::duration<double, std::milli>(t1 - t0).count()};
    history.push_back(s);
    if (on_epoch) on_epoch(s);
    if (cfg.stop_below > 0.0 && s.loss < cfg.stop_below) break;
  }
  return history;
}

SiameseModel transfer_init(const nn::ArchSpec& arch, const nn::Model& source, std::size_t k,
                           const LossConfig& loss, std::uint64_t seed) {
  SiameseModel target = make_siamese(arch, loss, seed);
  if (k == 0) return target;
  const auto idx = target.trunk.weight_layer_indices();
  require(k <= idx.size(), ErrorCode::InvalidArgument,
          "cannot transfer " + std::to_string(k) + " of " + std::to_string(idx.size()) +
              " weight layers");
  const std::size_t upto = idx[k - 1];
  const auto& src = source.layers();
  auto& dst = target.trunk.layers();
  require(source.input_shape() == target.trunk.input_shape(), ErrorCode::StructureMismatch,
          "source and target inputs differ");
  for (std::size_t i = 0; i <= upto; ++i) {
    if (i >= src.size() || !src[i].spec.same_structure(dst[i].spec) ||
        src[i].in_shape != dst[i].in_shape || src[i].out_shape != dst[i].out_shape)
      fail(ErrorCode::StructureMismatch,
           "source and target disagree at layer " + std::to_string(i) + " (" +
               (i < src.size() ? src[i].spec.describe() : std::string("missing")) + " vs " +
               dst[i].spec.describe() + ")");
    dst[i].weight = src[i].weight;
    dst[i].bias = src[i].bias;
  }
  nn::set_trainable(target.trunk, k);
  return target;
}

std::vector<std::uint8_t> save_siamese(const SiameseModel& m) {
  return nn::save_checkpoint(m.trunk, m.head ? &*m.head : nullptr);
}

SiameseModel load_siamese(std::span<const std::uint8_t> bytes, const LossConfig& loss) {
  nn::Checkpoint ck = nn::load_checkpoint(bytes);
  SiameseModel m{std::move(ck.trunk), std::move(ck.head), loss};
  if (loss.needs_head()) {
    require(m.head.has_value(), ErrorCode::StructureMismatch,
            "checkpoint has no probability head but the loss needs one");
    require(m.head->input_shape() == m.trunk.output_shape(), ErrorCode::StructureMismatch,
            "probability head does not match the embedding size");
  }
  return m;
}

}  // namespace gaitfuse::metric
