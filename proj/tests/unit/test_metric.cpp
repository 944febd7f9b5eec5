#include <doctest.h>

#include <cstring>
#include <random>

#include "fd.hpp"
#include "metric/evaluate.hpp"
#include "metric/siamese.hpp"

using namespace gaitfuse;
using namespace gaitfuse::metric;
using gaitfuse::pairing::PairRecord;

namespace {

std::vector<double> rand_vec(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

nn::ArchSpec tiny_arch() {
  return {"tiny",
          {1, 6, 6},
          {nn::LayerSpec::conv2d(3, 3, 3, 1), nn::LayerSpec::relu(), nn::LayerSpec::maxpool(2),
           nn::LayerSpec::flatten(), nn::LayerSpec::dense(5)}};
}

pairing::SampleStore tiny_store(std::size_t n, std::mt19937_64& rng) {
  pairing::SampleStore store;
  for (std::size_t i = 0; i < n; ++i) {
    nn::Tensor t({1, 6, 6});
    auto v = rand_vec(36, rng);
    std::copy(v.begin(), v.end(), t.data());
    store.add({t, i < n / 2 ? "a" : "b", pairing::SampleOrigin::Genuine});
  }
  return store;
}

}  // namespace

TEST_CASE("distance") {
  const std::vector<double> a{1, 0}, z{0, 0};
  CHECK(distance(a, a) == 0.0);
  CHECK(distance(a, z) == 1.0);
  CHECK_THROWS_AS(distance(a, std::vector<double>{1.0}), Error);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const auto x = rand_vec(128, rng), y = rand_vec(128, rng);
    long double ss = 0.0L;
    for (std::size_t i = 0; i < x.size(); ++i) ss += (long double)(x[i] - y[i]) * (x[i] - y[i]);
    CHECK(std::abs(distance(x, y) - std::sqrt((double)ss)) <= 1e-12 * std::sqrt((double)ss));
  }
}

TEST_CASE("contrastive unit values") {
  const ScoredPair a{0.5, 1}, b{2.0, 0}, c{1.0, 0};
  CHECK(contrastive_loss({&a, 1}, 1.5) == 0.25);
  CHECK(contrastive_loss({&b, 1}, 1.5) == 0.0);
  CHECK(contrastive_loss({&c, 1}, 1.5) == 0.25);
  const std::vector<ScoredPair> all{a, b, c};
  CHECK(contrastive_loss(all, 1.5) == 0.5);
  const std::vector<ScoredPair> zero{{0.0, 1}, {1.5, 0}, {3.0, 0}};
  CHECK(contrastive_loss(zero, 1.5) == 0.0);
}

TEST_CASE("cross-entropy unit values") {
  const ProbPair half1{0.5, 1}, half0{0.5, 0}, sure{1.0 - 1e-12, 1};
  CHECK(std::abs(cross_entropy_pair_loss({&half1, 1}) - std::log(2.0)) <= 1e-12);
  CHECK(std::abs(cross_entropy_pair_loss({&half0, 1}) - std::log(2.0)) <= 1e-12);
  CHECK(cross_entropy_pair_loss({&sure, 1}) < 1e-6);
  const ProbPair zero{0.0, 1};
  CHECK(std::isfinite(cross_entropy_pair_loss({&zero, 1})));
}

TEST_CASE("joint loss with alpha 0 is contrastive bitwise") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 3.0), pu(0.0, 1.0);
  std::vector<ScoredPair> s;
  std::vector<ProbPair> p;
  for (int i = 0; i < 50; ++i) {
    s.push_back({u(rng), i % 2});
    p.push_back({pu(rng), i % 2});
  }
  const double c = contrastive_loss(s, 1.5);
  const double j = joint_loss(s, p, 1.5, 0.0);
  CHECK(std::memcmp(&c, &j, sizeof(double)) == 0);
  CHECK(joint_loss(s, p, 1.5, 0.1) == doctest::Approx(c + 0.1 * cross_entropy_pair_loss(p)));
}

TEST_CASE("probability head") {
  std::mt19937_64 rng(4);
  nn::Model head = make_probability_head(8, 1);
  const auto x = rand_vec(8, rng), y = rand_vec(8, rng);
  CHECK_THROWS_AS(pair_probability(nullptr, x, y), Error);
  head.layers()[0].weight.fill(0.0);
  CHECK(pair_probability(&head, x, y) == 0.5);
  head = make_probability_head(8, 2);
  head.layers()[0].bias[0] = 0.7;
  CHECK(pair_probability(&head, x, x) == doctest::Approx(1.0 / (1.0 + std::exp(-0.7))).epsilon(1e-15));
}

TEST_CASE("pair term gradients match finite differences") {
  std::mt19937_64 rng(5);
  for (auto mode : {LossMode::Contrastive, LossMode::CrossEntropy, LossMode::Joint})
    for (int label : {0, 1})
      for (double scale : {0.2, 1.0}) {
        CAPTURE(to_string(mode));
        CAPTURE(label);
        LossConfig cfg;
        cfg.mode = mode;
        nn::Model head = make_probability_head(6, 7);
        head.layers()[0].bias[0] = 0.3;
        auto x = rand_vec(6, rng, scale), y = rand_vec(6, rng, scale);
        nn::Gradients hg = nn::Gradients::zeros_like(head);
        const PairTerm t = pair_term(cfg, &head, x, y, label, &hg);
        auto f = [&] { return pair_term(cfg, &head, x, y, label, nullptr).loss; };
        CHECK(fdcheck::max_rel_err(x, t.d_phi1, f) < 1e-5);
        CHECK(fdcheck::max_rel_err(y, t.d_phi2, f) < 1e-5);
        if (cfg.needs_head()) {
          CHECK(fdcheck::max_rel_err(head.layers()[0].weight.values(), hg.weight[0].values(), f) < 1e-5);
          CHECK(fdcheck::max_rel_err(head.layers()[0].bias.values(), hg.bias[0].values(), f) < 1e-5);
        }
      }
}

TEST_CASE("batch gradient through the shared trunk matches finite differences") {
  std::mt19937_64 rng(6);
  const auto store = tiny_store(6, rng);
  const std::vector<PairRecord> batch{{0, 1, 1}, {0, 4, 0}, {2, 5, 0}, {3, 3, 1}, {1, 2, 1}, {5, 1, 0}};
  for (auto mode : {LossMode::Contrastive, LossMode::CrossEntropy, LossMode::Joint}) {
    CAPTURE(to_string(mode));
    LossConfig cfg;
    cfg.mode = mode;
    SiameseModel m = make_siamese(tiny_arch(), cfg, 11);
    for (auto& l : m.trunk.layers())
      for (double& b : l.bias.values()) b = 0.05;
    const BatchGrad g = batch_gradient(m, store, batch);
    auto f = [&] { return batch_gradient(m, store, batch).loss_sum; };
    double worst = 0.0;
    for (std::size_t i : m.trunk.weight_layer_indices()) {
      auto& l = m.trunk.layers()[i];
      worst = std::max(worst, fdcheck::max_rel_err(l.weight.values(), g.trunk.weight[i].values(), f));
      worst = std::max(worst, fdcheck::max_rel_err(l.bias.values(), g.trunk.bias[i].values(), f));
    }
    if (m.head) {
      auto& l = m.head->layers()[0];
      worst = std::max(worst, fdcheck::max_rel_err(l.weight.values(), g.head.weight[0].values(), f));
      worst = std::max(worst, fdcheck::max_rel_err(l.bias.values(), g.head.bias[0].values(), f));
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("training contracts") {
  std::mt19937_64 rng(7);
  const auto store = tiny_store(6, rng);
  pairing::PairPool pool{{{0, 0, 1}, {1, 1, 1}, {0, 1, 1}}, {{0, 4, 0}, {1, 5, 0}, {2, 3, 0}}};
  LossConfig cfg;
  SiameseModel m = make_siamese(tiny_arch(), cfg, 2);
  const SiameseModel before = m;
  TrainConfig tc;
  tc.batch_size = 4;
  tc.epochs = 0;
  CHECK(train(m, store, pool, tc).empty());
  CHECK(m.trunk == before.trunk);

  tc.epochs = 3;
  const auto h1 = train(m, store, pool, tc);
  SiameseModel again = before;
  const auto h2 = train(again, store, pool, tc);
  CHECK(h1.size() == 3);
  CHECK(m.trunk == again.trunk);
  CHECK(*m.head == *again.head);
  for (std::size_t i = 0; i < h1.size(); ++i) CHECK(h1[i].loss == h2[i].loss);

  // Self-pair: phi1 = phi2 so the contrastive loss is zero from the start.
  LossConfig c;
  c.mode = LossMode::Contrastive;
  SiameseModel s = make_siamese(tiny_arch(), c, 3);
  const PairRecord self{2, 2, 1};
  CHECK(batch_gradient(s, store, {&self, 1}).loss_sum == 0.0);

  tc.lr = 1e6;
  tc.epochs = 50;
  SiameseModel wild = before;
  CHECK_THROWS_AS(train(wild, store, pool, tc), Error);
}

TEST_CASE("transfer init") {
  LossConfig cfg;
  nn::Model source = nn::build_model(nn::lenet4(), 40);
  const SiameseModel fresh = make_siamese(nn::lenet4(), cfg, 9);
  const SiameseModel k0 = transfer_init(nn::lenet4(), source, 0, cfg, 9);
  CHECK(k0.trunk == fresh.trunk);

  const SiameseModel k3 = transfer_init(nn::lenet4(), source, 3, cfg, 9);
  const auto idx = k3.trunk.weight_layer_indices();
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(k3.trunk.layers()[idx[j]].weight == source.layers()[idx[j]].weight);
    CHECK_FALSE(k3.trunk.layers()[idx[j]].spec.trainable);
  }
  CHECK(k3.trunk.layers()[idx[3]].weight == fresh.trunk.layers()[idx[3]].weight);
  CHECK(k3.trunk.layers()[idx[3]].spec.trainable);

  nn::Model other = nn::build_model(nn::vgg8(), 1);
  CHECK_THROWS_AS(transfer_init(nn::lenet4(), other, 1, cfg, 9), Error);
  CHECK_THROWS_AS(transfer_init(nn::lenet4(), source, 5, cfg, 9), Error);
}

TEST_CASE("siamese checkpoint") {
  LossConfig cfg;
  const SiameseModel m = make_siamese(nn::lenet4(), cfg, 4);
  const auto bytes = save_siamese(m);
  const SiameseModel back = load_siamese(bytes, cfg);
  CHECK(back.trunk == m.trunk);
  CHECK(*back.head == *m.head);
  CHECK(save_siamese(back) == bytes);
  LossConfig c;
  c.mode = LossMode::Contrastive;
  CHECK_THROWS_AS(load_siamese(save_siamese(make_siamese(nn::lenet4(), c, 1)), cfg), Error);
}

TEST_CASE("evaluation metrics") {
  std::vector<LabelledDistance> sep;
  for (int i = 0; i < 10; ++i) sep.push_back({0.05 * i, 1, "a"});
  for (int i = 0; i < 10; ++i) sep.push_back({1.0 + 0.1 * i, 0, "a"});
  const EvalReport r = evaluate_distances(sep, default_thresholds(), 1.5);
  CHECK(r.eer == 0.0);
  CHECK(r.map == 1.0);
  CHECK(r.curve.size() == 59);
  CHECK(r.curve.front().threshold == doctest::Approx(0.1));
  CHECK(r.curve.back().threshold == doctest::Approx(3.0));
  for (std::size_t i = 1; i < r.curve.size(); ++i) {
    CHECK(r.curve[i].far >= r.curve[i - 1].far);
    CHECK(r.curve[i].frr <= r.curve[i - 1].frr);
  }

  // EER interpolation: one positive at 1.0, one negative at 0.5.
  const std::vector<LabelledDistance> flip{{1.0, 1, "a"}, {0.5, 0, "a"}};
  const EvalReport f = evaluate_distances(flip, {0.4, 0.6, 0.9, 1.1}, 1.5);
  CHECK(f.eer == doctest::Approx(1.0));

  CHECK_THROWS_AS(evaluate_distances({{0.1, 1, "a"}}, default_thresholds(), 1.5), Error);

  // Labels independent of distances: accuracy near one half.
  double acc = 0.0;
  const int seeds = 40;
  for (int seed = 0; seed < seeds; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.5);
    std::vector<LabelledDistance> s;
    for (int i = 0; i < 400; ++i) s.push_back({u(rng), int(rng() & 1), std::to_string(i % 4)});
    acc += evaluate_distances(s, default_thresholds(), 1.5).map;
  }
  CHECK(std::abs(acc / seeds - 0.5) <= 0.05);
}
