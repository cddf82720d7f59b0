#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "altprobe/metrics.hpp"
#include "altprobe/objective.hpp"
#include "altprobe/probe.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace altprobe;
using altprobe::testing::code_of;

namespace {

struct Data {
  Eigen::MatrixXd x;
  std::vector<int> y;
};

// Two Gaussian blobs pushed apart along a random direction so every point
// sits at least `margin` from the separating hyperplane.
Data separable(std::size_t n, std::size_t d, double margin, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd w(static_cast<Eigen::Index>(d));
  for (auto& v : w) v = normal(rng);
  w.normalize();
  Data out{Eigen::MatrixXd(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d)), {}};
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::VectorXd p(static_cast<Eigen::Index>(d));
    for (auto& v : p) v = normal(rng);
    const int label = i % 2 == 0 ? 1 : 0;
    const double s = p.dot(w);
    p += ((label ? 1.0 : -1.0) * (margin + std::abs(s)) - s) * w;
    out.x.row(static_cast<Eigen::Index>(i)) = p.transpose();
    out.y.push_back(label);
  }
  return out;
}

Data noisy_data(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Data out{Eigen::MatrixXd(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d)), {}};
  for (Eigen::Index i = 0; i < out.x.size(); ++i) out.x.data()[i] = normal(rng);
  for (std::size_t i = 0; i < n; ++i) out.y.push_back(static_cast<int>(rng() % 2));
  return out;
}

double training_accuracy(const Probe& p, const Data& d) { return accuracy(confusion(d.y, p.predict(d.x).label)); }

double softplus_ref(double z) { return z > 30 ? z : std::log1p(std::exp(z)); }

}  // namespace

TEST(LinearProbe, SeparableDataIsFitExactly) {
  const auto d = separable(200, 5, 0.5, 1);
  const auto p = train({}, d.x, d.y);
  EXPECT_EQ(p.status, TrainStatus::Converged);
  EXPECT_EQ(training_accuracy(p, d), 1.0);
  EXPECT_EQ(p.predict(d.x).label, d.y);
}

TEST(LinearProbe, CannotShatterXor) {
  Data d{(Eigen::MatrixXd(4, 2) << 0, 0, 0, 1, 1, 0, 1, 1).finished(), {0, 1, 1, 0}};
  const auto p = train({}, d.x, d.y);
  EXPECT_LE(training_accuracy(p, d), 0.75);
}

TEST(LinearProbe, MatchesGridSearchMinimizer) {
  Data d{Eigen::MatrixXd(40, 1), {}};
  for (int i = 0; i < 20; ++i) {
    d.x(2 * i, 0) = -1;
    d.y.push_back(0);
    d.x(2 * i + 1, 0) = 1;
    d.y.push_back(1);
  }
  const double l2 = 0.5;
  ProbeConfig cfg;
  cfg.l2 = l2;
  const auto p = train(cfg, d.x, d.y);
  ASSERT_EQ(p.status, TrainStatus::Converged);

  // Penalized loss of this dataset written out by hand.
  auto loss = [&](double w, double b) {
    return 0.5 * softplus_ref(b - w) + 0.5 * softplus_ref(-(w + b)) + 0.5 * l2 * w * w;
  };
  double best_w = 0, best_b = 0, best = INFINITY;
  for (int i = -1000; i <= 1000; ++i) {
    for (int j = -1000; j <= 1000; ++j) {
      const double w = i * 0.01, b = j * 0.01, v = loss(w, b);
      if (v < best) best = v, best_w = w, best_b = b;
    }
  }
  const double cw = best_w, cb = best_b;
  for (int i = -200; i <= 200; ++i) {
    for (int j = -200; j <= 200; ++j) {
      const double w = cw + i * 1e-4, b = cb + j * 1e-4, v = loss(w, b);
      if (v < best) best = v, best_w = w, best_b = b;
    }
  }
  EXPECT_NEAR(p.layers[0].weights(0, 0), best_w, 1e-3);
  EXPECT_NEAR(p.layers[0].bias[0], best_b, 1e-3);
}

TEST(Predict, TieGoesPositive) {
  Probe p;
  p.input_dim = 3;
  p.layers = {DenseLayer{Eigen::MatrixXd::Zero(1, 3), Eigen::VectorXd::Zero(1)}};
  const auto out = p.predict(Eigen::MatrixXd::Random(5, 3));
  for (Eigen::Index i = 0; i < 5; ++i) EXPECT_EQ(out.probability[i], 0.5);
  EXPECT_EQ(out.label, std::vector<int>(5, 1));
}

TEST(Predict, DegenerateModelIsConstant) {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 2);
  for (int cls : {0, 1}) {
    const auto p = train({}, x, std::vector<int>(6, cls));
    EXPECT_TRUE(p.degenerate());
    EXPECT_EQ(p.status, TrainStatus::Degenerate);
    EXPECT_EQ(p.predict(Eigen::MatrixXd::Random(4, 2)).label, std::vector<int>(4, cls));
  }
}

TEST(Predict, WidthMismatch) {
  const auto d = separable(20, 3, 0.5, 2);
  const auto p = train({}, d.x, d.y);
  EXPECT_EQ(code_of([&] { p.predict(Eigen::MatrixXd::Zero(2, 4)); }), ErrorCode::DimMismatch);
}

TEST(Train, Preconditions) {
  const Eigen::MatrixXd one = Eigen::MatrixXd::Zero(1, 2);
  EXPECT_EQ(code_of([&] { train({}, one, std::vector<int>{1}); }), ErrorCode::TooFewExamples);
  ProbeConfig neg;
  neg.l2 = -1;
  const auto d = separable(10, 2, 0.5, 3);
  EXPECT_EQ(code_of([&] { train(neg, d.x, d.y); }), ErrorCode::InvalidConfig);
  ProbeConfig rank;
  rank.svd_rank = 3;
  EXPECT_EQ(code_of([&] { train(rank, d.x, d.y); }), ErrorCode::InvalidConfig);
  ProbeConfig zero_hidden;
  zero_hidden.kind = ProbeKind::Mlp1;
  zero_hidden.hidden_size = 0;
  EXPECT_EQ(code_of([&] { train(zero_hidden, d.x, d.y); }), ErrorCode::InvalidConfig);
  Eigen::MatrixXd nan = d.x;
  nan(0, 0) = NAN;
  EXPECT_EQ(code_of([&] { train({}, nan, d.y); }), ErrorCode::DimMismatch);
}

TEST(Objective, ValueMatchesHandWrittenLoss) {
  const auto d = noisy_data(30, 4, 5);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (auto arch : {Architecture{4, 1}, Architecture{4, 3, 1}}) {
    PenalizedLogLoss f(arch, d.x, d.y, 0.3);
    Eigen::VectorXd theta(static_cast<Eigen::Index>(f.size()));
    for (auto& v : theta) v = normal(rng);
    const auto layers = unpack(arch, theta);
    double expected = 0, penalty = 0;
    for (Eigen::Index i = 0; i < d.x.rows(); ++i) {
      Eigen::VectorXd a = d.x.row(i).transpose();
      for (std::size_t l = 0; l < layers.size(); ++l) {
        a = layers[l].weights * a + layers[l].bias;
        if (l + 1 < layers.size()) a = a.cwiseMax(0.0);
      }
      const double z = a[0];
      expected += d.y[static_cast<std::size_t>(i)] ? softplus_ref(-z) : softplus_ref(z);
    }
    for (const auto& l : layers) penalty += l.weights.squaredNorm();  // biases excluded
    expected = expected / static_cast<double>(d.x.rows()) + 0.15 * penalty;
    EXPECT_NEAR(f.value(theta), expected, 1e-12);
  }
}

TEST(Objective, GradientMatchesFiniteDifferences) {
  const auto d = noisy_data(25, 3, 6);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal;
  for (auto arch : {Architecture{3, 1}, Architecture{3, 5, 1}, Architecture{3, 4, 4, 1}}) {
    PenalizedLogLoss f(arch, d.x, d.y, 0.2);
    for (int point = 0; point < 5; ++point) {
      Eigen::VectorXd theta(static_cast<Eigen::Index>(f.size()));
      for (auto& v : theta) v = normal(rng);
      Eigen::VectorXd grad;
      f.value_and_gradient(theta, grad);
      const auto numeric = oracle::numeric_gradient([&](const Eigen::VectorXd& t) { return f.value(t); }, theta);
      EXPECT_LT(oracle::relative_error(grad, numeric), 1e-5);
    }
  }
}

TEST(Objective, NewtonTermsAgree) {
  const auto d = noisy_data(40, 3, 7);
  PenalizedLogLoss f({3, 1}, d.x, d.y, 0.1);
  Eigen::VectorXd theta = Eigen::VectorXd::LinSpaced(4, -0.5, 0.7);
  Eigen::VectorXd g1, g2;
  Eigen::MatrixXd h;
  EXPECT_DOUBLE_EQ(f.linear_newton_terms(theta, g1, h), f.value_and_gradient(theta, g2));
  EXPECT_TRUE(g1.isApprox(g2, 1e-12));
  // Hessian column i is the derivative of the gradient along e_i.
  for (Eigen::Index i = 0; i < 4; ++i) {
    auto gi = [&](const Eigen::VectorXd& t) {
      Eigen::VectorXd g;
      f.value_and_gradient(t, g);
      return g[i];
    };
    EXPECT_LT(oracle::relative_error(h.row(i).transpose(), oracle::numeric_gradient(gi, theta)), 1e-6);
  }
}

TEST(Training, LossDecreasesMonotonically) {
  const auto d = separable(120, 4, 0.5, 8);
  for (auto kind : {ProbeKind::Linear, ProbeKind::Mlp1, ProbeKind::Mlp2}) {
    ProbeConfig cfg;
    cfg.kind = kind;
    cfg.hidden_size = 8;
    cfg.max_iters = 200;
    const auto p = train(cfg, d.x, d.y);
    ASSERT_GE(p.loss_history.size(), 2u);
    for (std::size_t i = 1; i < p.loss_history.size(); ++i) EXPECT_LT(p.loss_history[i], p.loss_history[i - 1]);
  }
}

TEST(Training, DeterministicGivenSeed) {
  const auto d = noisy_data(60, 5, 9);
  for (auto kind : {ProbeKind::Linear, ProbeKind::Mlp1, ProbeKind::Mlp2}) {
    ProbeConfig cfg;
    cfg.kind = kind;
    cfg.hidden_size = 6;
    cfg.max_iters = 50;
    cfg.seed = 77;
    const auto a = train(cfg, d.x, d.y);
    const auto b = train(cfg, d.x, d.y);
    EXPECT_EQ(a.layers, b.layers);
    EXPECT_EQ(a.loss_history, b.loss_history);
    if (kind != ProbeKind::Linear) {
      cfg.seed = 78;
      EXPECT_FALSE(train(cfg, d.x, d.y).layers == a.layers);
    }
  }
}

TEST(Training, MlpHiddenWidthFollowsRank) {
  const auto d = separable(40, 6, 0.5, 10);
  ProbeConfig cfg;
  cfg.kind = ProbeKind::Mlp2;
  cfg.hidden_size = 9;
  cfg.max_iters = 5;
  EXPECT_EQ(architecture_for(cfg, 6), (Architecture{6, 9, 9, 1}));
  cfg.svd_rank = 3;
  EXPECT_EQ(architecture_for(cfg, 6), (Architecture{6, 3, 3, 1}));
  const auto p = train(cfg, d.x, d.y);
  EXPECT_FALSE(p.svd);
  EXPECT_EQ(p.layers[0].weights.rows(), 3);
}

TEST(Training, LinearSvdFrontEnd) {
  const auto d = separable(50, 8, 0.5, 11);
  ProbeConfig cfg;
  cfg.svd_rank = 8;
  const auto p = train(cfg, d.x, d.y);
  ASSERT_TRUE(p.svd);
  EXPECT_EQ(p.svd->rank(), 8u);
  EXPECT_EQ(p.layers[0].weights.cols(), 8);
  EXPECT_EQ(p.predict(d.x).label, d.y);

  // Rank above the number of training rows is capped at n.
  const auto small = separable(5, 8, 0.5, 12);
  const auto q = train(cfg, small.x, small.y);
  EXPECT_EQ(q.svd->rank(), 5u);
}

TEST(ProbeJson, RoundTrip) {
  const auto d = noisy_data(30, 4, 13);
  for (auto kind : {ProbeKind::Linear, ProbeKind::Mlp2}) {
    ProbeConfig cfg;
    cfg.kind = kind;
    cfg.hidden_size = 3;
    cfg.svd_rank = kind == ProbeKind::Linear ? std::optional<std::size_t>(2) : std::nullopt;
    cfg.max_iters = 20;
    cfg.l2 = 0.1;
    cfg.seed = 99;
    const auto p = train(cfg, d.x, d.y);
    const auto back = probe_from_json(probe_to_json(p));
    EXPECT_EQ(back.config, p.config);
    EXPECT_EQ(back.status, p.status);
    EXPECT_EQ(back.layers, p.layers);
    EXPECT_EQ(back.svd.has_value(), p.svd.has_value());
    if (p.svd) EXPECT_EQ(back.svd->basis, p.svd->basis);
    EXPECT_EQ(back.predict(d.x).probability, p.predict(d.x).probability);
  }
  const auto deg = train({}, d.x, std::vector<int>(30, 1));
  const auto back = probe_from_json(probe_to_json(deg));
  EXPECT_TRUE(back.degenerate());
  EXPECT_EQ(back.status, TrainStatus::Degenerate);
}
