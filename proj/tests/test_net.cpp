#include <doctest.h>

#include <numeric>

#include "localdim/net.hpp"
#include "testutil.hpp"

using namespace localdim;
using testutil::make_toy_params;
using testutil::row_sample;

TEST_CASE("architecture validation and counts") {
  CHECK_THROWS_AS(Architecture({1, 1}), ConfigError);
  CHECK_THROWS_AS(Architecture({1, 0, 1}), ConfigError);

  Architecture arch({1, 1, 1});
  CHECK(arch.param_count() == 4);
  CHECK(arch.max_rank() == 3);

  Architecture mnist({784, 30, 30, 30, 10}, OutputActivation::Softmax);
  CHECK(mnist.param_count() == 784 * 30 + 30 + 30 * 30 + 30 + 30 * 30 + 30 + 30 * 10 + 10);
  CHECK(mnist.max_rank() == 2 * 30 * 30 + 794 * 30 + 10);
}

TEST_CASE("forward on the width-1 net") {
  const Architecture arch({1, 1, 1});
  const Sample X = row_sample({0, 1, 2});

  SUBCASE("identity composition") {
    const auto trace = forward(arch, make_toy_params(1, 1, 0, 0), X);
    CHECK(trace.output()(0, 0) == 0.0);
    CHECK(trace.output()(0, 1) == 1.0);
    CHECK(trace.output()(0, 2) == 2.0);
  }
  SUBCASE("dead neuron leaves only the output bias") {
    const auto trace = forward(arch, make_toy_params(0, 0, -1, 5), X);
    CHECK(trace.output()(0, 0) == 5.0);
    CHECK(trace.output()(0, 1) == 5.0);
    CHECK(trace.output()(0, 2) == 5.0);
  }
  SUBCASE("partially active") {
    const auto trace = forward(arch, make_toy_params(1, 1, -1.5, 0), X);
    CHECK(trace.output()(0, 0) == 0.0);
    CHECK(trace.output()(0, 1) == 0.0);
    CHECK(trace.output()(0, 2) == doctest::Approx(0.5));
  }
  SUBCASE("shape mismatch is a configuration error") {
    Eigen::MatrixXd bad(2, 3);
    bad.setZero();
    CHECK_THROWS_AS(forward(arch, make_toy_params(1, 1, 0, 0), Sample(bad)), ConfigError);
  }
}

TEST_CASE("activation pattern rows") {
  const Architecture arch({1, 1, 1});
  const Sample X = row_sample({0, 1, 2});

  auto bits = [&](double w, double b) {
    const auto p = activation_pattern(forward(arch, make_toy_params(w, 1, b, 0), X));
    return std::vector<int>{p.bits(0, 0), p.bits(0, 1), p.bits(0, 2)};
  };
  CHECK(bits(1, 1) == std::vector<int>{1, 1, 1});
  CHECK(bits(0, -1) == std::vector<int>{0, 0, 0});
  CHECK(bits(1, -1.5) == std::vector<int>{0, 0, 1});
  // zero pre-activation counts as active (>= 0 convention, no epsilon)
  CHECK(bits(1, 0) == std::vector<int>{1, 1, 1});
}

TEST_CASE("boundary margin") {
  const Architecture arch({1, 1, 1});
  const Sample X = row_sample({0, 1, 2});
  auto margin = [&](double w, double b) {
    return boundary_margin(forward(arch, make_toy_params(w, 1, b, 0), X));
  };
  CHECK(margin(1, 0) == 0.0);  // pre-activation exactly zero
  CHECK(margin(1, 1) == doctest::Approx(0.25));
  CHECK(margin(0, -1) == doctest::Approx(0.5));
}

TEST_CASE("rescale") {
  const Architecture arch({1, 1, 1});
  const Sample X = row_sample({0, 1, 2});
  const Params theta = make_toy_params(1, 1, 0, 0);

  SUBCASE("unit factors are the identity") {
    const Params same = rescale(arch, theta, {Eigen::VectorXd::Ones(1)});
    CHECK(same.weights[0](0, 0) == 1.0);
    CHECK(same.weights[1](0, 0) == 1.0);
  }
  SUBCASE("factor 2 on the hidden neuron") {
    const Params scaled = rescale(arch, theta, {Eigen::VectorXd::Constant(1, 2.0)});
    CHECK(scaled.weights[0](0, 0) == 2.0);
    CHECK(scaled.weights[1](0, 0) == 0.5);
    const auto a = forward(arch, theta, X).output();
    const auto b = forward(arch, scaled, X).output();
    CHECK(testutil::rel_sup_error(b, a) <= 1e-12);
  }
  SUBCASE("non-positive factors rejected") {
    CHECK_THROWS_AS(rescale(arch, theta, {Eigen::VectorXd::Zero(1)}), DomainError);
    CHECK_THROWS_AS(rescale(arch, theta, {Eigen::VectorXd::Constant(1, -1.0)}),
                    DomainError);
  }
}

TEST_CASE("permute") {
  const Architecture arch({1, 2, 1});
  Rng rng(7);
  const Params theta = init_params(arch, InitScheme::StdNormal, 7);
  const Sample X = row_sample({-1, 0.5, 2});

  SUBCASE("swap of the two hidden neurons preserves the function") {
    const Params swapped = permute(arch, theta, {{1, 0}});
    const auto a = forward(arch, theta, X).output();
    const auto b = forward(arch, swapped, X).output();
    CHECK(testutil::rel_sup_error(b, a) <= 1e-12);
  }
  SUBCASE("permutation followed by its inverse is exact") {
    const Params back = permute(arch, permute(arch, theta, {{1, 0}}), {{1, 0}});
    CHECK((back.flatten().array() == theta.flatten().array()).all());
  }
  SUBCASE("invalid permutations rejected") {
    CHECK_THROWS_AS(permute(arch, theta, {{0, 0}}), DomainError);
    CHECK_THROWS_AS(permute(arch, theta, {{0, 2}}), DomainError);
  }
}

TEST_CASE("init_params schemes") {
  const Architecture arch({3, 4, 2});

  SUBCASE("deterministic given the seed") {
    const Params a = init_params(arch, InitScheme::StdNormal, 42);
    const Params b = init_params(arch, InitScheme::StdNormal, 42);
    CHECK((a.flatten().array() == b.flatten().array()).all());
    const Params c = init_params(arch, InitScheme::StdNormal, 43);
    CHECK_FALSE((a.flatten().array() == c.flatten().array()).all());
  }
  SUBCASE("standard normal sample mean") {
    double sum = 0.0;
    const int draws = 10000;
    for (int s = 0; s < draws; ++s)
      sum += init_params(arch, InitScheme::StdNormal, 1000 + s).weights[0](0, 0);
    CHECK(std::abs(sum / draws) < 4.0 / std::sqrt(static_cast<double>(draws)));
  }
  SUBCASE("glorot uniform has zero biases and bounded weights") {
    const Params p = init_params(arch, InitScheme::GlorotUniformZeroBias, 5);
    CHECK(p.biases[0].isZero(0.0));
    CHECK(p.biases[1].isZero(0.0));
    const double limit = std::sqrt(6.0 / (3 + 4));
    CHECK(p.weights[0].cwiseAbs().maxCoeff() <= limit);
  }
  SUBCASE("he normal has zero biases") {
    const Params p = init_params(arch, InitScheme::HeNormal, 5);
    CHECK(p.biases[0].isZero(0.0));
    // truncation at two pre-scale standard deviations
    CHECK(p.weights[0].cwiseAbs().maxCoeff() <= 2.0 * std::sqrt(2.0 / 3.0));
  }
}

TEST_CASE("hidden activations equal mask times pre-activation") {
  Rng rng(11);
  for (int it = 0; it < 50; ++it) {
    const auto net = testutil::random_net(rng, 0.0);
    const auto trace = forward(net.arch, net.params, net.sample);
    const auto pattern = activation_pattern(trace);
    Eigen::Index row = 0;
    for (int l = 1; l < net.arch.depth(); ++l) {
      const auto& pre = trace.preacts[l - 1];
      const auto& act = trace.acts[l];
      for (Eigen::Index v = 0; v < pre.rows(); ++v, ++row)
        for (Eigen::Index i = 0; i < pre.cols(); ++i)
          CHECK(act(v, i) == pattern.bits(row, i) * pre(v, i));
    }
  }
}

TEST_CASE("composed symmetries leave the function unchanged") {
  Rng rng(13);
  for (int it = 0; it < 100; ++it) {
    const auto net = testutil::random_net(rng, 0.0);
    std::vector<Eigen::VectorXd> lambda;
    std::vector<std::vector<int>> perm;
    for (int l = 1; l < net.arch.depth(); ++l) {
      Eigen::VectorXd lam(net.arch.widths[l]);
      for (Eigen::Index v = 0; v < lam.size(); ++v) lam[v] = rng.uniform(0.25, 4.0);
      lambda.push_back(lam);
      std::vector<int> p(net.arch.widths[l]);
      std::iota(p.begin(), p.end(), 0);
      for (int i = static_cast<int>(p.size()) - 1; i > 0; --i)
        std::swap(p[i], p[rng.uniform_int(0, i)]);
      perm.push_back(p);
    }
    const Params transformed = rescale(net.arch, permute(net.arch, net.params, perm), lambda);
    const auto a = forward(net.arch, net.params, net.sample).output();
    const auto b = forward(net.arch, transformed, net.sample).output();
    CHECK(testutil::rel_sup_error(b, a) <= 1e-10);
  }
}

TEST_CASE("pattern is locally constant away from boundaries") {
  Rng rng(17);
  int tested = 0;
  while (tested < 100) {
    const auto net = testutil::random_net(rng, 1e-4);
    const auto base = activation_pattern(forward(net.arch, net.params, net.sample));
    const Eigen::VectorXd flat = net.params.flatten();
    for (int rep = 0; rep < 3; ++rep) {
      Eigen::VectorXd delta = rng.normal_vector(flat.size());
      delta *= 1e-8 / delta.norm();
      const auto perturbed = activation_pattern(
          forward(net.arch, Params::unflatten(net.arch, flat + delta), net.sample));
      CHECK((perturbed.bits.array() == base.bits.array()).all());
    }
    ++tested;
  }
}

TEST_CASE("softmax columns sum to one") {
  Rng rng(19);
  for (int it = 0; it < 50; ++it) {
    const auto net = testutil::random_net(rng, 0.0, 3, 6, true);
    if (net.arch.out_act != OutputActivation::Softmax) continue;
    const auto out = forward(net.arch, net.params, net.sample).output();
    for (Eigen::Index i = 0; i < out.cols(); ++i)
      CHECK(out.col(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}
