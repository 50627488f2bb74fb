#pragma once

#include <cstdint>
#include <vector>

#include "localdim/jacobian.hpp"
#include "localdim/net.hpp"
#include "localdim/rng.hpp"

namespace testutil {

using namespace localdim;

inline Params make_toy_params(double w, double v, double b, double c) {
  Params p;
  p.weights = {Eigen::MatrixXd::Constant(1, 1, w), Eigen::MatrixXd::Constant(1, 1, v)};
  p.biases = {Eigen::VectorXd::Constant(1, b), Eigen::VectorXd::Constant(1, c)};
  return p;
}

inline Sample row_sample(std::initializer_list<double> xs) {
  Eigen::MatrixXd X(1, static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) X(0, i++) = x;
  return Sample(X);
}

struct RandomNet {
  Architecture arch;
  Params params;
  Sample sample;
};

// Random architecture/parameters/sample with the boundary margin forced above
// `min_margin` by redrawing. Widths <= max_width, depth in [2, max_depth].
inline RandomNet random_net(Rng& rng, double min_margin, int max_depth = 4,
                            int max_width = 8, bool allow_softmax = true) {
  for (;;) {
    const int L = rng.uniform_int(2, max_depth);
    std::vector<int> widths;
    for (int l = 0; l <= L; ++l) widths.push_back(rng.uniform_int(1, max_width));
    const OutputActivation act = (allow_softmax && rng.uniform() < 0.5)
                                     ? OutputActivation::Softmax
                                     : OutputActivation::Identity;
    Architecture arch(widths, act);
    Params params = init_params(arch, InitScheme::StdNormal, rng.bits());
    const int n = rng.uniform_int(1, 6);
    Eigen::MatrixXd X(arch.input_dim(), n);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
    Sample sample(X);
    if (boundary_margin(forward(arch, params, sample)) > min_margin)
      return {std::move(arch), std::move(params), std::move(sample)};
  }
}

inline double rel_sup_error(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
  return (got - want).cwiseAbs().maxCoeff() / (1.0 + want.cwiseAbs().maxCoeff());
}

}  // namespace testutil
