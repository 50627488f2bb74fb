#pragma once

#include <Eigen/Dense>
#include <ostream>
#include <string>
#include <vector>

#include "localdim/net.hpp"

namespace localdim {

/// Jacobian of theta -> f_theta(X) in fixed coordinates.
/// Row order: example-major, then output coordinate (row i*N_L + v holds
/// d f_v(x_i) / d theta). Column order: the flattened parameter order of
/// Params::flatten.
struct JacobianMatrix {
  Eigen::MatrixXd data;
};

struct JacobianOptions {
  int sub_batch = 256;  // column block size for bounded peak memory
  int jobs = 1;         // data-parallel row computation
};

/// Gradient of one output coordinate on one example with respect to all
/// parameters, by reverse propagation of the per-layer error vectors.
/// The derivative of the hidden ReLU is taken as 0 at exactly 0.
Eigen::VectorXd backprop_row(const Architecture& arch, const Params& params,
                             const ForwardTrace& trace, int example, int coord);

JacobianMatrix jacobian(const Architecture& arch, const Params& params,
                        const Sample& sample, const JacobianOptions& opts = {});

/// Independent derivative oracle: central differences with per-parameter
/// step h*(1+|theta_k|). Requires boundary_margin(theta, X) > 10*h so that
/// no activation flips inside the stencil.
JacobianMatrix finite_diff_jacobian(const Architecture& arch, const Params& params,
                                    const Sample& sample, double step = 1e-5);

/// Gradient of a scalar objective R(f_theta(X)) given dR/dy at the output,
/// same flattened coordinate order as the Jacobian columns. Equivalent to
/// J^T vec(out_grad) but computed in one reverse sweep.
Eigen::VectorXd backprop_gradient(const Architecture& arch, const Params& params,
                                  const ForwardTrace& trace,
                                  const Eigen::MatrixXd& out_grad);

/// Column labels in flattened order: "L{l}.w{r}.{c}" and "L{l}.b{r}".
std::vector<std::string> param_names(const Architecture& arch);

void write_jacobian_csv(std::ostream& os, const Architecture& arch,
                        const JacobianMatrix& jac);

}  // namespace localdim
