#include "localdim/jacobian.hpp"

#include <cmath>

#include "localdim/parallel.hpp"

namespace localdim {

namespace {

// eta^L for d/dy [R(y)] = out_grad, transported through the output activation.
Eigen::VectorXd output_seed(const Architecture& arch, const ForwardTrace& trace,
                            int example, const Eigen::VectorXd& out_grad) {
  if (arch.out_act == OutputActivation::Identity) return out_grad;
  // (J softmax)^T g = p .* (g - <p,g> 1)
  const Eigen::VectorXd p = trace.output().col(example);
  const double pg = p.dot(out_grad);
  return (p.array() * (out_grad.array() - pg)).matrix();
}

// Reverse sweep for a single example; writes the flattened gradient.
void accumulate_example(const Architecture& arch, const Params& params,
                        const ForwardTrace& trace, int example,
                        Eigen::VectorXd eta, Eigen::VectorXd& grad) {
  const int L = arch.depth();
  // Column offsets of each layer's weight block in the flattened order.
  Eigen::Index offset = grad.size();
  for (int l = L; l >= 1; --l) {
    const Eigen::Index nw = params.weights[l - 1].size();
    const Eigen::Index nb = params.biases[l - 1].size();
    offset -= nw + nb;
    const auto prev = trace.acts[l - 1].col(example);
    Eigen::Index k = offset;
    for (Eigen::Index v = 0; v < params.weights[l - 1].rows(); ++v) {
      for (Eigen::Index c = 0; c < params.weights[l - 1].cols(); ++c)
        grad[k++] = prev[c] * eta[v];
    }
    for (Eigen::Index v = 0; v < nb; ++v) grad[k++] = eta[v];
    if (l > 1) {
      Eigen::VectorXd next = params.weights[l - 1].transpose() * eta;
      const auto pre = trace.preacts[l - 2].col(example);
      for (Eigen::Index v = 0; v < next.size(); ++v)
        if (pre[v] <= 0.0) next[v] = 0.0;  // sigma'(0) = 0
      eta = std::move(next);
    }
  }
}

void check_trace_finite(const ForwardTrace& trace) {
  for (size_t l = 0; l < trace.preacts.size(); ++l)
    if (!trace.preacts[l].allFinite())
      throw NumericError("jacobian: non-finite pre-activation at layer " +
                         std::to_string(l + 1));
}

}  // namespace

Eigen::VectorXd backprop_row(const Architecture& arch, const Params& params,
                             const ForwardTrace& trace, int example, int coord) {
  Eigen::VectorXd grad(arch.param_count());
  Eigen::VectorXd seed = Eigen::VectorXd::Unit(arch.output_dim(), coord);
  accumulate_example(arch, params, trace, example,
                     output_seed(arch, trace, example, seed), grad);
  return grad;
}

JacobianMatrix jacobian(const Architecture& arch, const Params& params,
                        const Sample& sample, const JacobianOptions& opts) {
  const int n = sample.count();
  const int out = arch.output_dim();
  const int W = arch.param_count();
  const int block = opts.sub_batch > 0 ? opts.sub_batch : n;

  JacobianMatrix jac;
  jac.data.resize(static_cast<Eigen::Index>(n) * out, W);

  for (int start = 0; start < n; start += block) {
    const int count = std::min(block, n - start);
    const Sample chunk(sample.X.middleCols(start, count));
    const ForwardTrace trace = forward(arch, params, chunk);
    check_trace_finite(trace);
    parallel_for(0, count * out, opts.jobs, [&](int r) {
      const int i = r / out;
      const int v = r % out;
      Eigen::VectorXd row = backprop_row(arch, params, trace, i, v);
      jac.data.row(static_cast<Eigen::Index>(start + i) * out + v) = row.transpose();
    });
  }
  if (!jac.data.allFinite()) throw NumericError("jacobian: non-finite entry in result");
  return jac;
}

JacobianMatrix finite_diff_jacobian(const Architecture& arch, const Params& params,
                                    const Sample& sample, double step) {
  const double margin = boundary_margin(forward(arch, params, sample));
  if (!(margin > 10.0 * step))
    throw PreconditionError("finite_diff_jacobian: boundary margin " +
                            std::to_string(margin) + " too small for step " +
                            std::to_string(step));
  const int n = sample.count();
  const int out = arch.output_dim();
  const Eigen::VectorXd flat = params.flatten();

  JacobianMatrix jac;
  jac.data.resize(static_cast<Eigen::Index>(n) * out, flat.size());
  for (Eigen::Index k = 0; k < flat.size(); ++k) {
    const double h = step * (1.0 + std::abs(flat[k]));
    Eigen::VectorXd plus = flat, minus = flat;
    plus[k] += h;
    minus[k] -= h;
    const Eigen::MatrixXd fp =
        forward(arch, Params::unflatten(arch, plus), sample).output();
    const Eigen::MatrixXd fm =
        forward(arch, Params::unflatten(arch, minus), sample).output();
    const Eigen::MatrixXd diff = (fp - fm) / (2.0 * h);
    for (int i = 0; i < n; ++i)
      for (int v = 0; v < out; ++v)
        jac.data(static_cast<Eigen::Index>(i) * out + v, k) = diff(v, i);
  }
  return jac;
}

Eigen::VectorXd backprop_gradient(const Architecture& arch, const Params& params,
                                  const ForwardTrace& trace,
                                  const Eigen::MatrixXd& out_grad) {
  const int L = arch.depth();
  const int n = trace.count();

  // Batched reverse sweep: eta holds one error column per example.
  Eigen::MatrixXd eta(arch.output_dim(), n);
  if (arch.out_act == OutputActivation::Identity) {
    eta = out_grad;
  } else {
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd p = trace.output().col(i);
      const double pg = p.dot(out_grad.col(i));
      eta.col(i) = (p.array() * (out_grad.col(i).array() - pg)).matrix();
    }
  }

  Eigen::VectorXd grad(arch.param_count());
  Eigen::Index offset = grad.size();
  for (int l = L; l >= 1; --l) {
    const Eigen::Index nw = params.weights[l - 1].size();
    const Eigen::Index nb = params.biases[l - 1].size();
    offset -= nw + nb;
    const Eigen::MatrixXd dW = eta * trace.acts[l - 1].transpose();
    Eigen::Index k = offset;
    for (Eigen::Index v = 0; v < dW.rows(); ++v)
      for (Eigen::Index c = 0; c < dW.cols(); ++c) grad[k++] = dW(v, c);
    for (Eigen::Index v = 0; v < nb; ++v) grad[k++] = eta.row(v).sum();
    if (l > 1) {
      Eigen::MatrixXd next = params.weights[l - 1].transpose() * eta;
      const auto& pre = trace.preacts[l - 2];
      for (Eigen::Index v = 0; v < next.rows(); ++v)
        for (int i = 0; i < n; ++i)
          if (pre(v, i) <= 0.0) next(v, i) = 0.0;
      eta = std::move(next);
    }
  }
  if (!grad.allFinite()) throw NumericError("backprop_gradient: non-finite gradient");
  return grad;
}

std::vector<std::string> param_names(const Architecture& arch) {
  std::vector<std::string> names;
  names.reserve(arch.param_count());
  for (int l = 1; l <= arch.depth(); ++l) {
    for (int r = 0; r < arch.widths[l]; ++r)
      for (int c = 0; c < arch.widths[l - 1]; ++c)
        names.push_back("L" + std::to_string(l) + ".w" + std::to_string(r) + "." +
                        std::to_string(c));
    for (int r = 0; r < arch.widths[l]; ++r)
      names.push_back("L" + std::to_string(l) + ".b" + std::to_string(r));
  }
  return names;
}

void write_jacobian_csv(std::ostream& os, const Architecture& arch,
                        const JacobianMatrix& jac) {
  const auto names = param_names(arch);
  for (size_t k = 0; k < names.size(); ++k) {
    if (k) os << ',';
    os << names[k];
  }
  os << '\n';
  os.precision(17);
  for (Eigen::Index r = 0; r < jac.data.rows(); ++r) {
    for (Eigen::Index c = 0; c < jac.data.cols(); ++c) {
      if (c) os << ',';
      os << jac.data(r, c);
    }
    os << '\n';
  }
}

}  // namespace localdim
