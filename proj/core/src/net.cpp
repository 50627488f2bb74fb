#include "localdim/net.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "localdim/rng.hpp"

namespace localdim {

void Architecture::validate() const {
  if (widths.size() < 3)
    throw ConfigError("Architecture: need at least one hidden layer (L >= 2)");
  for (int w : widths)
    if (w < 1) throw ConfigError("Architecture: every layer width must be >= 1");
}

Eigen::VectorXd Params::flatten() const {
  Eigen::Index total = 0;
  for (size_t l = 0; l < weights.size(); ++l)
    total += weights[l].size() + biases[l].size();
  Eigen::VectorXd flat(total);
  Eigen::Index k = 0;
  for (size_t l = 0; l < weights.size(); ++l) {
    const auto& W = weights[l];
    for (Eigen::Index r = 0; r < W.rows(); ++r)
      for (Eigen::Index c = 0; c < W.cols(); ++c) flat[k++] = W(r, c);
    for (Eigen::Index r = 0; r < biases[l].size(); ++r) flat[k++] = biases[l][r];
  }
  return flat;
}

Params Params::unflatten(const Architecture& arch, const Eigen::VectorXd& flat) {
  if (flat.size() != arch.param_count())
    throw ConfigError("Params::unflatten: length mismatch");
  Params p;
  Eigen::Index k = 0;
  for (int l = 1; l <= arch.depth(); ++l) {
    Eigen::MatrixXd W(arch.widths[l], arch.widths[l - 1]);
    for (Eigen::Index r = 0; r < W.rows(); ++r)
      for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = flat[k++];
    Eigen::VectorXd b(arch.widths[l]);
    for (Eigen::Index r = 0; r < b.size(); ++r) b[r] = flat[k++];
    p.weights.push_back(std::move(W));
    p.biases.push_back(std::move(b));
  }
  return p;
}

std::uint64_t Params::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const double* data, size_t n) {
    const unsigned char* bytes = reinterpret_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  for (size_t l = 0; l < weights.size(); ++l) {
    mix(weights[l].data(), static_cast<size_t>(weights[l].size()));
    mix(biases[l].data(), static_cast<size_t>(biases[l].size()));
  }
  return h;
}

void Params::validate(const Architecture& arch) const {
  if (static_cast<int>(weights.size()) != arch.depth() ||
      static_cast<int>(biases.size()) != arch.depth())
    throw ConfigError("Params: layer count does not match architecture");
  for (int l = 1; l <= arch.depth(); ++l) {
    const auto& W = weights[l - 1];
    const auto& b = biases[l - 1];
    if (W.rows() != arch.widths[l] || W.cols() != arch.widths[l - 1])
      throw ConfigError("Params: weight shape mismatch at layer " + std::to_string(l));
    if (b.size() != arch.widths[l])
      throw ConfigError("Params: bias length mismatch at layer " + std::to_string(l));
    if (!W.allFinite() || !b.allFinite())
      throw ConfigError("Params: non-finite entry at layer " + std::to_string(l));
  }
}

namespace {

void softmax_columns(Eigen::MatrixXd& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    auto col = m.col(j);
    col.array() -= col.maxCoeff();
    col = col.array().exp();
    col /= col.sum();
  }
}

}  // namespace

void forward_into(const Architecture& arch, const Params& params,
                  const Eigen::MatrixXd& X, ForwardTrace& trace) {
  const int L = arch.depth();
  trace.preacts.resize(L);
  trace.acts.resize(L + 1);
  trace.acts[0] = X;
  for (int l = 1; l <= L; ++l) {
    trace.preacts[l - 1].noalias() = params.weights[l - 1] * trace.acts[l - 1];
    trace.preacts[l - 1].colwise() += params.biases[l - 1];
    if (l < L) {
      trace.acts[l] = trace.preacts[l - 1].cwiseMax(0.0);
    } else {
      trace.acts[l] = trace.preacts[l - 1];
      if (arch.out_act == OutputActivation::Softmax) softmax_columns(trace.acts[l]);
    }
  }
}

ForwardTrace forward(const Architecture& arch, const Params& params, const Sample& sample) {
  arch.validate();
  params.validate(arch);
  if (sample.dim() != arch.input_dim())
    throw ConfigError("forward: sample dimension does not match input layer");
  ForwardTrace trace;
  forward_into(arch, params, sample.X, trace);
  return trace;
}

ActivationPattern activation_pattern(const ForwardTrace& trace) {
  const int L = trace.depth();
  const int n = trace.count();
  Eigen::Index hidden = 0;
  for (int l = 1; l < L; ++l) hidden += trace.preacts[l - 1].rows();
  ActivationPattern pattern;
  pattern.bits.resize(hidden, n);
  Eigen::Index row = 0;
  for (int l = 1; l < L; ++l) {
    const auto& pre = trace.preacts[l - 1];
    for (Eigen::Index v = 0; v < pre.rows(); ++v, ++row)
      for (Eigen::Index i = 0; i < n; ++i)
        pattern.bits(row, i) = pre(v, i) >= 0.0 ? 1 : 0;
  }
  return pattern;
}

double boundary_margin(const ForwardTrace& trace) {
  const int L = trace.depth();
  double margin = std::numeric_limits<double>::infinity();
  for (int l = 1; l < L; ++l) {
    const auto& pre = trace.preacts[l - 1];
    for (Eigen::Index v = 0; v < pre.rows(); ++v) {
      const double sup = pre.row(v).cwiseAbs().maxCoeff();
      for (Eigen::Index i = 0; i < pre.cols(); ++i)
        margin = std::min(margin, std::abs(pre(v, i)) / (1.0 + sup));
    }
  }
  return margin;
}

Params rescale(const Architecture& arch, const Params& params,
               const std::vector<Eigen::VectorXd>& lambda) {
  const int L = arch.depth();
  if (static_cast<int>(lambda.size()) != L - 1)
    throw DomainError("rescale: need one factor vector per hidden layer");
  for (int l = 1; l < L; ++l) {
    if (lambda[l - 1].size() != arch.widths[l])
      throw DomainError("rescale: factor count mismatch at hidden layer " + std::to_string(l));
    if ((lambda[l - 1].array() <= 0.0).any())
      throw DomainError("rescale: factors must be strictly positive");
  }
  // Factors are implicitly one on the input and output layers.
  auto factor = [&](int layer, Eigen::Index v) -> double {
    if (layer == 0 || layer == L) return 1.0;
    return lambda[layer - 1][v];
  };
  Params out = params;
  for (int l = 1; l <= L; ++l) {
    for (Eigen::Index r = 0; r < out.weights[l - 1].rows(); ++r) {
      for (Eigen::Index c = 0; c < out.weights[l - 1].cols(); ++c)
        out.weights[l - 1](r, c) *= factor(l, r) / factor(l - 1, c);
      out.biases[l - 1][r] *= factor(l, r);
    }
  }
  return out;
}

Params permute(const Architecture& arch, const Params& params,
               const std::vector<std::vector<int>>& perm) {
  const int L = arch.depth();
  if (static_cast<int>(perm.size()) != L - 1)
    throw DomainError("permute: need one permutation per hidden layer");
  for (int l = 1; l < L; ++l) {
    const auto& p = perm[l - 1];
    if (static_cast<int>(p.size()) != arch.widths[l])
      throw DomainError("permute: size mismatch at hidden layer " + std::to_string(l));
    std::vector<bool> seen(p.size(), false);
    for (int idx : p) {
      if (idx < 0 || idx >= static_cast<int>(p.size()) || seen[idx])
        throw DomainError("permute: not a permutation at hidden layer " + std::to_string(l));
      seen[idx] = true;
    }
  }
  auto source = [&](int layer, Eigen::Index v) -> Eigen::Index {
    if (layer == 0 || layer == L) return v;
    return perm[layer - 1][v];
  };
  Params out = params;
  for (int l = 1; l <= L; ++l) {
    for (Eigen::Index r = 0; r < out.weights[l - 1].rows(); ++r) {
      for (Eigen::Index c = 0; c < out.weights[l - 1].cols(); ++c)
        out.weights[l - 1](r, c) = params.weights[l - 1](source(l, r), source(l - 1, c));
      out.biases[l - 1][r] = params.biases[l - 1][source(l, r)];
    }
  }
  return out;
}

Params init_params(const Architecture& arch, InitScheme scheme, std::uint64_t seed) {
  arch.validate();
  Rng rng(seed);
  Params p;
  for (int l = 1; l <= arch.depth(); ++l) {
    const int fan_in = arch.widths[l - 1];
    const int fan_out = arch.widths[l];
    Eigen::MatrixXd W(fan_out, fan_in);
    Eigen::VectorXd b(fan_out);
    switch (scheme) {
      case InitScheme::StdNormal:
        for (Eigen::Index r = 0; r < W.rows(); ++r)
          for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = rng.normal();
        for (Eigen::Index r = 0; r < b.size(); ++r) b[r] = rng.normal();
        break;
      case InitScheme::HeNormal: {
        const double sd = std::sqrt(2.0 / fan_in);
        for (Eigen::Index r = 0; r < W.rows(); ++r)
          for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = sd * rng.truncated_normal();
        b.setZero();
        break;
      }
      case InitScheme::GlorotUniformZeroBias: {
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (Eigen::Index r = 0; r < W.rows(); ++r)
          for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = rng.uniform(-limit, limit);
        b.setZero();
        break;
      }
    }
    p.weights.push_back(std::move(W));
    p.biases.push_back(std::move(b));
  }
  return p;
}

std::string to_string(OutputActivation a) {
  return a == OutputActivation::Identity ? "identity" : "softmax";
}

OutputActivation output_activation_from_string(const std::string& s) {
  if (s == "identity") return OutputActivation::Identity;
  if (s == "softmax") return OutputActivation::Softmax;
  throw ConfigError("unknown output activation: " + s);
}

}  // namespace localdim
