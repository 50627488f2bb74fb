#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "localdim/errors.hpp"

namespace localdim {

enum class OutputActivation { Identity, Softmax };

/// Fully-connected ReLU network architecture: layer widths N_0..N_L plus the
/// output activation. Hidden layers are always ReLU; at least one hidden
/// layer is required.
struct Architecture {
  std::vector<int> widths;
  OutputActivation out_act = OutputActivation::Identity;

  Architecture() = default;
  Architecture(std::vector<int> w, OutputActivation a = OutputActivation::Identity)
      : widths(std::move(w)), out_act(a) {
    validate();
  }

  int depth() const { return static_cast<int>(widths.size()) - 1; }  // L
  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }

  int hidden_count() const {
    int h = 0;
    for (int l = 1; l < depth(); ++l) h += widths[l];
    return h;
  }

  int param_count() const {
    int w = 0;
    for (int l = 1; l <= depth(); ++l) w += widths[l - 1] * widths[l] + widths[l];
    return w;
  }

  // Largest attainable Jacobian rank: parameter count minus one per hidden
  // neuron (the rescaling directions never contribute).
  int max_rank() const { return param_count() - hidden_count(); }

  void validate() const;
};

/// Per-layer weights and biases. weights[l] has shape N_{l+1} x N_l and maps
/// layer l to layer l+1; biases[l] has length N_{l+1}.
struct Params {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  // Flattened coordinate order, fixed for Jacobian columns: layer 1 weights
  // row-major, layer 1 biases, layer 2 weights, layer 2 biases, ...
  Eigen::VectorXd flatten() const;
  static Params unflatten(const Architecture& arch, const Eigen::VectorXd& flat);

  std::uint64_t hash() const;  // FNV-1a over the raw double bytes
  void validate(const Architecture& arch) const;
};

/// Input batch; columns are examples.
struct Sample {
  Eigen::MatrixXd X;

  Sample(Eigen::MatrixXd m) : X(std::move(m)) {  // NOLINT: implicit by design
    if (X.cols() < 1) throw ConfigError("Sample: need at least one example");
    if (!X.allFinite()) throw ConfigError("Sample: non-finite entry");
  }
  int count() const { return static_cast<int>(X.cols()); }
  int dim() const { return static_cast<int>(X.rows()); }
};

/// Forward evaluation with stored pre-activations.
/// preacts[l-1] holds the layer-l pre-activations (l = 1..L), acts[l] the
/// post-activation values (acts[0] is the input).
struct ForwardTrace {
  std::vector<Eigen::MatrixXd> preacts;
  std::vector<Eigen::MatrixXd> acts;

  const Eigen::MatrixXd& output() const { return acts.back(); }
  int depth() const { return static_cast<int>(preacts.size()); }
  int count() const { return static_cast<int>(acts.front().cols()); }
};

/// On/off state of every hidden neuron on every example. Rows stack the
/// hidden layers in order; entry 1 means pre-activation >= 0.
struct ActivationPattern {
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> bits;
};

ForwardTrace forward(const Architecture& arch, const Params& params, const Sample& sample);

// In-place variant reusing the trace buffers; used by the training loops.
void forward_into(const Architecture& arch, const Params& params,
                  const Eigen::MatrixXd& X, ForwardTrace& trace);

ActivationPattern activation_pattern(const ForwardTrace& trace);

/// Scale-aware distance of the hidden pre-activations from zero:
/// min over neurons v and examples i of |y_v(x_i)| / (1 + max_j |y_v(x_j)|).
/// Zero exactly when some pre-activation is zero; a positive value certifies
/// that the activation pattern is locally constant around theta.
double boundary_margin(const ForwardTrace& trace);

/// Positive per-neuron rescaling: w'_{v'->v} = (l_v / l_{v'}) w_{v'->v},
/// b'_v = l_v b_v with l fixed to one on input and output layers. Leaves the
/// network function unchanged. `lambda` holds one positive factor per hidden
/// neuron, one vector per hidden layer.
Params rescale(const Architecture& arch, const Params& params,
               const std::vector<Eigen::VectorXd>& lambda);

/// Hidden-neuron permutation symmetry. perm[l][p] is the index of the
/// original layer-(l+1) neuron placed at position p. Inverse permutations
/// restore the original parameters exactly.
Params permute(const Architecture& arch, const Params& params,
               const std::vector<std::vector<int>>& perm);

enum class InitScheme {
  StdNormal,               // every weight and bias ~ N(0,1)
  HeNormal,                // weights truncated-normal sqrt(2/fan_in), biases 0
  GlorotUniformZeroBias,   // weights U(+-sqrt(6/(fan_in+fan_out))), biases 0
};

Params init_params(const Architecture& arch, InitScheme scheme, std::uint64_t seed);

std::string to_string(OutputActivation a);
OutputActivation output_activation_from_string(const std::string& s);

}  // namespace localdim
