#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "localdim/net.hpp"

namespace localdim {

/// Strictly increasing 1-D sample. `perm[k]` is the original position of the
/// value now at sorted position k. Duplicate values are rejected: the
/// closed-form shallow theory assumes distinct inputs.
struct OrderedSample {
  Eigen::VectorXd xs;
  std::vector<int> perm;

  static OrderedSample from(const Eigen::RowVectorXd& raw);
  int n() const { return static_cast<int>(xs.size()); }
  Sample as_sample() const { return Sample(xs.transpose()); }
};

/// The 2n+1 hinge vectors spanning the hidden-layer image of a 1-D sample:
/// row i holds relu(X - x_i * 1) for i = 1..n and relu(x_{i-n} * 1 - X) for
/// i = n+1..2n; row 0 aliases row 2n. Rows n and n+1 are identically zero.
struct HingeVectors {
  Eigen::MatrixXd e;  // (2n+1) x n
  int sample_size = 0;
};

HingeVectors hinge_vectors(const OrderedSample& xs);

/// Index of the activation cone of (w, b) in the partition of the parameter
/// plane induced by the sorted sample: cone i <= n activates examples i..n,
/// cone n+1 activates none, cone n+i activates examples 1..i-1. Uses the
/// exact >= 0 convention, so every (w, b) lands in exactly one cone.
int classify_cone(double w, double b, const OrderedSample& xs);

/// Per-hidden-neuron cone indices recovered from an activation pattern whose
/// columns follow the sorted sample order. A non-monotone pattern row is
/// impossible for 1-D inputs and raises InvariantError.
struct ConeCode {
  std::vector<int> alpha;  // each in 1..2n
  int width() const { return static_cast<int>(alpha.size()); }
};

ConeCode cone_code(const ActivationPattern& pattern, const OrderedSample& xs);

/// Exact rank of the stacked matrix [1; e_{a1-1}; e_{a1}; ...], which equals
/// the local dimension everywhere on the interior of the code's cone product
/// (off the measure-zero set where some outgoing weight vanishes).
int closed_form_rank(const ConeCode& code, const HingeVectors& hv);

/// Number of distinct per-example activation patterns (linear pieces of the
/// network function perceived by the sample).
int seen_regions(const ActivationPattern& pattern);

struct EffectiveCounts {
  int neurons = 0;  // distinct non-trivial hinge indices reached by the code
  int linear = 0;   // perceived linear regions, capped at 2 examples each
};

EffectiveCounts effective_counts(const ConeCode& code, const ActivationPattern& pattern);

struct BoundPair {
  double lower = 0.0;
  double upper = 0.0;
};

struct ShallowAnalysis {
  int closed_form_rank = 0;
  int seen_regions = 0;
  int effective_neurons = 0;
  int perceived_regions = 0;
  BoundPair pattern_bounds;  // from the seen-region count
  BoundPair neuron_bounds;   // from the effective-neuron / region counts

  std::string to_json() const;
};

/// Full closed-form analysis of a (1, N1, 1) identity-output network on an
/// ordered sample. Softmax models are rejected; only the numeric rank path
/// applies to them.
ShallowAnalysis analyze_shallow(const Architecture& arch, const Params& params,
                                const OrderedSample& xs);

/// True iff both bound chains hold:
/// seen/2 <= rank <= 2*seen and 1 + neurons/2 <= rank <= min(1+neurons, linear).
bool shallow_bounds_check(const ShallowAnalysis& a);

// Index sets behind the counting bounds, exposed for the property tests.
std::vector<int> hinge_index_set(const ConeCode& code, int n);   // {a_k, a_k-1} \ {n, n+1}
std::vector<int> cone_index_set(const ConeCode& code, int n);    // {a_k} \ {n, n+1}
std::vector<int> folded_index_set(const ConeCode& code, int n);  // folded into [1, n]

// ---- Golden geometry of the width-1 example on X = (0, 1, 2) ----

/// Coordinates of a length-3 output on the plane orthogonal to (1,1,1),
/// in the orthonormal basis ((1,1,-2)/sqrt6, (-1,1,0)/sqrt2).
Eigen::Vector2d project_output_plane(const Eigen::Vector3d& y);

/// Projected image set of one parameter region of the width-1 example:
/// its affine dimension, and the line a*x + b*y = 0 when it is a line.
struct RegionImage {
  int dim = 0;
  double line_a = 0.0;
  double line_b = 0.0;
};

RegionImage region_image_111(int region);  // region index 1..6

// The figure numbering of the six regions of the X=(0,1,2) example differs
// from the cone numbering by a half-turn of the parameter plane.
int toy_region_from_cone(int cone);
int cone_from_toy_region(int region);

}  // namespace localdim
