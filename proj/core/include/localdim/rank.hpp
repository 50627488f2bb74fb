#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "localdim/jacobian.hpp"
#include "localdim/net.hpp"

namespace localdim {

/// How singular values are thresholded into a numerical rank.
///  - Spectral (default): sigma > sigma_max * max(rows, cols) * eps.
///  - Gap: cut at the largest relative gap in the singular-value profile,
///    with the spectral threshold acting as the floor below the smallest one.
///  - Fixed: caller-provided absolute threshold; used to compare ranks across
///    symmetry orbits with one shared tolerance.
struct TolPolicy {
  enum class Kind { Spectral, Gap, Fixed };
  Kind kind = Kind::Spectral;
  double fixed_value = 0.0;

  static TolPolicy spectral() { return {}; }
  static TolPolicy gap() { return {Kind::Gap, 0.0}; }
  static TolPolicy fixed(double tol) { return {Kind::Fixed, tol}; }
};

TolPolicy tol_policy_from_string(const std::string& s);

/// The artifact's central output: numerical rank of the Jacobian together
/// with everything needed to audit the decision.
struct LocalDimReport {
  int rank = 0;
  Eigen::VectorXd singular_values;  // descending
  double tolerance_used = 0.0;
  double margin = std::numeric_limits<double>::quiet_NaN();
  int max_rank = 0;

  std::string to_json() const;
};

/// Rank of an explicit matrix from its singular values. margin is left NaN
/// and max_rank is the trivial min(rows, cols) bound.
LocalDimReport numerical_rank(const JacobianMatrix& jac, TolPolicy tol = {});

/// Local dimension rank(D f_theta(X)): Jacobian construction plus numerical
/// rank, with the architecture's max-rank bound and the boundary margin of
/// theta at X attached. A zero margin means the value sits on an activation
/// boundary and the report should not be trusted as a region rank.
LocalDimReport local_dimension(const Architecture& arch, const Params& params,
                               const Sample& sample, TolPolicy tol = {},
                               const JacobianOptions& opts = {});

/// Monte-Carlo envelope of the rank near theta: ranks at `samples` uniform
/// points of the epsilon-ball around theta plus theta itself. Lower-bounds
/// the upper semi-continuous extension and upper-bounds the lower one.
struct DimEnvelope {
  int dim_plus = 0;
  int dim_minus = 0;
  double epsilon = 0.0;
  int samples = 0;
};

DimEnvelope dim_envelope(const Architecture& arch, const Params& params,
                         const Sample& sample, double epsilon, int samples,
                         TolPolicy tol, std::uint64_t seed,
                         const JacobianOptions& opts = {});

}  // namespace localdim
