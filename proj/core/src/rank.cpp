#include "localdim/rank.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <limits>

#include <nlohmann/json.hpp>

#include "localdim/parallel.hpp"
#include "localdim/rng.hpp"

namespace localdim {

TolPolicy tol_policy_from_string(const std::string& s) {
  if (s == "spectral") return TolPolicy::spectral();
  if (s == "gap") return TolPolicy::gap();
  throw ConfigError("unknown tolerance policy: " + s);
}

namespace {

Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  if (svd.info() != Eigen::Success)
    throw NumericError("numerical_rank: SVD did not converge");
  return svd.singularValues();
}

int count_above(const Eigen::VectorXd& sv, double tol) {
  int r = 0;
  while (r < sv.size() && sv[r] > tol) ++r;
  return r;
}

// Threshold selection. For the gap policy the cut is placed after the largest
// ratio sigma_k / sigma_{k+1}, where the spectral floor stands in for the
// value past the end of the profile.
double pick_tolerance(const Eigen::VectorXd& sv, Eigen::Index rows, Eigen::Index cols,
                      TolPolicy tol) {
  const double eps = std::numeric_limits<double>::epsilon();
  const double smax = sv.size() ? sv[0] : 0.0;
  const double floor = smax * static_cast<double>(std::max(rows, cols)) * eps;
  switch (tol.kind) {
    case TolPolicy::Kind::Fixed:
      return tol.fixed_value;
    case TolPolicy::Kind::Spectral:
      return floor;
    case TolPolicy::Kind::Gap: {
      if (smax <= 0.0) return 0.0;
      int best_k = 0;
      double best_ratio = -1.0;
      for (int k = 0; k < sv.size(); ++k) {
        const double next = (k + 1 < sv.size()) ? sv[k + 1] : floor;
        const double ratio = sv[k] / std::max(next, smax * eps * 1e-3);
        if (sv[k] <= floor) break;  // already at noise level
        if (ratio > best_ratio) {
          best_ratio = ratio;
          best_k = k;
        }
      }
      const double next = (best_k + 1 < sv.size()) ? sv[best_k + 1] : floor;
      return std::max(0.5 * (sv[best_k] + next), floor);
    }
  }
  return floor;
}

}  // namespace

LocalDimReport numerical_rank(const JacobianMatrix& jac, TolPolicy tol) {
  if (!jac.data.allFinite()) throw NumericError("numerical_rank: non-finite entry");
  LocalDimReport report;
  report.singular_values = singular_values(jac.data);
  report.tolerance_used =
      pick_tolerance(report.singular_values, jac.data.rows(), jac.data.cols(), tol);
  report.rank = count_above(report.singular_values, report.tolerance_used);
  report.max_rank = static_cast<int>(std::min(jac.data.rows(), jac.data.cols()));
  return report;
}

LocalDimReport local_dimension(const Architecture& arch, const Params& params,
                               const Sample& sample, TolPolicy tol,
                               const JacobianOptions& opts) {
  LocalDimReport report = numerical_rank(jacobian(arch, params, sample, opts), tol);
  report.margin = boundary_margin(forward(arch, params, sample));
  report.max_rank = arch.max_rank();
  return report;
}

DimEnvelope dim_envelope(const Architecture& arch, const Params& params,
                         const Sample& sample, double epsilon, int samples,
                         TolPolicy tol, std::uint64_t seed,
                         const JacobianOptions& opts) {
  if (!(epsilon > 0.0)) throw DomainError("dim_envelope: epsilon must be positive");
  if (samples < 0) throw DomainError("dim_envelope: negative sample count");

  const Eigen::VectorXd center = params.flatten();
  // Draw all perturbations up front so the result does not depend on how the
  // rank evaluations are scheduled.
  Rng rng(seed);
  std::vector<Eigen::VectorXd> points(samples);
  for (int s = 0; s < samples; ++s)
    points[s] = center + rng.ball(center.size(), epsilon);

  std::vector<int> ranks(samples + 1);
  ranks[0] = local_dimension(arch, params, sample, tol).rank;
  parallel_for(0, samples, opts.jobs, [&](int s) {
    ranks[s + 1] =
        local_dimension(arch, Params::unflatten(arch, points[s]), sample, tol).rank;
  });

  DimEnvelope env;
  env.epsilon = epsilon;
  env.samples = samples;
  env.dim_plus = *std::max_element(ranks.begin(), ranks.end());
  env.dim_minus = *std::min_element(ranks.begin(), ranks.end());
  return env;
}

std::string LocalDimReport::to_json() const {
  nlohmann::json j;
  j["rank"] = rank;
  j["max_rank"] = max_rank;
  if (std::isnan(margin))
    j["margin"] = nullptr;
  else
    j["margin"] = margin;
  j["tolerance"] = tolerance_used;
  j["singular_values"] = std::vector<double>(
      singular_values.data(), singular_values.data() + singular_values.size());
  return j.dump();
}

}  // namespace localdim
