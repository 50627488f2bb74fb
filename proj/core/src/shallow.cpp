#include "localdim/shallow.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "localdim/rank.hpp"

namespace localdim {

OrderedSample OrderedSample::from(const Eigen::RowVectorXd& raw) {
  if (raw.size() < 1) throw DomainError("OrderedSample: empty sample");
  if (!raw.allFinite()) throw DomainError("OrderedSample: non-finite value");
  OrderedSample out;
  out.perm.resize(raw.size());
  std::iota(out.perm.begin(), out.perm.end(), 0);
  std::sort(out.perm.begin(), out.perm.end(),
            [&](int a, int b) { return raw[a] < raw[b]; });
  out.xs.resize(raw.size());
  for (Eigen::Index k = 0; k < raw.size(); ++k) out.xs[k] = raw[out.perm[k]];
  for (Eigen::Index k = 1; k < out.xs.size(); ++k)
    if (out.xs[k] == out.xs[k - 1])
      throw DomainError("OrderedSample: duplicate value " + std::to_string(out.xs[k]));
  return out;
}

HingeVectors hinge_vectors(const OrderedSample& xs) {
  const int n = xs.n();
  HingeVectors hv;
  hv.sample_size = n;
  hv.e = Eigen::MatrixXd::Zero(2 * n + 1, n);
  for (int i = 1; i <= n; ++i) {
    for (int j = 0; j < n; ++j) {
      hv.e(i, j) = std::max(xs.xs[j] - xs.xs[i - 1], 0.0);
      hv.e(n + i, j) = std::max(xs.xs[i - 1] - xs.xs[j], 0.0);
    }
  }
  hv.e.row(0) = hv.e.row(2 * n);
  return hv;
}

namespace {

// Decodes one monotone on/off row over the sorted sample into its cone index.
int decode_threshold_row(const std::uint8_t* bits, int n) {
  bool all_same = true;
  for (int j = 1; j < n; ++j)
    if (bits[j] != bits[0]) all_same = false;
  if (all_same) return bits[0] ? 1 : n + 1;

  if (bits[0] == 0) {
    int first_on = 0;
    while (first_on < n && bits[first_on] == 0) ++first_on;
    for (int j = first_on; j < n; ++j)
      if (bits[j] == 0) throw InvariantError("activation row is not monotone");
    return first_on + 1;  // pattern 1_i with i = first_on + 1
  }
  int first_off = 0;
  while (first_off < n && bits[first_off] == 1) ++first_off;
  for (int j = first_off; j < n; ++j)
    if (bits[j] == 1) throw InvariantError("activation row is not monotone");
  return n + first_off + 1;  // pattern 1_{n+i} with i = first_off + 1
}

}  // namespace

int classify_cone(double w, double b, const OrderedSample& xs) {
  const int n = xs.n();
  std::vector<std::uint8_t> bits(n);
  for (int j = 0; j < n; ++j) bits[j] = (w * xs.xs[j] + b >= 0.0) ? 1 : 0;
  return decode_threshold_row(bits.data(), n);
}

ConeCode cone_code(const ActivationPattern& pattern, const OrderedSample& xs) {
  const int n = xs.n();
  if (pattern.bits.cols() != n)
    throw ConfigError("cone_code: pattern width does not match sample size");
  ConeCode code;
  code.alpha.reserve(pattern.bits.rows());
  std::vector<std::uint8_t> row(n);
  for (Eigen::Index r = 0; r < pattern.bits.rows(); ++r) {
    for (int j = 0; j < n; ++j) row[j] = pattern.bits(r, j);
    code.alpha.push_back(decode_threshold_row(row.data(), n));
  }
  return code;
}

int closed_form_rank(const ConeCode& code, const HingeVectors& hv) {
  const int n = hv.sample_size;
  Eigen::MatrixXd stacked(1 + 2 * code.width(), n);
  stacked.row(0).setOnes();
  for (int k = 0; k < code.width(); ++k) {
    const int a = code.alpha[k];
    if (a < 1 || a > 2 * n) throw DomainError("closed_form_rank: cone index out of range");
    stacked.row(1 + 2 * k) = hv.e.row(a - 1);
    stacked.row(2 + 2 * k) = hv.e.row(a);
  }
  return numerical_rank(JacobianMatrix{stacked}).rank;
}

int seen_regions(const ActivationPattern& pattern) {
  std::set<std::vector<std::uint8_t>> distinct;
  for (Eigen::Index i = 0; i < pattern.bits.cols(); ++i) {
    std::vector<std::uint8_t> col(pattern.bits.rows());
    for (Eigen::Index r = 0; r < pattern.bits.rows(); ++r) col[r] = pattern.bits(r, i);
    distinct.insert(std::move(col));
  }
  return static_cast<int>(distinct.size());
}

std::vector<int> hinge_index_set(const ConeCode& code, int n) {
  std::set<int> s;
  for (int a : code.alpha) {
    for (int l : {a, a - 1})
      if (l != n && l != n + 1) s.insert(l);
  }
  return {s.begin(), s.end()};
}

std::vector<int> cone_index_set(const ConeCode& code, int n) {
  std::set<int> s;
  for (int a : code.alpha)
    if (a != n && a != n + 1) s.insert(a);
  return {s.begin(), s.end()};
}

std::vector<int> folded_index_set(const ConeCode& code, int n) {
  std::set<int> s;
  for (int l : cone_index_set(code, n)) {
    if (l == 0)
      s.insert(n);
    else if (l <= n - 1)
      s.insert(l);
    else
      s.insert(l - n);  // l in [n+2, 2n]
  }
  return {s.begin(), s.end()};
}

EffectiveCounts effective_counts(const ConeCode& code, const ActivationPattern& pattern) {
  const int n = static_cast<int>(pattern.bits.cols());
  EffectiveCounts counts;
  counts.neurons = static_cast<int>(hinge_index_set(code, n).size());

  std::map<std::vector<std::uint8_t>, int> occupancy;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<std::uint8_t> col(pattern.bits.rows());
    for (Eigen::Index r = 0; r < pattern.bits.rows(); ++r) col[r] = pattern.bits(r, i);
    ++occupancy[col];
  }
  for (const auto& [col, count] : occupancy) counts.linear += std::min(2, count);
  return counts;
}

ShallowAnalysis analyze_shallow(const Architecture& arch, const Params& params,
                                const OrderedSample& xs) {
  if (arch.depth() != 2 || arch.input_dim() != 1 || arch.output_dim() != 1)
    throw ConfigError("analyze_shallow: requires a (1, N1, 1) architecture");
  if (arch.out_act == OutputActivation::Softmax)
    throw ConfigError(
        "analyze_shallow: closed form holds for identity output only; "
        "use the numeric rank path for softmax models");

  const ForwardTrace trace = forward(arch, params, xs.as_sample());
  const ActivationPattern pattern = activation_pattern(trace);
  const ConeCode code = cone_code(pattern, xs);
  const HingeVectors hv = hinge_vectors(xs);
  const EffectiveCounts counts = effective_counts(code, pattern);

  ShallowAnalysis a;
  a.closed_form_rank = closed_form_rank(code, hv);
  a.seen_regions = seen_regions(pattern);
  a.effective_neurons = counts.neurons;
  a.perceived_regions = counts.linear;
  a.pattern_bounds = {0.5 * a.seen_regions, 2.0 * a.seen_regions};
  a.neuron_bounds = {1.0 + 0.5 * a.effective_neurons,
                     std::min<double>(1 + a.effective_neurons, a.perceived_regions)};
  return a;
}

bool shallow_bounds_check(const ShallowAnalysis& a) {
  const double r = a.closed_form_rank;
  return a.pattern_bounds.lower <= r && r <= a.pattern_bounds.upper &&
         a.neuron_bounds.lower <= r && r <= a.neuron_bounds.upper;
}

std::string ShallowAnalysis::to_json() const {
  nlohmann::json j;
  j["closed_form_rank"] = closed_form_rank;
  j["seen_regions"] = seen_regions;
  j["effective_neurons"] = effective_neurons;
  j["perceived_regions"] = perceived_regions;
  j["seen_region_bounds"] = {pattern_bounds.lower, pattern_bounds.upper};
  j["neuron_bounds"] = {neuron_bounds.lower, neuron_bounds.upper};
  j["bounds_hold"] = shallow_bounds_check(*this);
  return j.dump();
}

Eigen::Vector2d project_output_plane(const Eigen::Vector3d& y) {
  static const Eigen::Vector3d u = Eigen::Vector3d(1, 1, -2) / std::sqrt(6.0);
  static const Eigen::Vector3d v = Eigen::Vector3d(-1, 1, 0) / std::sqrt(2.0);
  return {y.dot(u), y.dot(v)};
}

RegionImage region_image_111(int region) {
  const double s3 = std::sqrt(3.0);
  switch (region) {
    case 1: return {0, 0.0, 0.0};   // single point (0, 0)
    case 2: return {1, s3, 1.0};    // sqrt(3) x + y = 0
    case 3: return {2, 0.0, 0.0};
    case 4: return {1, 1.0, s3};    // x + sqrt(3) y = 0
    case 5: return {2, 0.0, 0.0};
    case 6: return {1, 0.0, 1.0};   // y = 0
    default: throw DomainError("region_image_111: region must be in 1..6");
  }
}

int toy_region_from_cone(int cone) {
  if (cone < 1 || cone > 6) throw DomainError("toy_region_from_cone: cone must be in 1..6");
  return (cone + 2) % 6 + 1;
}

int cone_from_toy_region(int region) {
  if (region < 1 || region > 6)
    throw DomainError("cone_from_toy_region: region must be in 1..6");
  return (region + 2) % 6 + 1;
}

}  // namespace localdim
