#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "localdim/net.hpp"

namespace localdim {

/// Model document:
/// {"widths":[...], "out_act":"identity"|"softmax",
///  "weights":[[...row-major per layer...]], "biases":[[...]]}
/// Doubles are written with shortest round-trip precision.
std::string model_to_json(const Architecture& arch, const Params& params);
std::pair<Architecture, Params> model_from_json(const std::string& text);

void save_model(const std::string& path, const Architecture& arch, const Params& params);
std::pair<Architecture, Params> load_model(const std::string& path);

/// Sample CSV: one column per example, one row per input coordinate.
/// A non-numeric first line is treated as a header and skipped.
Eigen::MatrixXd load_sample_csv(const std::string& path);
void save_sample_csv(const std::string& path, const Eigen::MatrixXd& X);

/// IDX files (big-endian magic + dims), the common format for image/label
/// dumps. Images come back as one flattened column per example in [0, 1].
Eigen::MatrixXd read_idx_images(const std::string& path);
std::vector<int> read_idx_labels(const std::string& path);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace localdim
