#include "localdim/io.hpp"

#include <cctype>
#include <cstdint>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace localdim {

std::string model_to_json(const Architecture& arch, const Params& params) {
  params.validate(arch);
  nlohmann::json j;
  j["widths"] = arch.widths;
  j["out_act"] = to_string(arch.out_act);
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (size_t l = 0; l < params.weights.size(); ++l) {
    std::vector<double> w;
    w.reserve(params.weights[l].size());
    for (Eigen::Index r = 0; r < params.weights[l].rows(); ++r)
      for (Eigen::Index c = 0; c < params.weights[l].cols(); ++c)
        w.push_back(params.weights[l](r, c));
    weights.push_back(w);
    biases.push_back(std::vector<double>(
        params.biases[l].data(), params.biases[l].data() + params.biases[l].size()));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  return j.dump();
}

std::pair<Architecture, Params> model_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Architecture arch(j.at("widths").get<std::vector<int>>(),
                    output_activation_from_string(j.at("out_act").get<std::string>()));
  const auto weights = j.at("weights");
  const auto biases = j.at("biases");
  if (static_cast<int>(weights.size()) != arch.depth() ||
      static_cast<int>(biases.size()) != arch.depth())
    throw ConfigError("model json: layer count mismatch");
  Params params;
  for (int l = 1; l <= arch.depth(); ++l) {
    const auto w = weights[l - 1].get<std::vector<double>>();
    const auto b = biases[l - 1].get<std::vector<double>>();
    const int rows = arch.widths[l], cols = arch.widths[l - 1];
    if (static_cast<int>(w.size()) != rows * cols || static_cast<int>(b.size()) != rows)
      throw ConfigError("model json: size mismatch at layer " + std::to_string(l));
    Eigen::MatrixXd W(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) W(r, c) = w[static_cast<size_t>(r) * cols + c];
    params.weights.push_back(std::move(W));
    params.biases.push_back(Eigen::Map<const Eigen::VectorXd>(b.data(), rows));
  }
  params.validate(arch);
  return {std::move(arch), std::move(params)};
}

void save_model(const std::string& path, const Architecture& arch, const Params& params) {
  write_text_file(path, model_to_json(arch, params));
}

std::pair<Architecture, Params> load_model(const std::string& path) {
  return model_from_json(read_text_file(path));
}

namespace {

bool parse_row(const std::string& line, std::vector<double>& out) {
  out.clear();
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      size_t pos = 0;
      out.push_back(std::stod(cell, &pos));
      while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
      if (pos != cell.size()) return false;
    } catch (const std::exception&) {
      return false;
    }
  }
  return !out.empty();
}

}  // namespace

Eigen::MatrixXd load_sample_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sample file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<double> row;
    if (!parse_row(line, row)) {
      if (first) {  // header line
        first = false;
        continue;
      }
      throw ConfigError("sample csv: non-numeric row in " + path);
    }
    first = false;
    if (!rows.empty() && rows.back().size() != row.size())
      throw ConfigError("sample csv: ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("sample csv: no data in " + path);
  Eigen::MatrixXd X(rows.size(), rows[0].size());
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < rows[r].size(); ++c) X(r, c) = rows[r][c];
  return X;
}

void save_sample_csv(const std::string& path, const Eigen::MatrixXd& X) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write sample file: " + path);
  out.precision(17);
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
      if (c) out << ',';
      out << X(r, c);
    }
    out << '\n';
  }
}

namespace {

std::uint32_t read_be32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw ConfigError("idx: truncated header");
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

Eigen::MatrixXd read_idx_images(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open idx file: " + path);
  const std::uint32_t magic = read_be32(in);
  if (magic != 0x00000803u)
    throw ConfigError("idx: bad magic for image file (expected 0x803): " + path);
  const std::uint32_t count = read_be32(in);
  const std::uint32_t rows = read_be32(in);
  const std::uint32_t cols = read_be32(in);
  const size_t pixels = static_cast<size_t>(rows) * cols;
  std::vector<unsigned char> buf(pixels);
  Eigen::MatrixXd X(pixels, count);
  for (std::uint32_t i = 0; i < count; ++i) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels));
    if (!in) throw ConfigError("idx: truncated image data in " + path);
    for (size_t p = 0; p < pixels; ++p) X(p, i) = buf[p] / 255.0;
  }
  return X;
}

std::vector<int> read_idx_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open idx file: " + path);
  const std::uint32_t magic = read_be32(in);
  if (magic != 0x00000801u)
    throw ConfigError("idx: bad magic for label file (expected 0x801): " + path);
  const std::uint32_t count = read_be32(in);
  std::vector<unsigned char> buf(count);
  in.read(reinterpret_cast<char*>(buf.data()), count);
  if (!in) throw ConfigError("idx: truncated label data in " + path);
  return std::vector<int>(buf.begin(), buf.end());
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace localdim
