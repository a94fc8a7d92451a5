#include "gridy/core_data.hpp"

#include "gridy/csv.hpp"
#include "gridy/error.hpp"
#include "gridy/linalg.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace gridy {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Structure s) {
  switch (s) {
    case Structure::joint: return "joint";
    case Structure::group1: return "group1";
    case Structure::group2: return "group2";
  }
  return "unknown";
}

MultiBlockDataset::MultiBlockDataset(std::vector<TimeSeriesBlock> blocks, std::vector<std::string> variable_names)
    : blocks_(std::move(blocks)), variable_names_(std::move(variable_names)) {
  if (blocks_.empty()) throw ConfigError("dataset has no subjects");
  const Eigen::Index d = dim();
  if (d == 0) throw ConfigError("dataset has no variables");
  std::array<std::size_t, 2> counts{0, 0};
  for (const auto& b : blocks_) {
    if (b.values.cols() != d) {
      throw ConfigError("column-count mismatch: subject '" + b.subject_id + "' has " +
                        std::to_string(b.values.cols()) + " columns, expected " + std::to_string(d));
    }
    if (b.values.rows() < 2) throw ConfigError("subject '" + b.subject_id + "' has fewer than 2 time points");
    if (!b.values.allFinite()) throw ConfigError("subject '" + b.subject_id + "' contains non-finite values");
    const int g = static_cast<int>(b.group);
    if (g != 1 && g != 2) throw ConfigError("subject '" + b.subject_id + "' has a group label outside {1,2}");
    ++counts[static_cast<std::size_t>(g - 1)];
  }
  if (counts[0] == 0 || counts[1] == 0) throw ConfigError("empty group: both groups need at least one subject");
}

std::array<std::size_t, 2> MultiBlockDataset::group_sizes() const {
  std::array<std::size_t, 2> counts{0, 0};
  for (const auto& b : blocks_) ++counts[static_cast<std::size_t>(group_index(b.group))];
  return counts;
}

std::vector<std::size_t> MultiBlockDataset::indices_of(Group g) const {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < blocks_.size(); ++k)
    if (blocks_[k].group == g) idx.push_back(k);
  return idx;
}

MultiBlockDataset MultiBlockDataset::subset(const std::vector<std::size_t>& indices) const {
  std::vector<TimeSeriesBlock> picked;
  picked.reserve(indices.size());
  for (auto k : indices) picked.push_back(blocks_.at(k));
  return MultiBlockDataset(std::move(picked), variable_names_);
}

MultiBlockDataset load_dataset(const fs::path& manifest, const LoadOptions& options) {
  std::ifstream in(manifest);
  if (!in) throw ConfigError("cannot open manifest " + manifest.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("manifest " + manifest.string() + " is not valid JSON: " + e.what());
  }
  if (!doc.is_array() || doc.empty()) throw ConfigError("manifest must be a non-empty JSON array");

  const fs::path base = manifest.has_parent_path() ? manifest.parent_path() : fs::path(".");
  std::vector<TimeSeriesBlock> blocks;
  std::vector<std::string> names;
  for (const auto& entry : doc) {
    if (!entry.is_object() || !entry.contains("subject") || !entry.contains("group") || !entry.contains("path"))
      throw ConfigError("manifest entries need \"subject\", \"group\" and \"path\"");
    TimeSeriesBlock block;
    block.subject_id = entry.at("subject").get<std::string>();
    if (!entry.at("group").is_number_integer())
      throw ConfigError("subject '" + block.subject_id + "': group label must be 1 or 2");
    const int g = entry.at("group").get<int>();
    if (g != 1 && g != 2)
      throw ConfigError("subject '" + block.subject_id + "': group label " + std::to_string(g) + " outside {1,2}");
    block.group = static_cast<Group>(g);
    fs::path p = entry.at("path").get<std::string>();
    if (p.is_relative()) p = base / p;
    CsvMatrix csv = read_csv_matrix(p);
    if (names.empty()) {
      names = csv.header;
    } else if (csv.header.size() != names.size()) {
      throw ConfigError("column-count mismatch: subject '" + block.subject_id + "' has " +
                        std::to_string(csv.header.size()) + " columns, expected " + std::to_string(names.size()));
    }
    block.values = std::move(csv.values);
    if (options.center && block.values.rows() > 0) center_columns(block.values);
    blocks.push_back(std::move(block));
  }
  return MultiBlockDataset(std::move(blocks), std::move(names));
}

fs::path write_dataset(const MultiBlockDataset& data, const fs::path& dir) {
  fs::create_directories(dir / "blocks");
  json manifest = json::array();
  for (const auto& b : data.blocks()) {
    const fs::path rel = fs::path("blocks") / (b.subject_id + ".csv");
    write_csv_matrix(dir / rel, b.values, data.variable_names());
    manifest.push_back({{"subject", b.subject_id}, {"group", static_cast<int>(b.group)}, {"path", rel.string()}});
  }
  const fs::path path = dir / "manifest.json";
  std::ofstream(path) << manifest.dump(2) << '\n';
  return path;
}

Matrix GroundTruth::factor_transition_joint() const {
  return C_joint.asDiagonal() * Psi_joint * C_joint.cwiseInverse().asDiagonal();
}

Matrix GroundTruth::factor_transition_group() const {
  return C_group.asDiagonal() * Psi_group * C_group.cwiseInverse().asDiagonal();
}

void write_ground_truth(const GroundTruth& truth, const MultiBlockDataset& data, const fs::path& dir) {
  fs::create_directories(dir);
  const auto& vars = data.variable_names();
  const auto rj = truth.B_joint.cols();
  const auto rg = truth.B_group[0].cols();
  write_csv_matrix(dir / "B_joint.csv", truth.B_joint, default_names(rj, "f"), vars, "variable");
  write_csv_matrix(dir / "B_group1.csv", truth.B_group[0], default_names(rg, "f"), vars, "variable");
  write_csv_matrix(dir / "B_group2.csv", truth.B_group[1], default_names(rg, "f"), vars, "variable");
  write_csv_matrix(dir / "Psi_joint.csv", truth.Psi_joint, default_names(rj, "f"));
  write_csv_matrix(dir / "Psi_group.csv", truth.Psi_group, default_names(rg, "f"));
  write_csv_matrix(dir / "Phi_joint.csv", truth.Phi_joint, default_names(rj, "f"));
  write_csv_matrix(dir / "Phi_group.csv", truth.Phi_group, default_names(rg, "f"));
  write_csv_matrix(dir / "C_joint.csv", truth.C_joint.transpose(), default_names(rj, "f"));
  write_csv_matrix(dir / "C_group.csv", truth.C_group.transpose(), default_names(rg, "f"));
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto& id = data.block(k).subject_id;
    write_csv_matrix(dir / "F_joint" / (id + ".csv"), truth.F_joint[k], default_names(rj, "f"));
    write_csv_matrix(dir / "F_group" / (id + ".csv"), truth.F_group[k], default_names(rg, "f"));
  }
  json meta = {{"sigma_eps", truth.sigma_eps}};
  std::ofstream(dir / "truth.json") << meta.dump(2) << '\n';
}

GroundTruth read_ground_truth(const MultiBlockDataset& data, const fs::path& dir) {
  GroundTruth t;
  t.B_joint = read_csv_matrix(dir / "B_joint.csv", true).values;
  t.B_group[0] = read_csv_matrix(dir / "B_group1.csv", true).values;
  t.B_group[1] = read_csv_matrix(dir / "B_group2.csv", true).values;
  t.Psi_joint = read_csv_matrix(dir / "Psi_joint.csv").values;
  t.Psi_group = read_csv_matrix(dir / "Psi_group.csv").values;
  t.Phi_joint = read_csv_matrix(dir / "Phi_joint.csv").values;
  t.Phi_group = read_csv_matrix(dir / "Phi_group.csv").values;
  t.C_joint = read_csv_matrix(dir / "C_joint.csv").values.row(0).transpose();
  t.C_group = read_csv_matrix(dir / "C_group.csv").values.row(0).transpose();
  for (const auto& b : data.blocks()) {
    t.F_joint.push_back(read_csv_matrix(dir / "F_joint" / (b.subject_id + ".csv")).values);
    t.F_group.push_back(read_csv_matrix(dir / "F_group" / (b.subject_id + ".csv")).values);
  }
  std::ifstream in(dir / "truth.json");
  if (in) {
    json meta;
    in >> meta;
    t.sigma_eps = meta.value("sigma_eps", 1.0);
  }
  return t;
}

}  // namespace gridy
