#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace gridy {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Two pre-determined subject groups; the label in the manifest is authoritative.
enum class Group : int { first = 1, second = 2 };

inline int group_index(Group g) { return static_cast<int>(g) - 1; }

/// The three structures a GRIDY decomposition produces.
enum class Structure { joint, group1, group2 };

std::string to_string(Structure s);

}  // namespace gridy
