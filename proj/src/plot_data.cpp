#include "gridy/plot_data.hpp"

#include "gridy/artifacts.hpp"
#include "gridy/csv.hpp"
#include "gridy/error.hpp"

#include <fstream>
#include <map>

namespace gridy {

void write_plot_data(const std::filesystem::path& dir, const MultiBlockDataset& data, const GridyResult& result) {
  std::filesystem::create_directories(dir);
  {
    std::map<int, int> counts;
    for (int r : result.ranks.subject_ranks) ++counts[r];
    std::ofstream out(dir / "rank_frequencies.csv");
    out << "estimated_rank,count\n";
    for (const auto& [rank, count] : counts) out << rank << ',' << count << '\n';
  }
  write_r2_csv(dir / "r2.csv", data.variable_names(), result.fit, result.blocks, result.dynamics);

  std::ofstream out(dir / "networks.csv");
  if (!out) throw ConfigError("cannot write " + (dir / "networks.csv").string());
  out << "group,kind,row,column,value\n";
  const auto& vars = data.variable_names();
  const auto d = static_cast<Eigen::Index>(vars.size());
  for (int g = 1; g <= 2; ++g) {
    Matrix directed = Matrix::Zero(d, d);
    Matrix contemporaneous = Matrix::Zero(d, d);
    int n = 0;
    for (std::size_t k = 0; k < result.networks.size(); ++k) {
      if (static_cast<int>(result.fit.groups[k]) != g) continue;
      directed += result.networks[k].directed();
      contemporaneous += result.networks[k].sigma_zeta;
      ++n;
    }
    if (n == 0) continue;
    for (const auto& [kind, m] : {std::pair<const char*, Matrix>{"directed", directed / n},
                                  std::pair<const char*, Matrix>{"contemporaneous", contemporaneous / n}})
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
          out << g << ',' << kind << ',' << vars[static_cast<std::size_t>(i)] << ','
              << vars[static_cast<std::size_t>(j)] << ',' << format_double(m(i, j)) << '\n';
  }
}

}  // namespace gridy
