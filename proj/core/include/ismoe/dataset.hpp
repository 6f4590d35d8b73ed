#pragma once

#include <ismoe/types.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ismoe {

struct Dataset {
  Matrix inputs;
  Vector outputs;
  // Generator metadata, when known.
  std::optional<Vector> true_function;
  std::optional<std::vector<int>> labels;

  Index size() const { return inputs.rows(); }
  Index dim() const { return inputs.cols(); }

  // N >= 1, matching row counts, finite entries.
  void validate() const;

  Dataset subset(std::span<const Index> rows) const;
};

// CSV layout: header `x0,...,x{D-1},y`, one row per observation, values
// written with 17 significant digits so they parse back exactly.
void write_csv(const Dataset &data, const std::filesystem::path &path);
Dataset read_csv(const std::filesystem::path &path);

std::string format_double(double v);

} // namespace ismoe
