#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "xxz/trajectory.hpp"

namespace xxz {

// Named, typed, row-major arrays in one file (layout in docs/formats.md).
struct Column {
  using Data = std::variant<std::vector<double>, std::vector<std::int64_t>, std::vector<std::string>>;

  std::string name;
  std::vector<std::uint64_t> shape;  // one or two extents
  Data data;

  std::size_t element_count() const;
};

struct ColumnarTable {
  std::vector<Column> columns;

  const Column& at(const std::string& name) const;
  bool contains(const std::string& name) const;
  const std::vector<double>& doubles(const std::string& name) const;
  const std::vector<std::int64_t>& integers(const std::string& name) const;
  const std::vector<std::string>& strings(const std::string& name) const;

  void add(std::string name, std::vector<double> values);
  void add(std::string name, std::vector<std::int64_t> values);
  void add(std::string name, std::vector<std::string> values);
  void add_matrix(std::string name, const std::vector<std::vector<double>>& rows, std::size_t cols);

  bool operator==(const ColumnarTable&) const = default;
};

bool operator==(const Column& a, const Column& b);

void write_columnar(std::ostream& out, const ColumnarTable& table);
ColumnarTable read_columnar(std::istream& in);
void save_columnar(const std::filesystem::path& path, const ColumnarTable& table);
ColumnarTable load_columnar(const std::filesystem::path& path);

ColumnarTable trajectory_table(const Trajectory& traj);
Trajectory trajectory_from_table(const ColumnarTable& table);

}  // namespace xxz
