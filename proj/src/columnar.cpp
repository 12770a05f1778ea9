#include "xxz/columnar.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "xxz/error.hpp"

namespace xxz {

namespace {

static_assert(std::endian::native == std::endian::little, "columnar I/O assumes a little-endian host");

constexpr char kMagic[8] = {'X', 'X', 'Z', 'C', 'O', 'L', '0', '1'};
constexpr std::uint32_t kVersion = 1;

enum class DType : std::uint8_t { f64 = 1, i64 = 2, utf8 = 3 };

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw FormatError("truncated columnar file");
  return value;
}

std::string get_string(std::istream& in, std::size_t len) {
  if (len > (std::size_t{1} << 30)) throw FormatError("implausible string length in columnar file");
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  if (!in) throw FormatError("truncated columnar file");
  return s;
}

template <typename T>
std::vector<T> get_array(std::istream& in, std::uint64_t count) {
  if (count > (std::uint64_t{1} << 34) / sizeof(T)) throw FormatError("implausible array size in columnar file");
  std::vector<T> v(count);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * sizeof(T)));
  if (!in) throw FormatError("truncated columnar file");
  return v;
}

}  // namespace

std::size_t Column::element_count() const {
  return std::visit([](const auto& v) { return v.size(); }, data);
}

bool operator==(const Column& a, const Column& b) {
  if (a.name != b.name || a.shape != b.shape || a.data.index() != b.data.index()) return false;
  if (const auto* x = std::get_if<std::vector<double>>(&a.data)) {
    const auto& y = std::get<std::vector<double>>(b.data);
    // Bitwise comparison so NaN placeholders compare equal.
    return x->size() == y.size() &&
           (x->empty() || std::memcmp(x->data(), y.data(), x->size() * sizeof(double)) == 0);
  }
  return a.data == b.data;
}

const Column& ColumnarTable::at(const std::string& name) const {
  for (const Column& c : columns) {
    if (c.name == name) return c;
  }
  throw FormatError("missing column '" + name + "'");
}

bool ColumnarTable::contains(const std::string& name) const {
  return std::any_of(columns.begin(), columns.end(), [&](const Column& c) { return c.name == name; });
}

const std::vector<double>& ColumnarTable::doubles(const std::string& name) const {
  const auto* v = std::get_if<std::vector<double>>(&at(name).data);
  if (!v) throw FormatError("column '" + name + "' is not f64");
  return *v;
}

const std::vector<std::int64_t>& ColumnarTable::integers(const std::string& name) const {
  const auto* v = std::get_if<std::vector<std::int64_t>>(&at(name).data);
  if (!v) throw FormatError("column '" + name + "' is not i64");
  return *v;
}

const std::vector<std::string>& ColumnarTable::strings(const std::string& name) const {
  const auto* v = std::get_if<std::vector<std::string>>(&at(name).data);
  if (!v) throw FormatError("column '" + name + "' is not utf8");
  return *v;
}

void ColumnarTable::add(std::string name, std::vector<double> values) {
  const std::uint64_t n = values.size();
  columns.push_back({std::move(name), {n}, std::move(values)});
}

void ColumnarTable::add(std::string name, std::vector<std::int64_t> values) {
  const std::uint64_t n = values.size();
  columns.push_back({std::move(name), {n}, std::move(values)});
}

void ColumnarTable::add(std::string name, std::vector<std::string> values) {
  const std::uint64_t n = values.size();
  columns.push_back({std::move(name), {n}, std::move(values)});
}

void ColumnarTable::add_matrix(std::string name, const std::vector<std::vector<double>>& rows, std::size_t cols) {
  std::vector<double> flat;
  flat.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw InvalidInput("ragged matrix for column '" + name + "'");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  columns.push_back({std::move(name), {rows.size(), cols}, std::move(flat)});
}

void write_columnar(std::ostream& out, const ColumnarTable& table) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(table.columns.size()));
  for (const Column& c : table.columns) {
    if (c.shape.empty() || c.shape.size() > 2) throw InvalidInput("columns must be one- or two-dimensional");
    std::uint64_t count = 1;
    for (auto d : c.shape) count *= d;
    if (count != c.element_count()) throw InvalidInput("shape of column '" + c.name + "' does not match its data");
    if (c.name.size() > std::numeric_limits<std::uint16_t>::max()) throw InvalidInput("column name too long");
    put<std::uint16_t>(out, static_cast<std::uint16_t>(c.name.size()));
    out.write(c.name.data(), static_cast<std::streamsize>(c.name.size()));
    const DType dtype = static_cast<DType>(c.data.index() + 1);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(c.shape.size()));
    for (auto d : c.shape) put<std::uint64_t>(out, d);
    if (const auto* v = std::get_if<std::vector<double>>(&c.data)) {
      out.write(reinterpret_cast<const char*>(v->data()), static_cast<std::streamsize>(v->size() * sizeof(double)));
    } else if (const auto* w = std::get_if<std::vector<std::int64_t>>(&c.data)) {
      out.write(reinterpret_cast<const char*>(w->data()),
                static_cast<std::streamsize>(w->size() * sizeof(std::int64_t)));
    } else {
      for (const std::string& s : std::get<std::vector<std::string>>(c.data)) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
        out.write(s.data(), static_cast<std::streamsize>(s.size()));
      }
    }
  }
  if (!out) throw FormatError("failed to write columnar file");
}

ColumnarTable read_columnar(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw FormatError("not a columnar file");
  if (get<std::uint32_t>(in) != kVersion) throw FormatError("unsupported columnar version");
  const auto n_columns = get<std::uint32_t>(in);
  ColumnarTable table;
  for (std::uint32_t k = 0; k < n_columns; ++k) {
    Column c;
    c.name = get_string(in, get<std::uint16_t>(in));
    const auto dtype = static_cast<DType>(get<std::uint8_t>(in));
    const auto ndim = get<std::uint8_t>(in);
    if (ndim < 1 || ndim > 2) throw FormatError("bad rank for column '" + c.name + "'");
    std::uint64_t count = 1;
    for (std::uint8_t d = 0; d < ndim; ++d) {
      c.shape.push_back(get<std::uint64_t>(in));
      count *= c.shape.back();
    }
    switch (dtype) {
      case DType::f64:
        c.data = get_array<double>(in, count);
        break;
      case DType::i64:
        c.data = get_array<std::int64_t>(in, count);
        break;
      case DType::utf8: {
        if (count > (std::uint64_t{1} << 28)) throw FormatError("implausible string column size");
        std::vector<std::string> v;
        v.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i) v.push_back(get_string(in, get<std::uint32_t>(in)));
        c.data = std::move(v);
        break;
      }
      default:
        throw FormatError("unknown dtype for column '" + c.name + "'");
    }
    table.columns.push_back(std::move(c));
  }
  return table;
}

void save_columnar(const std::filesystem::path& path, const ColumnarTable& table) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
    write_columnar(out, table);
  }
  std::filesystem::rename(tmp, path);
}

ColumnarTable load_columnar(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_columnar(in);
}

ColumnarTable trajectory_table(const Trajectory& traj) {
  traj.validate();
  ColumnarTable t;
  const std::size_t n = traj.n_sites();
  t.add("times", traj.times);
  t.add("norms", traj.norms);
  t.add("discarded_weights", traj.discarded_weights);
  t.add("total_z", traj.total_z);
  t.add("max_bonds", std::vector<std::int64_t>(traj.max_bonds.begin(), traj.max_bonds.end()));
  t.add_matrix("z_profiles", traj.z_profiles, n);
  t.add_matrix("currents", traj.currents, n == 0 ? 0 : n - 1);
  t.add("hopping", std::vector<double>{traj.hopping});
  t.add("quality_warning", std::vector<std::int64_t>{traj.quality_warning ? 1 : 0});
  t.add("continuity_residual_max", std::vector<double>{traj.continuity_residual_max});
  return t;
}

Trajectory trajectory_from_table(const ColumnarTable& table) {
  Trajectory traj;
  traj.times = table.doubles("times");
  traj.norms = table.doubles("norms");
  traj.discarded_weights = table.doubles("discarded_weights");
  traj.total_z = table.doubles("total_z");
  const auto& mb = table.integers("max_bonds");
  traj.max_bonds.assign(mb.begin(), mb.end());
  auto rows = [&](const std::string& name) {
    const Column& c = table.at(name);
    if (c.shape.size() != 2) throw FormatError("column '" + name + "' must be a matrix");
    const auto& flat = table.doubles(name);
    std::vector<std::vector<double>> out(c.shape[0]);
    for (std::size_t r = 0; r < c.shape[0]; ++r) {
      const auto begin = flat.begin() + static_cast<std::ptrdiff_t>(r * c.shape[1]);
      out[r].assign(begin, begin + static_cast<std::ptrdiff_t>(c.shape[1]));
    }
    return out;
  };
  traj.z_profiles = rows("z_profiles");
  traj.currents = rows("currents");
  traj.hopping = table.doubles("hopping").at(0);
  traj.quality_warning = table.integers("quality_warning").at(0) != 0;
  traj.continuity_residual_max = table.doubles("continuity_residual_max").at(0);
  try {
    traj.validate();
  } catch (const InvalidInput& e) {
    throw FormatError(std::string("inconsistent trajectory table: ") + e.what());
  }
  return traj;
}

}  // namespace xxz
