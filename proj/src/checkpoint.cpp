#include "xxz/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "xxz/error.hpp"

namespace xxz {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'X', 'X', 'Z', 'M', 'P', 'S', '0', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw FormatError("truncated MPS checkpoint");
  return value;
}

}  // namespace

void write_checkpoint(std::ostream& out, const MpsState& state) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, state.size());
  put<std::int64_t>(out, state.center() ? static_cast<std::int64_t>(*state.center()) : -1);
  put<double>(out, state.cumulative_discarded_weight());
  put<std::uint8_t>(out, state.conserves_charge() ? 1 : 0);
  for (std::size_t b = 0; b <= state.size(); ++b) put<std::uint64_t>(out, state.bond_dim(b));
  for (std::size_t b = 0; b <= state.size(); ++b) {
    const BondSpace& space = state.bond_space(b);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(space.sectors().size()));
    for (const Sector& s : space.sectors()) {
      put<std::int32_t>(out, s.charge);
      put<std::uint64_t>(out, static_cast<std::uint64_t>(s.dim));
    }
  }
  for (const SiteTensor& t : state.tensors()) {
    for (Index l = 0; l < t.left_dim(); ++l) {
      for (int s = 0; s < 2; ++s) {
        for (Index r = 0; r < t.right_dim(); ++r) {
          put<double>(out, t.block[s](l, r).real());
          put<double>(out, t.block[s](l, r).imag());
        }
      }
    }
  }
  if (!out) throw FormatError("failed to write MPS checkpoint");
}

MpsState read_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw FormatError("not an MPS checkpoint");
  if (get<std::uint32_t>(in) != kVersion) throw FormatError("unsupported MPS checkpoint version");
  const auto n = get<std::uint64_t>(in);
  if (n == 0 || n > (1u << 24)) throw FormatError("implausible site count in MPS checkpoint");
  const auto center = get<std::int64_t>(in);
  const auto discarded = get<double>(in);
  const bool symmetric = get<std::uint8_t>(in) != 0;
  std::vector<Index> dims(n + 1);
  for (auto& d : dims) d = static_cast<Index>(get<std::uint64_t>(in));
  std::vector<BondSpace> bonds;
  for (std::size_t b = 0; b <= n; ++b) {
    const auto count = get<std::uint32_t>(in);
    std::vector<std::pair<int, Index>> sectors;
    for (std::uint32_t k = 0; k < count; ++k) {
      const auto charge = get<std::int32_t>(in);
      const auto dim = static_cast<Index>(get<std::uint64_t>(in));
      sectors.emplace_back(charge, dim);
    }
    bonds.push_back(BondSpace::from_dims(sectors));
    if (bonds.back().dim() != dims[b]) throw FormatError("sector table disagrees with bond dimension");
  }
  std::vector<SiteTensor> tensors(n);
  for (std::size_t i = 0; i < n; ++i) {
    SiteTensor& t = tensors[i];
    for (auto& blk : t.block) blk.resize(dims[i], dims[i + 1]);
    for (Index l = 0; l < dims[i]; ++l) {
      for (int s = 0; s < 2; ++s) {
        for (Index r = 0; r < dims[i + 1]; ++r) {
          const double re = get<double>(in);
          const double im = get<double>(in);
          t.block[s](l, r) = cplx(re, im);
        }
      }
    }
  }
  std::optional<std::size_t> c;
  if (center >= 0) c = static_cast<std::size_t>(center);
  try {
    return MpsState(std::move(tensors), std::move(bonds), symmetric, c, discarded);
  } catch (const InvalidInput& e) {
    throw FormatError(std::string("inconsistent MPS checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const MpsState& state) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
    write_checkpoint(out, state);
  }
  std::filesystem::rename(tmp, path);
}

MpsState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace xxz
