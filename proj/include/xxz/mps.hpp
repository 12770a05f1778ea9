#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace xxz {

using cplx = std::complex<double>;
using Index = Eigen::Index;

// Physical basis convention used everywhere: index 0 is spin up (Z = +1),
// index 1 is spin down (Z = -1). Two-site operators act on the basis
// (up-up, up-down, down-up, down-down), i.e. row/column 2*s1 + s2.
enum class Spin : std::uint8_t { up = 0, down = 1 };

struct TruncParams {
  Index max_bond = 500;
  // Tail weight (squared singular values of the normalized two-site tensor)
  // allowed to be discarded per gate. Zero means "only drop exact zeros".
  double svd_cutoff = 1e-10;

  void validate() const;
  static TruncParams exact() { return {1 << 20, 0.0}; }
};

// One block of a virtual bond: basis vectors [offset, offset + dim) all carry
// the same U(1) charge (accumulated sum of Z to the left of the bond).
struct Sector {
  int charge = 0;
  Index offset = 0;
  Index dim = 0;
};

// Virtual bond basis, sorted by charge and stored contiguously. A state that
// does not conserve magnetization uses a single charge-0 sector per bond.
class BondSpace {
 public:
  BondSpace() = default;
  static BondSpace trivial(Index dim);
  // (charge, dim) pairs; must be strictly increasing in charge, dims > 0.
  static BondSpace from_dims(std::span<const std::pair<int, Index>> dims);

  Index dim() const { return dim_; }
  std::span<const Sector> sectors() const { return sectors_; }
  const Sector* find(int charge) const;
  bool operator==(const BondSpace& other) const;

 private:
  std::vector<Sector> sectors_;
  Index dim_ = 0;
};

// Rank-3 tensor (left bond x physical x right bond) stored as one
// left x right matrix per physical index.
struct SiteTensor {
  std::array<Eigen::MatrixXcd, 2> block;

  Index left_dim() const { return block[0].rows(); }
  Index right_dim() const { return block[0].cols(); }
};

enum class Sweep : std::uint8_t { left_to_right, right_to_left };

class MpsState {
 public:
  // Dense-mode state from raw tensors; no orthogonality center assumed.
  explicit MpsState(std::vector<SiteTensor> tensors);
  // Full constructor. bonds has size() + 1 entries (both boundaries included).
  MpsState(std::vector<SiteTensor> tensors, std::vector<BondSpace> bonds,
           bool conserves_charge, std::optional<std::size_t> center,
           double cumulative_discarded_weight);

  std::size_t size() const { return tensors_.size(); }
  const SiteTensor& site(std::size_t i) const { return tensors_.at(i); }
  std::span<const SiteTensor> tensors() const { return tensors_; }
  // Bond b sits between sites b-1 and b; bond 0 and bond size() are the
  // dimension-1 boundaries.
  const BondSpace& bond_space(std::size_t b) const { return bonds_.at(b); }
  Index bond_dim(std::size_t b) const { return bonds_.at(b).dim(); }
  Index max_bond_dim() const;
  std::vector<Index> bond_dims() const;

  std::optional<std::size_t> center() const { return center_; }
  double cumulative_discarded_weight() const { return discarded_; }
  bool conserves_charge() const { return conserves_charge_; }
  // Charge carried by a physical index: +1/-1 when magnetization sectors are
  // tracked, 0 otherwise.
  int site_charge(int s) const { return conserves_charge_ ? (s == 0 ? 1 : -1) : 0; }

  // Moves the orthogonality center with QR/LQ steps, establishing canonical
  // form first when there is no center yet.
  void move_center(std::size_t target);

  // Applies a 4x4 gate to sites (left_site, left_site + 1) and truncates the
  // new bond. The center must sit on one of the two sites; afterwards it is
  // on the right site for left_to_right and on the left site otherwise.
  // Returns the discarded weight of this gate.
  double apply_two_site(const Eigen::Matrix4cd& gate, std::size_t left_site,
                        const TruncParams& trunc,
                        Sweep direction = Sweep::left_to_right);

  // Forgets magnetization sectors (needed before applying a gate that does
  // not conserve total Z).
  void drop_symmetry();

  // Squared norm of the center tensor; requires a center.
  double center_norm_squared() const;

 private:
  void validate() const;
  void shift_right(std::size_t i);
  void shift_left(std::size_t i);

  std::vector<SiteTensor> tensors_;
  std::vector<BondSpace> bonds_;
  bool conserves_charge_ = false;
  std::optional<std::size_t> center_;
  double discarded_ = 0.0;
};

MpsState product_state(std::span<const Spin> spins);
MpsState canonicalize(MpsState state, std::size_t target_center);

// Dense-mode random state with bond dimensions min(max_bond, 2^k) profile,
// normalized and canonical at site 0.
MpsState random_mps(std::size_t n_sites, Index max_bond, std::uint64_t seed);

cplx overlap(const MpsState& bra, const MpsState& ket);
double norm(const MpsState& state);

double expect_one(const MpsState& state, const Eigen::Matrix2cd& op, std::size_t site);
cplx expect_two(const MpsState& state, const Eigen::Matrix2cd& op_a,
                const Eigen::Matrix2cd& op_b, std::size_t left_site);
cplx expect_two(const MpsState& state, const Eigen::Matrix4cd& op, std::size_t left_site);

// All one-site values of op1 and all nearest-neighbour values of the bond
// operators in one canonical sweep. bond_ops has either one entry (used on
// every bond) or size()-1 entries.
struct LocalExpectations {
  std::vector<cplx> one_site;
  std::vector<cplx> two_site;
};
LocalExpectations local_expectations(const MpsState& state, const Eigen::Matrix2cd& op1,
                                     std::span<const Eigen::Matrix4cd> bond_ops);

// Von Neumann entropy across the bond between sites b and b+1.
double entanglement_entropy(const MpsState& state, std::size_t b);
std::vector<double> schmidt_values(const MpsState& state, std::size_t b);

// Largest deviation from the isometry condition over all non-center sites.
double canonical_form_error(const MpsState& state);

namespace pauli {
Eigen::Matrix2cd identity();
Eigen::Matrix2cd x();
Eigen::Matrix2cd y();
Eigen::Matrix2cd z();
}  // namespace pauli

Eigen::Matrix4cd kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b);

}  // namespace xxz
