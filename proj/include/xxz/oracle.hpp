#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "xxz/model.hpp"
#include "xxz/mps.hpp"

// Exact references for small chains. Basis index of a product state is
// sum_i s_i 2^(L-1-i) with s_i = 0 for up, so site 0 is the most significant
// bit and two-site operators embed as I ⊗ h ⊗ I.
namespace xxz::oracle {

constexpr std::size_t kMaxSites = 14;
constexpr std::size_t kMaxDenseMatrixSites = 10;

class DenseState {
 public:
  explicit DenseState(Eigen::VectorXcd amplitudes);
  std::size_t n_sites() const { return n_sites_; }
  const Eigen::VectorXcd& amplitudes() const { return amplitudes_; }

 private:
  Eigen::VectorXcd amplitudes_;
  std::size_t n_sites_ = 0;
};

Eigen::MatrixXd dense_hamiltonian(const BondCouplings& couplings);
Eigen::MatrixXd dense_hamiltonian(const ChainSpec& spec);
Eigen::VectorXcd apply_hamiltonian(const BondCouplings& couplings, const Eigen::VectorXcd& psi);

// Eigensystem of H restricted to each total-magnetization sector.
class SectorSpectrum {
 public:
  explicit SectorSpectrum(const BondCouplings& couplings);

  std::size_t n_sites() const { return n_sites_; }
  // Lowest energy over all sectors, or within the sector with the given
  // number of down spins.
  double ground_energy(std::optional<int> n_down = std::nullopt) const;
  Eigen::VectorXcd ground_vector(int n_down) const;
  // True when the lowest level of the sector is non-degenerate (gap > tol).
  bool ground_is_unique(int n_down, double tol = 1e-8) const;
  DenseState evolve(const DenseState& state, double t) const;

 private:
  struct Block {
    std::vector<std::uint32_t> basis;
    Eigen::VectorXd energies;
    Eigen::MatrixXd vectors;
  };
  std::size_t n_sites_ = 0;
  std::vector<Block> blocks_;  // indexed by number of down spins
};

DenseState dense_evolve(const DenseState& state, const BondCouplings& couplings, double t);
DenseState dense_evolve(const DenseState& state, const ChainSpec& spec, double t);

// Open XX chain ground energy from the modes 4 J cos(pi k / (n + 1)).
double xx_ground_energy(int n, double hopping);

DenseState to_dense(const MpsState& state);
// Exact (untruncated) dense-mode MPS, center at site 0.
MpsState from_dense(const DenseState& state);

double dense_expect_one(const DenseState& state, const Eigen::Matrix2cd& op, std::size_t site);
cplx dense_expect_two(const DenseState& state, const Eigen::Matrix4cd& op, std::size_t left_site);
// 2J <X_i Y_{i+1} - Y_i X_{i+1}> on 0-based left site i.
double dense_current(const DenseState& state, double hopping, std::size_t left_site);
std::vector<double> dense_z_profile(const DenseState& state);
// Entropy of the reduced density matrix of sites 0..b.
double dense_entropy(const DenseState& state, std::size_t b);

}  // namespace xxz::oracle
