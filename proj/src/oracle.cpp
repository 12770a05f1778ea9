#include "xxz/oracle.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

#include "xxz/error.hpp"

namespace xxz::oracle {

namespace {

void check_sites(std::size_t n) {
  if (n == 0 || n > kMaxSites) throw InvalidInput("oracle supports 1..14 sites");
}

std::size_t bit_of(std::size_t n_sites, std::size_t site) { return n_sites - 1 - site; }

// Applies a 4x4 operator to sites (i, i+1) of a dense vector.
Eigen::VectorXcd apply_two(const Eigen::VectorXcd& psi, std::size_t n, const Eigen::Matrix4cd& op, std::size_t i) {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(psi.size());
  const std::size_t b1 = bit_of(n, i);
  const std::size_t b2 = bit_of(n, i + 1);
  for (Index idx = 0; idx < psi.size(); ++idx) {
    const auto u = static_cast<std::size_t>(idx);
    const int s = 2 * static_cast<int>((u >> b1) & 1U) + static_cast<int>((u >> b2) & 1U);
    const std::size_t rest = u & ~((std::size_t{1} << b1) | (std::size_t{1} << b2));
    for (int t = 0; t < 4; ++t) {
      if (op(t, s) == cplx(0.0)) continue;
      const std::size_t target = rest | (static_cast<std::size_t>(t >> 1) << b1) | (static_cast<std::size_t>(t & 1) << b2);
      out(static_cast<Index>(target)) += op(t, s) * psi(idx);
    }
  }
  return out;
}

}  // namespace

DenseState::DenseState(Eigen::VectorXcd amplitudes) : amplitudes_(std::move(amplitudes)) {
  const auto dim = static_cast<std::size_t>(amplitudes_.size());
  if (dim < 2 || !std::has_single_bit(dim)) throw InvalidInput("dense state dimension must be 2^L");
  n_sites_ = static_cast<std::size_t>(std::countr_zero(dim));
  check_sites(n_sites_);
  if (std::abs(amplitudes_.norm() - 1.0) > 1e-12) throw InvalidInput("dense state must be normalized");
}

Eigen::MatrixXd dense_hamiltonian(const BondCouplings& couplings) {
  const std::size_t n = couplings.n_sites();
  if (n > kMaxDenseMatrixSites) throw InvalidInput("dense Hamiltonian limited to 10 sites; use apply_hamiltonian");
  check_sites(n);
  const Index dim = Index{1} << n;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for (Index col = 0; col < dim; ++col) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(dim);
    e(col) = 1.0;
    h.col(col) = apply_hamiltonian(couplings, e).real();
  }
  return h;
}

Eigen::MatrixXd dense_hamiltonian(const ChainSpec& spec) { return dense_hamiltonian(chain_couplings(spec)); }

Eigen::VectorXcd apply_hamiltonian(const BondCouplings& couplings, const Eigen::VectorXcd& psi) {
  const std::size_t n = couplings.n_sites();
  check_sites(n);
  if (psi.size() != (Index{1} << n)) throw InvalidInput("vector dimension does not match chain");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(psi.size());
  for (std::size_t b = 0; b + 1 < n; ++b) {
    out += apply_two(psi, n, two_site_term(couplings.hopping, couplings.zz[b]), b);
  }
  return out;
}

SectorSpectrum::SectorSpectrum(const BondCouplings& couplings) : n_sites_(couplings.n_sites()) {
  check_sites(n_sites_);
  const std::uint32_t dim = 1U << n_sites_;
  blocks_.resize(n_sites_ + 1);
  std::vector<Index> position(dim);
  for (std::uint32_t u = 0; u < dim; ++u) {
    Block& blk = blocks_[static_cast<std::size_t>(std::popcount(u))];
    position[u] = static_cast<Index>(blk.basis.size());
    blk.basis.push_back(u);
  }
  for (Block& blk : blocks_) {
    const auto m = static_cast<Index>(blk.basis.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, m);
    for (Index a = 0; a < m; ++a) {
      const std::uint32_t u = blk.basis[static_cast<std::size_t>(a)];
      for (std::size_t b = 0; b + 1 < n_sites_; ++b) {
        const std::uint32_t m1 = 1U << bit_of(n_sites_, b);
        const std::uint32_t m2 = 1U << bit_of(n_sites_, b + 1);
        const bool d1 = (u & m1) != 0;
        const bool d2 = (u & m2) != 0;
        h(a, a) += couplings.zz[b] * (d1 == d2 ? 1.0 : -1.0);
        if (d1 != d2) h(position[u ^ m1 ^ m2], a) += 2.0 * couplings.hopping;
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    blk.energies = eig.eigenvalues();
    blk.vectors = eig.eigenvectors();
  }
}

double SectorSpectrum::ground_energy(std::optional<int> n_down) const {
  if (n_down) {
    if (*n_down < 0 || static_cast<std::size_t>(*n_down) > n_sites_) throw InvalidInput("sector out of range");
    return blocks_[static_cast<std::size_t>(*n_down)].energies(0);
  }
  double best = std::numeric_limits<double>::infinity();
  for (const Block& blk : blocks_) best = std::min(best, blk.energies(0));
  return best;
}

Eigen::VectorXcd SectorSpectrum::ground_vector(int n_down) const {
  if (n_down < 0 || static_cast<std::size_t>(n_down) > n_sites_) throw InvalidInput("sector out of range");
  const Block& blk = blocks_[static_cast<std::size_t>(n_down)];
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(Index{1} << n_sites_);
  for (std::size_t a = 0; a < blk.basis.size(); ++a) out(blk.basis[a]) = blk.vectors(static_cast<Index>(a), 0);
  return out;
}

bool SectorSpectrum::ground_is_unique(int n_down, double tol) const {
  const Block& blk = blocks_.at(static_cast<std::size_t>(n_down));
  return blk.energies.size() < 2 || blk.energies(1) - blk.energies(0) > tol;
}

DenseState SectorSpectrum::evolve(const DenseState& state, double t) const {
  if (state.n_sites() != n_sites_) throw InvalidInput("state length does not match spectrum");
  const Eigen::VectorXcd& psi = state.amplitudes();
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(psi.size());
  for (const Block& blk : blocks_) {
    const auto m = static_cast<Index>(blk.basis.size());
    Eigen::VectorXcd local(m);
    for (Index a = 0; a < m; ++a) local(a) = psi(blk.basis[static_cast<std::size_t>(a)]);
    Eigen::VectorXcd coeff = blk.vectors.transpose().cast<cplx>() * local;
    for (Index k = 0; k < m; ++k) coeff(k) *= std::exp(cplx(0.0, -blk.energies(k) * t));
    local = blk.vectors.cast<cplx>() * coeff;
    for (Index a = 0; a < m; ++a) out(blk.basis[static_cast<std::size_t>(a)]) = local(a);
  }
  out /= out.norm();
  return DenseState(std::move(out));
}

DenseState dense_evolve(const DenseState& state, const BondCouplings& couplings, double t) {
  return SectorSpectrum(couplings).evolve(state, t);
}

DenseState dense_evolve(const DenseState& state, const ChainSpec& spec, double t) {
  return dense_evolve(state, chain_couplings(spec), t);
}

double xx_ground_energy(int n, double hopping) {
  if (n < 1) throw InvalidInput("n must be positive");
  double energy = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double eps = 4.0 * hopping * std::cos(std::numbers::pi * k / (n + 1));
    energy += std::min(0.0, eps);
  }
  return energy;
}

DenseState to_dense(const MpsState& state) {
  const std::size_t n = state.size();
  check_sites(n);
  // Row vector over (configuration of sites so far) x (right bond).
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Ones(1, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const SiteTensor& t = state.site(i);
    Eigen::MatrixXcd next(acc.rows() * 2, t.right_dim());
    for (Index r = 0; r < acc.rows(); ++r) {
      for (int s = 0; s < 2; ++s) next.row(2 * r + s) = acc.row(r) * t.block[s];
    }
    acc = std::move(next);
  }
  Eigen::VectorXcd v = acc.col(0);
  const double nrm = v.norm();
  if (!(nrm > 0.0)) throw InvalidInput("state has zero norm");
  return DenseState(v / nrm);
}

MpsState from_dense(const DenseState& state) {
  const std::size_t n = state.n_sites();
  std::vector<SiteTensor> tensors(n);
  // carry: (left bond) x (configurations of sites i..n-1), site i most significant.
  Eigen::MatrixXcd carry = state.amplitudes().transpose();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Index left = carry.rows();
    const Index rest = carry.cols() / 2;
    Eigen::MatrixXcd mat(2 * left, rest);
    for (int s = 0; s < 2; ++s) mat.middleRows(s * left, left) = carry.middleCols(s * rest, rest);
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Index k = 0;
    while (k < svd.singularValues().size() && svd.singularValues()(k) > 1e-14) ++k;
    k = std::max<Index>(k, 1);
    for (int s = 0; s < 2; ++s) tensors[i].block[s] = svd.matrixU().block(s * left, 0, left, k);
    carry = svd.singularValues().head(k).asDiagonal() * svd.matrixV().leftCols(k).adjoint();
  }
  for (int s = 0; s < 2; ++s) tensors[n - 1].block[s] = carry.col(s);
  MpsState out(std::move(tensors));
  out.move_center(0);
  return out;
}

double dense_expect_one(const DenseState& state, const Eigen::Matrix2cd& op, std::size_t site) {
  const std::size_t n = state.n_sites();
  if (site >= n) throw InvalidInput("site out of range");
  const Eigen::VectorXcd& psi = state.amplitudes();
  const std::size_t b = bit_of(n, site);
  cplx acc = 0.0;
  for (Index idx = 0; idx < psi.size(); ++idx) {
    const auto u = static_cast<std::size_t>(idx);
    const int s = static_cast<int>((u >> b) & 1U);
    for (int t = 0; t < 2; ++t) {
      const std::size_t target = (u & ~(std::size_t{1} << b)) | (static_cast<std::size_t>(t) << b);
      acc += std::conj(psi(static_cast<Index>(target))) * op(t, s) * psi(idx);
    }
  }
  return acc.real();
}

cplx dense_expect_two(const DenseState& state, const Eigen::Matrix4cd& op, std::size_t left_site) {
  if (left_site + 1 >= state.n_sites()) throw InvalidInput("site out of range");
  return state.amplitudes().dot(apply_two(state.amplitudes(), state.n_sites(), op, left_site));
}

double dense_current(const DenseState& state, double hopping, std::size_t left_site) {
  const Eigen::Matrix4cd op = kron(pauli::x(), pauli::y()) - kron(pauli::y(), pauli::x());
  return 2.0 * hopping * dense_expect_two(state, op, left_site).real();
}

std::vector<double> dense_z_profile(const DenseState& state) {
  std::vector<double> z(state.n_sites());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = dense_expect_one(state, pauli::z(), i);
  return z;
}

double dense_entropy(const DenseState& state, std::size_t b) {
  const std::size_t n = state.n_sites();
  if (b + 1 >= n) throw InvalidInput("bond out of range");
  const Index left = Index{1} << (b + 1);
  const Index right = Index{1} << (n - b - 1);
  Eigen::MatrixXcd m(left, right);
  for (Index l = 0; l < left; ++l) {
    for (Index r = 0; r < right; ++r) m(l, r) = state.amplitudes()(l * right + r);
  }
  const Eigen::MatrixXcd rho = m * m.adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(rho);
  double entropy = 0.0;
  for (Index k = 0; k < eig.eigenvalues().size(); ++k) {
    const double p = eig.eigenvalues()(k);
    if (p > 1e-300) entropy -= p * std::log(p);
  }
  return entropy;
}

}  // namespace xxz::oracle
