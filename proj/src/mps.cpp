#include "xxz/mps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "xxz/error.hpp"

namespace xxz {

namespace {

constexpr double kDegenerateRelTol = 1e-12;

int two_site_index(int s1, int s2) { return 2 * s1 + s2; }

// theta[l][2*s1+s2] = A[s1] * B[s2] restricted to left sector l; empty when
// the intermediate or right sector does not exist.
struct ThetaBlocks {
  std::vector<std::array<Eigen::MatrixXcd, 4>> block;
  std::vector<std::array<const Sector*, 4>> right;
};

ThetaBlocks theta_blocks(const MpsState& state, std::size_t i, const std::array<bool, 4>& wanted) {
  const BondSpace& left = state.bond_space(i);
  const BondSpace& mid = state.bond_space(i + 1);
  const BondSpace& right = state.bond_space(i + 2);
  const SiteTensor& a = state.site(i);
  const SiteTensor& b = state.site(i + 1);
  ThetaBlocks out;
  out.block.resize(left.sectors().size());
  out.right.resize(left.sectors().size());
  for (std::size_t l = 0; l < left.sectors().size(); ++l) {
    const Sector& ls = left.sectors()[l];
    out.right[l].fill(nullptr);
    for (int s1 = 0; s1 < 2; ++s1) {
      const Sector* ms = mid.find(ls.charge + state.site_charge(s1));
      if (ms == nullptr) continue;
      for (int s2 = 0; s2 < 2; ++s2) {
        const int idx = two_site_index(s1, s2);
        if (!wanted[idx]) continue;
        const Sector* rs = right.find(ms->charge + state.site_charge(s2));
        if (rs == nullptr) continue;
        out.block[l][idx].noalias() =
            a.block[s1].block(ls.offset, ms->offset, ls.dim, ms->dim) *
            b.block[s2].block(ms->offset, rs->offset, ms->dim, rs->dim);
        out.right[l][idx] = rs;
      }
    }
  }
  return out;
}

// Frobenius inner products <theta_t, theta_s> weighted by op(t, s).
cplx theta_expectation(const ThetaBlocks& theta, const Eigen::Matrix4cd& op) {
  cplx acc = 0.0;
  for (std::size_t l = 0; l < theta.block.size(); ++l) {
    for (int t = 0; t < 4; ++t) {
      if (theta.right[l][t] == nullptr) continue;
      for (int s = 0; s < 4; ++s) {
        if (op(t, s) == cplx(0.0) || theta.right[l][s] != theta.right[l][t]) continue;
        acc += op(t, s) * theta.block[l][s].cwiseProduct(theta.block[l][t].conjugate()).sum();
      }
    }
  }
  return acc;
}

std::array<bool, 4> nonzero_pattern(const Eigen::Matrix4cd& op) {
  std::array<bool, 4> used{};
  for (int t = 0; t < 4; ++t) {
    for (int s = 0; s < 4; ++s) {
      if (op(t, s) != cplx(0.0)) used[s] = used[t] = true;
    }
  }
  return used;
}

cplx one_site_center_value(const MpsState& state, const Eigen::Matrix2cd& op, std::size_t c) {
  const SiteTensor& a = state.site(c);
  cplx acc = 0.0;
  for (int t = 0; t < 2; ++t) {
    for (int s = 0; s < 2; ++s) {
      if (op(t, s) == cplx(0.0)) continue;
      acc += op(t, s) * a.block[s].cwiseProduct(a.block[t].conjugate()).sum();
    }
  }
  return acc;
}

Eigen::MatrixXcd transfer_identity(const Eigen::MatrixXcd& env, const SiteTensor& bra,
                                   const SiteTensor& ket) {
  Eigen::MatrixXcd out = bra.block[0].adjoint() * env * ket.block[0];
  out.noalias() += bra.block[1].adjoint() * env * ket.block[1];
  return out;
}

Eigen::MatrixXcd transfer_op(const Eigen::MatrixXcd& env, const SiteTensor& a,
                             const Eigen::Matrix2cd& op) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(a.right_dim(), a.right_dim());
  for (int t = 0; t < 2; ++t) {
    for (int s = 0; s < 2; ++s) {
      if (op(t, s) == cplx(0.0)) continue;
      out.noalias() += op(t, s) * (a.block[t].adjoint() * env * a.block[s]);
    }
  }
  return out;
}

Eigen::MatrixXcd left_environment(const MpsState& state, std::size_t upto) {
  Eigen::MatrixXcd env = Eigen::MatrixXcd::Ones(1, 1);
  for (std::size_t j = 0; j < upto; ++j) env = transfer_identity(env, state.site(j), state.site(j));
  return env;
}

cplx close_environment(const MpsState& state, Eigen::MatrixXcd env, std::size_t from) {
  for (std::size_t j = from; j < state.size(); ++j) env = transfer_identity(env, state.site(j), state.site(j));
  return env(0, 0);
}

void check_site(const MpsState& state, std::size_t site) {
  if (site >= state.size()) {
    std::ostringstream msg;
    msg << "site index " << site << " out of range for chain of " << state.size() << " sites";
    throw InvalidInput(msg.str());
  }
}

}  // namespace

void TruncParams::validate() const {
  if (max_bond < 1) throw InvalidInput("max_bond must be >= 1");
  if (!(svd_cutoff >= 0.0) || !(svd_cutoff < 1.0)) throw InvalidInput("svd_cutoff must lie in [0, 1)");
}

BondSpace BondSpace::trivial(Index dim) {
  BondSpace space;
  space.sectors_.push_back({0, 0, dim});
  space.dim_ = dim;
  return space;
}

BondSpace BondSpace::from_dims(std::span<const std::pair<int, Index>> dims) {
  BondSpace space;
  Index offset = 0;
  for (const auto& [charge, dim] : dims) {
    if (dim <= 0) throw InvalidInput("bond sector dimensions must be positive");
    if (!space.sectors_.empty() && space.sectors_.back().charge >= charge) {
      throw InvalidInput("bond sectors must be strictly increasing in charge");
    }
    space.sectors_.push_back({charge, offset, dim});
    offset += dim;
  }
  space.dim_ = offset;
  return space;
}

const Sector* BondSpace::find(int charge) const {
  auto it = std::lower_bound(sectors_.begin(), sectors_.end(), charge,
                             [](const Sector& s, int q) { return s.charge < q; });
  if (it == sectors_.end() || it->charge != charge) return nullptr;
  return &*it;
}

bool BondSpace::operator==(const BondSpace& other) const {
  if (dim_ != other.dim_ || sectors_.size() != other.sectors_.size()) return false;
  for (std::size_t k = 0; k < sectors_.size(); ++k) {
    const Sector& a = sectors_[k];
    const Sector& b = other.sectors_[k];
    if (a.charge != b.charge || a.offset != b.offset || a.dim != b.dim) return false;
  }
  return true;
}

MpsState::MpsState(std::vector<SiteTensor> tensors) : tensors_(std::move(tensors)) {
  if (tensors_.empty()) throw InvalidInput("an MPS needs at least one site");
  bonds_.reserve(tensors_.size() + 1);
  bonds_.push_back(BondSpace::trivial(tensors_.front().left_dim()));
  for (const SiteTensor& t : tensors_) bonds_.push_back(BondSpace::trivial(t.right_dim()));
  validate();
}

MpsState::MpsState(std::vector<SiteTensor> tensors, std::vector<BondSpace> bonds,
                   bool conserves_charge, std::optional<std::size_t> center,
                   double cumulative_discarded_weight)
    : tensors_(std::move(tensors)),
      bonds_(std::move(bonds)),
      conserves_charge_(conserves_charge),
      center_(center),
      discarded_(cumulative_discarded_weight) {
  validate();
}

void MpsState::validate() const {
  if (tensors_.empty()) throw InvalidInput("an MPS needs at least one site");
  if (bonds_.size() != tensors_.size() + 1) throw InvalidInput("bond list must have size() + 1 entries");
  if (bonds_.front().dim() != 1 || bonds_.back().dim() != 1) {
    throw InvalidInput("boundary bonds must have dimension 1");
  }
  if (conserves_charge_ && bonds_.front().sectors().front().charge != 0) {
    throw InvalidInput("left boundary must carry charge 0");
  }
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    const SiteTensor& t = tensors_[i];
    if (t.block[0].rows() != t.block[1].rows() || t.block[0].cols() != t.block[1].cols()) {
      throw InvalidInput("physical components of a site tensor must share a shape");
    }
    if (t.left_dim() != bonds_[i].dim() || t.right_dim() != bonds_[i + 1].dim()) {
      std::ostringstream msg;
      msg << "bond dimension mismatch at site " << i;
      throw InvalidInput(msg.str());
    }
  }
  if (center_ && *center_ >= tensors_.size()) throw InvalidInput("center out of range");
  if (!(discarded_ >= 0.0)) throw InvalidInput("cumulative discarded weight must be >= 0");
}

Index MpsState::max_bond_dim() const {
  Index best = 1;
  for (const BondSpace& b : bonds_) best = std::max(best, b.dim());
  return best;
}

std::vector<Index> MpsState::bond_dims() const {
  std::vector<Index> dims;
  dims.reserve(bonds_.size());
  for (const BondSpace& b : bonds_) dims.push_back(b.dim());
  return dims;
}

double MpsState::center_norm_squared() const {
  if (!center_) throw InvalidInput("state has no orthogonality center");
  const SiteTensor& a = tensors_[*center_];
  return a.block[0].squaredNorm() + a.block[1].squaredNorm();
}

void MpsState::drop_symmetry() {
  if (!conserves_charge_) return;
  for (BondSpace& b : bonds_) b = BondSpace::trivial(b.dim());
  conserves_charge_ = false;
}

// QR on the left-grouped tensor at i; R is absorbed into site i+1.
void MpsState::shift_right(std::size_t i) {
  const BondSpace& left = bonds_[i];
  const BondSpace& right = bonds_[i + 1];
  const BondSpace& far = bonds_[i + 2];
  SiteTensor& a = tensors_[i];
  SiteTensor& next = tensors_[i + 1];

  struct Piece {
    const Sector* old_sector;
    std::array<const Sector*, 2> rows;
    Eigen::MatrixXcd q;
    Eigen::MatrixXcd r;
  };
  std::vector<Piece> pieces;
  std::vector<std::pair<int, Index>> new_dims;
  for (const Sector& rs : right.sectors()) {
    Piece p{&rs, {nullptr, nullptr}, {}, {}};
    Index m = 0;
    for (int s = 0; s < 2; ++s) {
      p.rows[s] = left.find(rs.charge - site_charge(s));
      if (p.rows[s]) m += p.rows[s]->dim;
    }
    if (m == 0) continue;
    Eigen::MatrixXcd mat(m, rs.dim);
    Index row = 0;
    for (int s = 0; s < 2; ++s) {
      if (!p.rows[s]) continue;
      mat.middleRows(row, p.rows[s]->dim) = a.block[s].block(p.rows[s]->offset, rs.offset, p.rows[s]->dim, rs.dim);
      row += p.rows[s]->dim;
    }
    const Index k = std::min(m, rs.dim);
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(mat);
    p.q = qr.householderQ() * Eigen::MatrixXcd::Identity(m, k);
    p.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    new_dims.emplace_back(rs.charge, k);
    pieces.push_back(std::move(p));
  }
  BondSpace fresh = BondSpace::from_dims(new_dims);

  SiteTensor new_a;
  SiteTensor new_next;
  for (int s = 0; s < 2; ++s) {
    new_a.block[s] = Eigen::MatrixXcd::Zero(left.dim(), fresh.dim());
    new_next.block[s] = Eigen::MatrixXcd::Zero(fresh.dim(), far.dim());
  }
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    const Piece& p = pieces[k];
    const Sector& ns = fresh.sectors()[k];
    Index row = 0;
    for (int s = 0; s < 2; ++s) {
      if (!p.rows[s]) continue;
      new_a.block[s].block(p.rows[s]->offset, ns.offset, p.rows[s]->dim, ns.dim) = p.q.middleRows(row, p.rows[s]->dim);
      row += p.rows[s]->dim;
    }
    for (int s = 0; s < 2; ++s) {
      const Sector* fs = far.find(ns.charge + site_charge(s));
      if (!fs) continue;
      new_next.block[s].block(ns.offset, fs->offset, ns.dim, fs->dim).noalias() =
          p.r * next.block[s].block(p.old_sector->offset, fs->offset, p.old_sector->dim, fs->dim);
    }
  }
  a = std::move(new_a);
  next = std::move(new_next);
  bonds_[i + 1] = std::move(fresh);
}

// LQ on the right-grouped tensor at i; L is absorbed into site i-1.
void MpsState::shift_left(std::size_t i) {
  const BondSpace& far = bonds_[i - 1];
  const BondSpace& left = bonds_[i];
  const BondSpace& right = bonds_[i + 1];
  SiteTensor& b = tensors_[i];
  SiteTensor& prev = tensors_[i - 1];

  struct Piece {
    const Sector* old_sector;
    std::array<const Sector*, 2> cols;
    Eigen::MatrixXcd q;  // k x n, orthonormal rows
    Eigen::MatrixXcd l;  // d x k
  };
  std::vector<Piece> pieces;
  std::vector<std::pair<int, Index>> new_dims;
  for (const Sector& ls : left.sectors()) {
    Piece p{&ls, {nullptr, nullptr}, {}, {}};
    Index n = 0;
    for (int s = 0; s < 2; ++s) {
      p.cols[s] = right.find(ls.charge + site_charge(s));
      if (p.cols[s]) n += p.cols[s]->dim;
    }
    if (n == 0) continue;
    Eigen::MatrixXcd mat(ls.dim, n);
    Index col = 0;
    for (int s = 0; s < 2; ++s) {
      if (!p.cols[s]) continue;
      mat.middleCols(col, p.cols[s]->dim) = b.block[s].block(ls.offset, p.cols[s]->offset, ls.dim, p.cols[s]->dim);
      col += p.cols[s]->dim;
    }
    const Index k = std::min(n, ls.dim);
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(mat.adjoint());
    Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, k);
    Eigen::MatrixXcd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    p.q = q.adjoint();
    p.l = r.adjoint();
    new_dims.emplace_back(ls.charge, k);
    pieces.push_back(std::move(p));
  }
  BondSpace fresh = BondSpace::from_dims(new_dims);

  SiteTensor new_b;
  SiteTensor new_prev;
  for (int s = 0; s < 2; ++s) {
    new_b.block[s] = Eigen::MatrixXcd::Zero(fresh.dim(), right.dim());
    new_prev.block[s] = Eigen::MatrixXcd::Zero(far.dim(), fresh.dim());
  }
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    const Piece& p = pieces[k];
    const Sector& ns = fresh.sectors()[k];
    Index col = 0;
    for (int s = 0; s < 2; ++s) {
      if (!p.cols[s]) continue;
      new_b.block[s].block(ns.offset, p.cols[s]->offset, ns.dim, p.cols[s]->dim) = p.q.middleCols(col, p.cols[s]->dim);
      col += p.cols[s]->dim;
    }
    for (int s = 0; s < 2; ++s) {
      const Sector* fs = far.find(ns.charge - site_charge(s));
      if (!fs) continue;
      new_prev.block[s].block(fs->offset, ns.offset, fs->dim, ns.dim).noalias() =
          prev.block[s].block(fs->offset, p.old_sector->offset, fs->dim, p.old_sector->dim) * p.l;
    }
  }
  b = std::move(new_b);
  prev = std::move(new_prev);
  bonds_[i] = std::move(fresh);
}

void MpsState::move_center(std::size_t target) {
  if (target >= size()) {
    std::ostringstream msg;
    msg << "target center " << target << " out of range for chain of " << size() << " sites";
    throw InvalidInput(msg.str());
  }
  if (!center_) {
    for (std::size_t i = 0; i < target; ++i) shift_right(i);
    for (std::size_t i = size() - 1; i > target; --i) shift_left(i);
  } else {
    for (std::size_t i = *center_; i < target; ++i) shift_right(i);
    for (std::size_t i = *center_; i > target; --i) shift_left(i);
  }
  center_ = target;
}

double MpsState::apply_two_site(const Eigen::Matrix4cd& gate, std::size_t i, const TruncParams& trunc,
                                Sweep direction) {
  trunc.validate();
  if (size() < 2 || i + 1 >= size()) {
    std::ostringstream msg;
    msg << "bond (" << i << ", " << i + 1 << ") out of range for chain of " << size() << " sites";
    throw InvalidInput(msg.str());
  }
  if (!center_ || (*center_ != i && *center_ != i + 1)) {
    throw InvalidInput("orthogonality center must be on one of the gate sites");
  }
  if (conserves_charge_) {
    for (int t = 0; t < 4; ++t) {
      for (int s = 0; s < 4; ++s) {
        const int qt = site_charge(t / 2) + site_charge(t % 2);
        const int qs = site_charge(s / 2) + site_charge(s % 2);
        if (qt != qs && gate(t, s) != cplx(0.0)) {
          drop_symmetry();
          break;
        }
      }
      if (!conserves_charge_) break;
    }
  }

  const BondSpace& left = bonds_[i];
  const BondSpace& right = bonds_[i + 2];
  const ThetaBlocks theta = theta_blocks(*this, i, {true, true, true, true});

  // Gate output regrouped by the charge of the new middle bond.
  struct RowSeg {
    int s;
    std::size_t l;
  };
  struct ColSeg {
    int s;
    const Sector* sector;
  };
  struct Block {
    std::vector<RowSeg> rows;
    std::vector<ColSeg> cols;
    Index n_rows = 0;
    Index n_cols = 0;
    Eigen::MatrixXcd u;
    Eigen::VectorXd sv;
    Eigen::MatrixXcd vh;
    Index keep = 0;
  };
  std::map<int, Block> blocks;
  for (std::size_t l = 0; l < left.sectors().size(); ++l) {
    const Sector& ls = left.sectors()[l];
    for (int s1 = 0; s1 < 2; ++s1) {
      const int qm = ls.charge + site_charge(s1);
      Block& blk = blocks[qm];
      blk.rows.push_back({s1, l});
      blk.n_rows += ls.dim;
    }
  }
  for (auto it = blocks.begin(); it != blocks.end();) {
    for (int s2 = 0; s2 < 2; ++s2) {
      const Sector* rs = right.find(it->first + site_charge(s2));
      if (!rs) continue;
      it->second.cols.push_back({s2, rs});
      it->second.n_cols += rs->dim;
    }
    if (it->second.cols.empty()) {
      it = blocks.erase(it);
    } else {
      ++it;
    }
  }
  if (blocks.empty()) throw InvalidInput("two-site tensor has no admissible charge sector");

  struct Value {
    double s;
    int charge;
    Index j;
  };
  std::vector<Value> values;
  for (auto& [qm, blk] : blocks) {
    Eigen::MatrixXcd mat = Eigen::MatrixXcd::Zero(blk.n_rows, blk.n_cols);
    Index row = 0;
    for (const RowSeg& rseg : blk.rows) {
      const Sector& ls = left.sectors()[rseg.l];
      Index col = 0;
      for (const ColSeg& cseg : blk.cols) {
        auto target = mat.block(row, col, ls.dim, cseg.sector->dim);
        const int out = two_site_index(rseg.s, cseg.s);
        for (int in = 0; in < 4; ++in) {
          if (gate(out, in) == cplx(0.0) || theta.right[rseg.l][in] != cseg.sector) continue;
          target.noalias() += gate(out, in) * theta.block[rseg.l][in];
        }
        col += cseg.sector->dim;
      }
      row += ls.dim;
    }
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
    blk.u = svd.matrixU();
    blk.sv = svd.singularValues();
    blk.vh = svd.matrixV().adjoint();
    for (Index j = 0; j < blk.sv.size(); ++j) values.push_back({blk.sv(j), qm, j});
  }
  std::stable_sort(values.begin(), values.end(), [](const Value& a, const Value& b) { return a.s > b.s; });

  const std::size_t n = values.size();
  std::vector<double> tail(n + 1, 0.0);
  for (std::size_t j = n; j-- > 0;) tail[j] = tail[j + 1] + values[j].s * values[j].s;
  const double total = tail[0];
  if (!(total > 0.0)) throw InvalidInput("gate annihilated the state");

  std::size_t keep = 0;
  if (trunc.svd_cutoff > 0.0) {
    keep = 1;
    while (keep < n && tail[keep] / total >= trunc.svd_cutoff) ++keep;
  } else {
    while (keep < n && values[keep].s > 0.0) ++keep;
  }
  const auto cap = static_cast<std::size_t>(trunc.max_bond);
  keep = std::min(keep, cap);
  while (keep < n && keep < cap && values[keep].s > 0.0 &&
         values[keep].s >= values[keep - 1].s * (1.0 - kDegenerateRelTol)) {
    ++keep;
  }
  const double discarded = tail[keep] / total;
  const double kept_norm = std::sqrt(total - tail[keep]);
  for (std::size_t j = 0; j < keep; ++j) ++blocks[values[j].charge].keep;

  std::vector<std::pair<int, Index>> new_dims;
  for (const auto& [qm, blk] : blocks) {
    if (blk.keep > 0) new_dims.emplace_back(qm, blk.keep);
  }
  BondSpace fresh = BondSpace::from_dims(new_dims);

  SiteTensor new_a;
  SiteTensor new_b;
  for (int s = 0; s < 2; ++s) {
    new_a.block[s] = Eigen::MatrixXcd::Zero(left.dim(), fresh.dim());
    new_b.block[s] = Eigen::MatrixXcd::Zero(fresh.dim(), right.dim());
  }
  const bool center_right = direction == Sweep::left_to_right;
  for (const auto& [qm, blk] : blocks) {
    if (blk.keep == 0) continue;
    const Sector* ns = fresh.find(qm);
    const Eigen::VectorXd s = blk.sv.head(blk.keep) / kept_norm;
    Eigen::MatrixXcd u = blk.u.leftCols(blk.keep);
    Eigen::MatrixXcd vh = blk.vh.topRows(blk.keep);
    if (center_right) {
      vh = s.asDiagonal() * vh;
    } else {
      u = u * s.asDiagonal();
    }
    Index row = 0;
    for (const RowSeg& rseg : blk.rows) {
      const Sector& ls = left.sectors()[rseg.l];
      new_a.block[rseg.s].block(ls.offset, ns->offset, ls.dim, ns->dim) = u.middleRows(row, ls.dim);
      row += ls.dim;
    }
    Index col = 0;
    for (const ColSeg& cseg : blk.cols) {
      new_b.block[cseg.s].block(ns->offset, cseg.sector->offset, ns->dim, cseg.sector->dim) =
          vh.middleCols(col, cseg.sector->dim);
      col += cseg.sector->dim;
    }
  }
  tensors_[i] = std::move(new_a);
  tensors_[i + 1] = std::move(new_b);
  bonds_[i + 1] = std::move(fresh);
  center_ = center_right ? i + 1 : i;
  discarded_ += discarded;
  return discarded;
}

MpsState product_state(std::span<const Spin> spins) {
  if (spins.empty()) throw InvalidInput("product_state needs at least one spin");
  std::vector<SiteTensor> tensors;
  std::vector<BondSpace> bonds;
  int charge = 0;
  const std::pair<int, Index> first{0, 1};
  bonds.push_back(BondSpace::from_dims(std::span(&first, 1)));
  for (Spin spin : spins) {
    SiteTensor t;
    const int s = static_cast<int>(spin);
    t.block[s] = Eigen::MatrixXcd::Ones(1, 1);
    t.block[1 - s] = Eigen::MatrixXcd::Zero(1, 1);
    tensors.push_back(std::move(t));
    charge += spin == Spin::up ? 1 : -1;
    const std::pair<int, Index> dims{charge, 1};
    bonds.push_back(BondSpace::from_dims(std::span(&dims, 1)));
  }
  return MpsState(std::move(tensors), std::move(bonds), true, 0, 0.0);
}

MpsState canonicalize(MpsState state, std::size_t target_center) {
  state.move_center(target_center);
  return state;
}

MpsState random_mps(std::size_t n_sites, Index max_bond, std::uint64_t seed) {
  if (n_sites == 0) throw InvalidInput("random_mps needs at least one site");
  if (max_bond < 1) throw InvalidInput("max_bond must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto dim_at = [&](std::size_t b) {
    const std::size_t k = std::min(b, n_sites - b);
    Index d = 1;
    for (std::size_t j = 0; j < k && d < max_bond; ++j) d *= 2;
    return std::min(d, max_bond);
  };
  std::vector<SiteTensor> tensors;
  for (std::size_t i = 0; i < n_sites; ++i) {
    SiteTensor t;
    for (int s = 0; s < 2; ++s) {
      t.block[s].resize(dim_at(i), dim_at(i + 1));
      for (Index r = 0; r < t.block[s].rows(); ++r) {
        for (Index c = 0; c < t.block[s].cols(); ++c) {
          const double re = normal(rng);
          const double im = normal(rng);
          t.block[s](r, c) = cplx(re, im);
        }
      }
    }
    tensors.push_back(std::move(t));
  }
  MpsState state(std::move(tensors));
  state.move_center(0);
  const double scale = 1.0 / std::sqrt(state.center_norm_squared());
  std::vector<SiteTensor> scaled(state.tensors().begin(), state.tensors().end());
  for (auto& b : scaled[0].block) b *= scale;
  std::vector<BondSpace> bonds;
  for (std::size_t b = 0; b <= n_sites; ++b) bonds.push_back(state.bond_space(b));
  return MpsState(std::move(scaled), std::move(bonds), false, 0, 0.0);
}

cplx overlap(const MpsState& bra, const MpsState& ket) {
  if (bra.size() != ket.size()) throw InvalidInput("overlap of states with different lengths");
  Eigen::MatrixXcd env = Eigen::MatrixXcd::Ones(1, 1);
  for (std::size_t j = 0; j < bra.size(); ++j) env = transfer_identity(env, bra.site(j), ket.site(j));
  return env(0, 0);
}

double norm(const MpsState& state) { return std::sqrt(overlap(state, state).real()); }

double expect_one(const MpsState& state, const Eigen::Matrix2cd& op, std::size_t site) {
  check_site(state, site);
  Eigen::MatrixXcd env = left_environment(state, site);
  env = transfer_op(env, state.site(site), op);
  const cplx num = close_environment(state, env, site + 1);
  return num.real() / overlap(state, state).real();
}

cplx expect_two(const MpsState& state, const Eigen::Matrix2cd& op_a, const Eigen::Matrix2cd& op_b,
                std::size_t left_site) {
  return expect_two(state, kron(op_a, op_b), left_site);
}

cplx expect_two(const MpsState& state, const Eigen::Matrix4cd& op, std::size_t left_site) {
  check_site(state, left_site);
  check_site(state, left_site + 1);
  const Eigen::MatrixXcd env = left_environment(state, left_site);
  const SiteTensor& a = state.site(left_site);
  const SiteTensor& b = state.site(left_site + 1);
  std::array<std::array<Eigen::MatrixXcd, 2>, 2> mid;
  for (int t = 0; t < 2; ++t) {
    for (int s = 0; s < 2; ++s) mid[t][s] = a.block[t].adjoint() * env * a.block[s];
  }
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(b.right_dim(), b.right_dim());
  for (int t = 0; t < 4; ++t) {
    for (int s = 0; s < 4; ++s) {
      if (op(t, s) == cplx(0.0)) continue;
      out.noalias() += op(t, s) * (b.block[t % 2].adjoint() * mid[t / 2][s / 2] * b.block[s % 2]);
    }
  }
  const cplx num = close_environment(state, out, left_site + 2);
  return num / overlap(state, state).real();
}

LocalExpectations local_expectations(const MpsState& state, const Eigen::Matrix2cd& op1,
                                     std::span<const Eigen::Matrix4cd> bond_ops) {
  const std::size_t n = state.size();
  if (n > 1 && bond_ops.size() != 1 && bond_ops.size() != n - 1) {
    throw InvalidInput("bond operator list must have one entry or one per bond");
  }
  LocalExpectations out;
  out.one_site.resize(n);
  out.two_site.resize(n > 0 ? n - 1 : 0);
  MpsState work = state;
  const bool sweep_right = !work.center() || *work.center() <= n / 2;
  work.move_center(sweep_right ? 0 : n - 1);
  const double norm2 = work.center_norm_squared();
  auto bond_op = [&](std::size_t b) -> const Eigen::Matrix4cd& {
    return bond_ops.size() == 1 ? bond_ops[0] : bond_ops[b];
  };
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t c = sweep_right ? step : n - 1 - step;
    out.one_site[c] = one_site_center_value(work, op1, c) / norm2;
    const bool has_bond = sweep_right ? c + 1 < n : c > 0;
    if (has_bond) {
      const std::size_t b = sweep_right ? c : c - 1;
      const Eigen::Matrix4cd& op = bond_op(b);
      const ThetaBlocks theta = theta_blocks(work, b, nonzero_pattern(op));
      out.two_site[b] = theta_expectation(theta, op) / norm2;
      work.move_center(sweep_right ? c + 1 : c - 1);
    }
  }
  return out;
}

std::vector<double> schmidt_values(const MpsState& state, std::size_t b) {
  if (state.size() < 2 || b + 1 >= state.size()) throw InvalidInput("bond index out of range");
  MpsState work = state;
  work.move_center(b);
  const BondSpace& left = work.bond_space(b);
  const BondSpace& right = work.bond_space(b + 1);
  const SiteTensor& a = work.site(b);
  std::vector<double> values;
  for (const Sector& rs : right.sectors()) {
    std::array<const Sector*, 2> rows{};
    Index m = 0;
    for (int s = 0; s < 2; ++s) {
      rows[s] = left.find(rs.charge - work.site_charge(s));
      if (rows[s]) m += rows[s]->dim;
    }
    if (m == 0) continue;
    Eigen::MatrixXcd mat(m, rs.dim);
    Index row = 0;
    for (int s = 0; s < 2; ++s) {
      if (!rows[s]) continue;
      mat.middleRows(row, rows[s]->dim) = a.block[s].block(rows[s]->offset, rs.offset, rows[s]->dim, rs.dim);
      row += rows[s]->dim;
    }
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(mat);
    for (Index j = 0; j < svd.singularValues().size(); ++j) values.push_back(svd.singularValues()(j));
  }
  std::sort(values.begin(), values.end(), std::greater<>());
  double total = 0.0;
  for (double v : values) total += v * v;
  for (double& v : values) v /= std::sqrt(total);
  return values;
}

double entanglement_entropy(const MpsState& state, std::size_t b) {
  double entropy = 0.0;
  for (double v : schmidt_values(state, b)) {
    const double p = v * v;
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return std::max(entropy, 0.0);
}

double canonical_form_error(const MpsState& state) {
  if (!state.center()) return std::numeric_limits<double>::infinity();
  const std::size_t c = *state.center();
  double worst = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (i == c) continue;
    const SiteTensor& a = state.site(i);
    Eigen::MatrixXcd gram;
    if (i < c) {
      gram = a.block[0].adjoint() * a.block[0] + a.block[1].adjoint() * a.block[1];
    } else {
      gram = a.block[0] * a.block[0].adjoint() + a.block[1] * a.block[1].adjoint();
    }
    gram -= Eigen::MatrixXcd::Identity(gram.rows(), gram.cols());
    worst = std::max(worst, gram.cwiseAbs().maxCoeff());
  }
  return worst;
}

namespace pauli {
Eigen::Matrix2cd identity() { return Eigen::Matrix2cd::Identity(); }
Eigen::Matrix2cd x() {
  Eigen::Matrix2cd m;
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}
Eigen::Matrix2cd y() {
  Eigen::Matrix2cd m;
  m << 0.0, cplx(0.0, -1.0), cplx(0.0, 1.0), 0.0;
  return m;
}
Eigen::Matrix2cd z() {
  Eigen::Matrix2cd m;
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}
}  // namespace pauli

Eigen::Matrix4cd kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  Eigen::Matrix4cd out;
  for (int t1 = 0; t1 < 2; ++t1) {
    for (int s1 = 0; s1 < 2; ++s1) {
      for (int t2 = 0; t2 < 2; ++t2) {
        for (int s2 = 0; s2 < 2; ++s2) out(2 * t1 + t2, 2 * s1 + s2) = a(t1, s1) * b(t2, s2);
      }
    }
  }
  return out;
}

}  // namespace xxz
