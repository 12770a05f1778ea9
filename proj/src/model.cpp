#include "xxz/model.hpp"

#include <cmath>
#include <sstream>

#include "xxz/error.hpp"

namespace xxz {

int ChainSpec::default_bath_length(int n_sys) { return (3 * n_sys + 1) / 2; }

ChainSpec ChainSpec::with_default_leads(int n_sys, double hopping, double u_bath, double u_sys) {
  ChainSpec spec{default_bath_length(n_sys), n_sys, hopping, u_bath, u_sys};
  spec.validate();
  return spec;
}

void ChainSpec::validate() const {
  if (n_bath < 1) throw InvalidInput("n_bath must be positive");
  if (n_sys < 1) throw InvalidInput("n_sys must be positive");
  if (!(hopping > 0.0)) throw InvalidInput("hopping J must be positive");
  if (!std::isfinite(u_bath) || !std::isfinite(u_sys)) throw InvalidInput("couplings must be finite");
  if (length() < 3) throw InvalidInput("chain length must be at least 3");
}

double bond_coupling(const ChainSpec& spec, int bond) {
  if (bond < 1 || bond > spec.length() - 1) {
    std::ostringstream msg;
    msg << "bond " << bond << " outside 1.." << spec.length() - 1;
    throw InvalidInput(msg.str());
  }
  if (bond <= spec.n_bath || bond >= spec.n_bath + spec.n_sys) return spec.u_bath;
  return spec.u_sys;
}

BondCouplings chain_couplings(const ChainSpec& spec) {
  spec.validate();
  BondCouplings c{spec.hopping, {}};
  for (int b = 1; b < spec.length(); ++b) c.zz.push_back(bond_coupling(spec, b));
  return c;
}

BondCouplings uniform_couplings(int n_sites, double hopping, double zz) {
  if (n_sites < 2) throw InvalidInput("need at least two sites");
  return {hopping, std::vector<double>(static_cast<std::size_t>(n_sites - 1), zz)};
}

Eigen::Matrix4cd two_site_term(double hopping, double zz) {
  const Eigen::Matrix2cd x = pauli::x();
  const Eigen::Matrix2cd y = pauli::y();
  const Eigen::Matrix2cd z = pauli::z();
  return hopping * (kron(x, x) + kron(y, y)) + zz * kron(z, z);
}

Eigen::Matrix4cd hermitian_exp(const Eigen::Matrix4cd& h, cplx factor) {
  std::array<int, 4> component{-1, -1, -1, -1};
  int n_components = 0;
  for (int start = 0; start < 4; ++start) {
    if (component[start] >= 0) continue;
    std::vector<int> stack{start};
    component[start] = n_components;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int w = 0; w < 4; ++w) {
        if (component[w] < 0 && (h(v, w) != cplx(0.0) || h(w, v) != cplx(0.0))) {
          component[w] = n_components;
          stack.push_back(w);
        }
      }
    }
    ++n_components;
  }
  Eigen::Matrix4cd out = Eigen::Matrix4cd::Zero();
  for (int c = 0; c < n_components; ++c) {
    std::vector<int> idx;
    for (int v = 0; v < 4; ++v) {
      if (component[v] == c) idx.push_back(v);
    }
    const auto n = static_cast<Index>(idx.size());
    Eigen::MatrixXcd sub(n, n);
    for (Index a = 0; a < n; ++a) {
      for (Index b = 0; b < n; ++b) sub(a, b) = h(idx[a], idx[b]);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(sub);
    Eigen::VectorXcd phases(n);
    for (Index k = 0; k < n; ++k) phases(k) = std::exp(factor * eig.eigenvalues()(k));
    const Eigen::MatrixXcd block = eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
    for (Index a = 0; a < n; ++a) {
      for (Index b = 0; b < n; ++b) out(idx[a], idx[b]) = block(a, b);
    }
  }
  return out;
}

GateSchedule trotter_schedule(const BondCouplings& couplings, double dt, TimeMode mode) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("time step must be positive and finite");
  if (couplings.zz.empty()) throw InvalidInput("need at least one bond");
  const cplx unit = mode == TimeMode::real ? cplx(0.0, -1.0) : cplx(-1.0, 0.0);
  auto layer = [&](int parity, double fraction) {
    GateLayer out;
    for (int b = parity; b <= static_cast<int>(couplings.zz.size()); b += 2) {
      out.bonds.push_back(b);
      const Eigen::Matrix4cd h = two_site_term(couplings.hopping, couplings.zz[b - 1]);
      out.gates.push_back(hermitian_exp(h, unit * (dt * fraction)));
    }
    return out;
  };
  GateSchedule schedule;
  schedule.dt = dt;
  schedule.mode = mode;
  schedule.layers.push_back(layer(1, 0.5));
  GateLayer even = layer(2, 1.0);
  if (!even.bonds.empty()) schedule.layers.push_back(std::move(even));
  schedule.layers.push_back(layer(1, 0.5));
  return schedule;
}

GateSchedule trotter_schedule(const ChainSpec& spec, double dt, TimeMode mode) {
  return trotter_schedule(chain_couplings(spec), dt, mode);
}

}  // namespace xxz
