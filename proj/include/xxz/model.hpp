#pragma once

#include <vector>

#include <Eigen/Dense>

#include "xxz/mps.hpp"

namespace xxz {

// Tripartite chain: n_bath lead sites, n_sys system sites, n_bath lead sites.
// Couplings are in units of the hopping J.
struct ChainSpec {
  int n_bath = 0;
  int n_sys = 0;
  double hopping = 1.0;
  double u_bath = 0.0;
  double u_sys = 0.0;

  // Leads of length ceil(1.5 * n_sys).
  static ChainSpec with_default_leads(int n_sys, double hopping, double u_bath, double u_sys);
  static int default_bath_length(int n_sys);

  int length() const { return 2 * n_bath + n_sys; }
  void validate() const;
  bool operator==(const ChainSpec&) const = default;
};

// ZZ coupling on bond i (1-based; bond i joins sites i and i+1, 1 <= i <= L-1).
// Lead value for i <= n_bath or i >= n_bath + n_sys, system value otherwise.
double bond_coupling(const ChainSpec& spec, int bond);

// Per-bond couplings of an open chain; zz[b] belongs to 1-based bond b+1.
struct BondCouplings {
  double hopping = 1.0;
  std::vector<double> zz;

  std::size_t n_sites() const { return zz.size() + 1; }
};

BondCouplings chain_couplings(const ChainSpec& spec);
BondCouplings uniform_couplings(int n_sites, double hopping, double zz);

// J (X⊗X + Y⊗Y) + U Z⊗Z in the basis (up-up, up-down, down-up, down-down).
Eigen::Matrix4cd two_site_term(double hopping, double zz);

// exp(factor * h) for Hermitian h, by eigendecomposition of each connected
// block of h's sparsity pattern so structurally zero entries stay exactly 0.
Eigen::Matrix4cd hermitian_exp(const Eigen::Matrix4cd& h, cplx factor);

enum class TimeMode { real, imaginary };

struct GateLayer {
  std::vector<int> bonds;  // 1-based, non-overlapping, ascending
  std::vector<Eigen::Matrix4cd> gates;
};

// One second-order step: odd bonds dt/2, even bonds dt, odd bonds dt/2.
struct GateSchedule {
  std::vector<GateLayer> layers;
  double dt = 0.0;
  int order = 2;
  TimeMode mode = TimeMode::real;
};

GateSchedule trotter_schedule(const BondCouplings& couplings, double dt, TimeMode mode);
GateSchedule trotter_schedule(const ChainSpec& spec, double dt, TimeMode mode);

}  // namespace xxz
