#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gtest/gtest.h"
#include "xxz/error.hpp"
#include "xxz/evolution.hpp"
#include "xxz/groundstate.hpp"
#include "xxz/observables.hpp"
#include "xxz/oracle.hpp"

using namespace xxz;

namespace {

const TruncParams kTight{256, 1e-14};

MpsState ground(int n, double u) { return find_ground_state(n, 1.0, u, kTight, 1e-12).state; }

// Dense reference trajectory sampled every `every` time units.
Trajectory dense_trajectory(const oracle::DenseState& psi0, const BondCouplings& c, double every, int n_records) {
  const oracle::SectorSpectrum sp(c);
  Trajectory traj;
  traj.hopping = c.hopping;
  for (int k = 0; k < n_records; ++k) {
    const double t = every * k;
    const oracle::DenseState psi = sp.evolve(psi0, t);
    traj.times.push_back(t);
    traj.z_profiles.push_back(oracle::dense_z_profile(psi));
    std::vector<double> q;
    for (std::size_t i = 0; i + 1 < c.n_sites(); ++i) q.push_back(oracle::dense_current(psi, c.hopping, i));
    traj.currents.push_back(q);
    traj.norms.push_back(psi.amplitudes().norm());
    traj.discarded_weights.push_back(0.0);
    traj.total_z.push_back(0.0);
    traj.max_bonds.push_back(0);
  }
  return traj;
}

double max_z_error(const Trajectory& a, const Trajectory& b) {
  double err = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (std::size_t i = 0; i < a.z_profiles[k].size(); ++i) {
      err = std::max(err, std::abs(a.z_profiles[k][i] - b.z_profiles[k][i]));
    }
  }
  return err;
}

// TEBD vs dense on the N_B=2, N_S=4, U=0 chain (L=8), records every 0.2 up to t=2.
double l8_error(double dt) {
  const ChainSpec spec{2, 4, 1.0, 0.0, 0.0};
  const MpsState psi = initial_state(spec, ground(4, 0.0));
  RunParams p;
  p.dt = dt;
  p.t_max = 2.0;
  p.trunc = TruncParams::exact();
  p.record_stride = static_cast<int>(std::lround(0.2 / dt));
  const Trajectory tebd = evolve(psi, spec, p).trajectory;
  const Trajectory ref = dense_trajectory(oracle::to_dense(psi), chain_couplings(spec), 0.2, 11);
  EXPECT_EQ(tebd.size(), ref.size());
  return max_z_error(tebd, ref);
}

double tebd_continuity(double dt) {
  const ChainSpec spec{3, 4, 1.0, 0.5, 1.3};
  RunParams p;
  p.dt = dt;
  p.t_max = 2.0;
  p.trunc = TruncParams::exact();
  p.record_stride = 1;
  const Trajectory traj = evolve(initial_state(spec, ground(4, 1.3)), spec, p).trajectory;
  return continuity_residual(traj).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(GroundState, TwoSitesIsSinglet) {
  const GroundStateResult r = find_ground_state(2, 1.0, 0.0, TruncParams{});
  EXPECT_NEAR(r.energy, -2.0, 1e-10);
  EXPECT_TRUE(r.converged);
}

TEST(GroundState, EightSitesMatchesExactDiagonalization) {
  const GroundStateResult r = find_ground_state(8, 1.0, 0.5, kTight, 1e-12);
  const oracle::SectorSpectrum sp(uniform_couplings(8, 1.0, 0.5));
  const double e0 = sp.ground_energy();
  EXPECT_LT(std::abs(r.energy - e0) / std::abs(e0), 1e-8);
  EXPECT_NEAR(sp.ground_energy(4), e0, 1e-12);
  ASSERT_TRUE(sp.ground_is_unique(4));
  const Eigen::VectorXcd exact = sp.ground_vector(4);
  const double ov = std::abs(exact.dot(oracle::to_dense(r.state).amplitudes()));
  EXPECT_GT(ov, 1.0 - 1e-8);
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(r.monotone);
  double total = 0.0;
  for (std::size_t i = 0; i < 8; ++i) total += expect_one(r.state, pauli::z(), i);
  EXPECT_NEAR(total, 0.0, 1e-8);
  EXPECT_NEAR(chain_energy(r.state, 1.0, 0.5), r.energy, 1e-12);
  EXPECT_LT(r.variance_estimate, 1e-6);
}

TEST(GroundState, TenSiteXxChainMatchesFreeFermions) {
  const GroundStateResult r = find_ground_state(10, 1.0, 0.0, kTight, 1e-13);
  EXPECT_NEAR(r.energy, oracle::xx_ground_energy(10, 1.0), 1e-10);
}

TEST(GroundState, RungEnergiesDescend) {
  const GroundStateResult r = find_ground_state(6, 1.0, 1.3, kTight);
  ASSERT_GE(r.rung_energies.size(), 3u);
  for (std::size_t k = 1; k < r.rung_energies.size(); ++k) {
    EXPECT_LE(r.rung_energies[k], r.rung_energies[k - 1] + 1e-12);
  }
}

TEST(GroundState, ExtraRungAddedOnEarlyPlateau) {
  GroundStateOptions opts;
  opts.dbeta_ladder = {0.1, 0.01};
  const GroundStateResult loose = find_ground_state(4, 1.0, 1.3, kTight, 1e-3, opts);
  EXPECT_EQ(loose.rung_energies.size(), 3u);
  opts.extra_rung = 0.0;
  EXPECT_EQ(find_ground_state(4, 1.0, 1.3, kTight, 1e-3, opts).rung_energies.size(), 2u);
}

TEST(GroundState, NonConvergenceReported) {
  GroundStateOptions opts;
  opts.max_steps_per_rung = 2;
  const GroundStateResult r = find_ground_state(8, 1.0, 0.5, kTight, 1e-10, opts);
  EXPECT_FALSE(r.converged);
}

TEST(GroundState, Preconditions) {
  EXPECT_THROW(find_ground_state(1, 1.0, 0.0, kTight), InvalidInput);
  EXPECT_THROW(find_ground_state(5, 1.0, 0.0, kTight), InvalidInput);
  GroundStateOptions opts;
  opts.allow_odd = true;
  const GroundStateResult r = find_ground_state(5, 1.0, 0.5, kTight, 1e-12, opts);
  EXPECT_NEAR(r.energy, oracle::SectorSpectrum(uniform_couplings(5, 1.0, 0.5)).ground_energy(2), 1e-8);
}

TEST(Junctions, Indices) {
  EXPECT_EQ(junction_indices(ChainSpec{3, 4, 1.0, 0, 0}), std::make_pair(3, 7));
  EXPECT_EQ(junction_indices(ChainSpec{1, 2, 1.0, 0, 0}), std::make_pair(1, 3));
  EXPECT_EQ(junction_indices(ChainSpec::with_default_leads(20, 1.0, 0, 0)), std::make_pair(30, 50));
}

TEST(InitialState, LeadsPolarizedAndSystemBalanced) {
  const ChainSpec spec{2, 2, 1.0, 0.0, 0.0};
  const MpsState psi = initial_state(spec, ground(2, 0.0));
  ASSERT_EQ(psi.size(), 6u);
  EXPECT_NEAR(norm(psi), 1.0, 1e-14);
  EXPECT_NEAR(expect_one(psi, pauli::z(), 0), 1.0, 1e-14);
  EXPECT_NEAR(expect_one(psi, pauli::z(), 1), 1.0, 1e-14);
  EXPECT_NEAR(expect_one(psi, pauli::z(), 4), -1.0, 1e-14);
  EXPECT_NEAR(expect_one(psi, pauli::z(), 5), -1.0, 1e-14);
  EXPECT_NEAR(expect_one(psi, pauli::z(), 2) + expect_one(psi, pauli::z(), 3), 0.0, 1e-12);
  EXPECT_LT(canonical_form_error(psi), 1e-12);
}

TEST(InitialState, ZeroTotalMagnetizationAndCurrents) {
  const ChainSpec spec{3, 4, 1.0, 0.5, 1.3};
  const MpsState psi = initial_state(spec, ground(4, 1.3));
  const Profiles p = measure_profiles(psi, 1.0);
  EXPECT_NEAR(std::accumulate(p.z.begin(), p.z.end(), 0.0), 0.0, 1e-10);
  const oracle::DenseState dense = oracle::to_dense(psi);
  for (std::size_t i = 0; i + 1 < psi.size(); ++i) {
    EXPECT_NEAR(oracle::dense_current(dense, 1.0, i), 0.0, 1e-12);
    EXPECT_NEAR(p.currents[i], 0.0, 1e-12);
  }
}

TEST(InitialState, LengthMismatch) {
  EXPECT_THROW(initial_state(ChainSpec{2, 4, 1.0, 0, 0}, ground(2, 0.0)), InvalidInput);
}

TEST(Evolve, MatchesDenseEvolutionWithSecondOrderError) {
  const double e1 = l8_error(0.05);
  const double e2 = l8_error(0.025);
  EXPECT_LT(e1, 5e-3);
  EXPECT_LT(e2, 1.3e-3);
  const double e0 = l8_error(0.1);
  EXPECT_NEAR(std::log2(e0 / e1), 2.0, 0.2);
  EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.2);
}

TEST(Evolve, ConservesMagnetizationAndNorm) {
  const ChainSpec spec{6, 4, 1.0, 0.5, 1.3};
  RunParams p;
  p.t_max = 3.0;
  p.trunc = TruncParams{32, 1e-10};
  const EvolutionResult r = evolve(initial_state(spec, ground(4, 1.3)), spec, p);
  const Trajectory& tj = r.trajectory;
  EXPECT_NO_THROW(tj.validate());
  EXPECT_EQ(tj.size(), 16u);
  EXPECT_NEAR(tj.times.back(), 3.0, 1e-12);
  for (std::size_t k = 0; k < tj.size(); ++k) {
    EXPECT_NEAR(tj.total_z[k], 0.0, 1e-10);
    EXPECT_NEAR(tj.norms[k], 1.0, 1e-10);
    EXPECT_LE(tj.max_bonds[k], 32);
  }
  EXPECT_EQ(r.final_state.size(), 16u);
  EXPECT_FALSE(tj.quality_warning);
  EXPECT_TRUE(std::isfinite(tj.continuity_residual_max));
}

TEST(Evolve, LightCone) {
  // 8J is twice the largest group velocity of the hopping band 4J cos k.
  const ChainSpec spec{12, 4, 1.0, 0.5, 0.5};
  RunParams p;
  p.t_max = 2.5;
  p.trunc = TruncParams{64, 1e-12};
  p.record_stride = 1;
  const Trajectory tj = evolve(initial_state(spec, ground(4, 0.5)), spec, p).trajectory;
  int checked = 0;
  for (int x = 1; x <= 11; ++x) {
    const int i = spec.n_bath - 1 - x;
    const int mirror = spec.length() - 1 - i;
    for (std::size_t k = 0; k < tj.size() && tj.times[k] < x / 8.0; ++k) {
      EXPECT_LT(std::abs(tj.z_profiles[k][i] - tj.z_profiles[0][i]), 1e-3) << x << " " << tj.times[k];
      EXPECT_LT(std::abs(tj.z_profiles[k][mirror] - tj.z_profiles[0][mirror]), 1e-3);
      ++checked;
    }
  }
  EXPECT_GT(checked, 50);
}

TEST(Evolve, ReflectionAntisymmetry) {
  const ChainSpec spec{6, 4, 1.0, 0.5, 1.3};
  RunParams p;
  p.t_max = 2.0;
  p.trunc = TruncParams{128, 1e-12};
  const Trajectory tj = evolve(initial_state(spec, ground(4, 1.3)), spec, p).trajectory;
  const std::size_t n = tj.n_sites();
  for (std::size_t k = 0; k < tj.size(); ++k) {
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(tj.z_profiles[k][i], -tj.z_profiles[k][n - 1 - i], 1e-8);
    for (std::size_t b = 0; b + 1 < n; ++b) EXPECT_NEAR(tj.currents[k][b], tj.currents[k][n - 2 - b], 1e-8);
  }
}

TEST(Evolve, InsulatingJunctionCurrentCollapses) {
  const ChainSpec spec = ChainSpec::with_default_leads(8, 1.0, 0.5, 1.3);
  RunParams p;
  p.t_max = 6.0;
  p.trunc = TruncParams{64, 1e-10};
  const Trajectory tj = evolve(initial_state(spec, ground(8, 1.3)), spec, p).trajectory;
  const CurrentSeries cs = current_series(tj, spec);
  double early = 0.0;
  double late = 0.0;
  int n_late = 0;
  for (std::size_t k = 0; k < cs.times.size(); ++k) {
    if (cs.times[k] <= 1.5) early = std::max(early, cs.q_junction[k]);
    if (cs.times[k] >= 4.5) {
      late += std::abs(cs.q_junction[k]);
      ++n_late;
    }
  }
  late /= n_late;
  EXPECT_GT(early, 0.5);
  EXPECT_LT(late, 0.3 * early);
}

TEST(Evolve, QualityWarningOnHeavyTruncation) {
  const ChainSpec spec{6, 4, 1.0, 0.5, 0.5};
  RunParams p;
  p.t_max = 3.0;
  p.trunc = TruncParams{2, 1e-10};
  p.discard_alarm = 1e-4;
  const Trajectory tj = evolve(initial_state(spec, ground(4, 0.5)), spec, p).trajectory;
  EXPECT_TRUE(tj.quality_warning);
  EXPECT_GT(tj.discarded_weights.back(), 1e-4);
  EXPECT_NEAR(tj.norms.back(), 1.0, 1e-10);
}

TEST(Evolve, ResumeFromCheckpointIsBitIdentical) {
  const ChainSpec spec{4, 4, 1.0, 0.5, 1.3};
  const MpsState psi = initial_state(spec, ground(4, 1.3));
  RunParams p;
  p.t_max = 1.5;
  p.trunc = TruncParams{16, 1e-10};
  std::optional<EvolutionCheckpoint> saved;
  EvolveHooks hooks;
  hooks.checkpoint_interval_s = 1e-12;
  hooks.on_checkpoint = [&](const EvolutionCheckpoint& c) {
    if (c.step == 13) saved = c;
  };
  const EvolutionResult full = evolve(psi, spec, p, hooks);
  ASSERT_TRUE(saved.has_value());
  const EvolutionResult resumed = evolve(psi, spec, p, {}, saved);
  EXPECT_TRUE(resumed.trajectory == full.trajectory);
  EXPECT_EQ(oracle::to_dense(resumed.final_state).amplitudes(), oracle::to_dense(full.final_state).amplitudes());
}

TEST(Evolve, RecordHookSeesEveryRecord) {
  const ChainSpec spec{2, 2, 1.0, 0.0, 0.0};
  RunParams p;
  p.t_max = 1.0;
  p.record_stride = 5;
  std::vector<std::size_t> sizes;
  EvolveHooks hooks;
  hooks.on_record = [&](const Trajectory& t) { sizes.push_back(t.size()); };
  evolve(initial_state(spec, ground(2, 0.0)), spec, p, hooks);
  EXPECT_EQ(sizes, (std::vector<std::size_t>{1, 2, 3, 4, 5}));
}

TEST(RunParamsTest, Validation) {
  RunParams p;
  EXPECT_EQ(p.n_steps(), 20);
  p.t_max = 0.45 * 12;
  EXPECT_EQ(p.n_steps(), 108);
  p.dt = 0.0;
  EXPECT_THROW(p.validate(), InvalidInput);
  p.dt = 0.05;
  p.record_stride = 0;
  EXPECT_THROW(p.validate(), InvalidInput);
}

TEST(Current, ProductStatesCarryNone) {
  const ChainSpec spec{1, 2, 1.0, 0.0, 0.0};
  const std::vector<Spin> up(4, Spin::up);
  const std::vector<Spin> neel{Spin::up, Spin::down, Spin::up, Spin::down};
  for (int b = 1; b <= 3; ++b) {
    EXPECT_EQ(current(product_state(up), spec, b), 0.0);
    EXPECT_EQ(current(product_state(neel), spec, b), 0.0);
  }
  EXPECT_THROW(current(product_state(up), spec, 0), InvalidInput);
  EXPECT_THROW(current(product_state(up), spec, 4), InvalidInput);
}

TEST(Current, PhasedPairMatchesBruteForce) {
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(4);
  v(1) = 1.0 / std::sqrt(2.0);
  v(2) = cplx(0.0, 1.0 / std::sqrt(2.0));
  const Eigen::Matrix4cd q = 2.0 * (kron(pauli::x(), pauli::y()) - kron(pauli::y(), pauli::x()));
  const cplx brute = v.dot(q * v);
  EXPECT_NEAR(brute.imag(), 0.0, 1e-15);
  const MpsState pair = oracle::from_dense(oracle::DenseState(v));
  const ChainSpec spec{1, 2, 1.0, 0.0, 0.0};
  EXPECT_NEAR(current(initial_state(spec, pair), spec, 2), brute.real(), 1e-14);
  EXPECT_EQ(current_operator(), q / 2.0);
}

TEST(Current, MidBondConvention) {
  EXPECT_EQ(mid_bond(ChainSpec{3, 4, 1.0, 0, 0}), 5);
  EXPECT_EQ(mid_bond(ChainSpec{30, 20, 1.0, 0, 0}), 40);
  EXPECT_EQ(mid_bond(ChainSpec{2, 5, 1.0, 0, 0}), 4);
}

TEST(TransferredMagnetization, ZeroAndConstant) {
  const std::vector<double> t{0.0, 0.2, 0.4, 0.7, 1.0};
  const std::vector<double> zero(5, 0.0);
  for (double d : transferred_magnetization(t, zero)) EXPECT_EQ(d, 0.0);
  const std::vector<double> c(5, 1.7);
  const std::vector<double> dz = transferred_magnetization(t, c);
  for (std::size_t k = 0; k < t.size(); ++k) EXPECT_NEAR(dz[k], 1.7 * t[k], 1e-14);
  EXPECT_THROW(transferred_magnetization(std::vector<double>{0.0, 0.0}, std::vector<double>{1.0, 1.0}),
               InvalidInput);
}

TEST(CurrentSeriesTest, ColumnsAndCsv) {
  const ChainSpec spec{2, 2, 1.0, 0.0, 0.0};
  RunParams p;
  p.t_max = 1.0;
  p.record_stride = 2;
  const Trajectory tj = evolve(initial_state(spec, ground(2, 0.0)), spec, p).trajectory;
  const CurrentSeries cs = current_series(tj, spec);
  ASSERT_EQ(cs.times.size(), tj.size());
  EXPECT_EQ(cs.delta_z.front(), 0.0);
  for (std::size_t k = 0; k < tj.size(); ++k) {
    EXPECT_EQ(cs.q_junction[k], tj.currents[k][1]);
    EXPECT_EQ(cs.q_mid[k], tj.currents[k][2]);
  }
  // Transferred magnetization tracks the drop of the left-lead magnetization.
  const double lead_drop = 2.0 - (tj.z_profiles.back()[0] + tj.z_profiles.back()[1]);
  EXPECT_NEAR(cs.delta_z.back(), lead_drop, 2e-2);

  std::ostringstream out;
  write_current_series_csv(out, cs);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "t,Q,Q_m,dZ");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, static_cast<int>(tj.size()));
}

TEST(Continuity, EigenstateHasNoResidual) {
  const BondCouplings c = uniform_couplings(6, 1.0, 0.5);
  const oracle::SectorSpectrum sp(c);
  const oracle::DenseState g(sp.ground_vector(3));
  RunParams p;
  p.t_max = 1.0;
  p.record_stride = 1;
  p.trunc = TruncParams::exact();
  const Trajectory tj = evolve(oracle::from_dense(g), c, p).trajectory;
  EXPECT_LT(continuity_residual(tj).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Continuity, ExactDenseTrajectoryResidualIsSecondOrder) {
  const BondCouplings c = uniform_couplings(6, 1.0, 0.5);
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(64);
  v(0b000111) = 1.0;
  const oracle::DenseState psi(v);
  const Eigen::MatrixXd a = continuity_residual(dense_trajectory(psi, c, 0.05, 41));
  const Eigen::MatrixXd b = continuity_residual(dense_trajectory(psi, c, 0.025, 81));
  EXPECT_LT(a.cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_NEAR(a.cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff(), 16.0, 2.0);
}

TEST(Continuity, TebdResidualIsSecondOrderInDt) {
  const double r1 = tebd_continuity(0.05);
  const double r2 = tebd_continuity(0.025);
  EXPECT_LT(r1, 1e-2);
  EXPECT_LT(r2, 2e-3);
  EXPECT_GT(r1 / r2, 3.0);
  EXPECT_LT(r1 / r2, 5.0);
}

TEST(Continuity, ShapeAndValidation) {
  Trajectory tj;
  EXPECT_EQ(continuity_residual(tj).size(), 0);
  tj.times = {0.0, 1.0};
  EXPECT_THROW(continuity_residual(tj), InvalidInput);
}
