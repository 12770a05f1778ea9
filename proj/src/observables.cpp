#include "xxz/observables.hpp"

#include <iomanip>
#include <ostream>

#include "xxz/error.hpp"

namespace xxz {

Eigen::Matrix4cd current_operator() {
  return kron(pauli::x(), pauli::y()) - kron(pauli::y(), pauli::x());
}

double current(const MpsState& state, const ChainSpec& spec, int bond) {
  if (static_cast<std::size_t>(spec.length()) != state.size()) throw InvalidInput("state does not match chain");
  if (bond < 1 || bond > spec.length() - 1) throw InvalidInput("bond index out of range");
  const cplx v = expect_two(state, current_operator(), static_cast<std::size_t>(bond - 1));
  return 2.0 * spec.hopping * v.real();
}

Profiles measure_profiles(const MpsState& state, double hopping) {
  const Eigen::Matrix4cd op = current_operator();
  const LocalExpectations e = local_expectations(state, pauli::z(), std::span(&op, 1));
  Profiles p;
  p.z.reserve(e.one_site.size());
  for (const cplx& v : e.one_site) p.z.push_back(v.real());
  p.currents.reserve(e.two_site.size());
  for (const cplx& v : e.two_site) p.currents.push_back(2.0 * hopping * v.real());
  return p;
}

int mid_bond(const ChainSpec& spec) { return spec.n_bath + spec.n_sys / 2; }

std::vector<double> transferred_magnetization(std::span<const double> times, std::span<const double> q) {
  if (times.size() != q.size()) throw InvalidInput("times and values differ in length");
  std::vector<double> out(times.size(), 0.0);
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double h = times[k] - times[k - 1];
    if (!(h > 0.0)) throw InvalidInput("times must be strictly increasing");
    out[k] = out[k - 1] + 0.5 * h * (q[k] + q[k - 1]);
  }
  return out;
}

CurrentSeries current_series(const Trajectory& traj, const ChainSpec& spec) {
  if (traj.n_sites() != static_cast<std::size_t>(spec.length())) throw InvalidInput("trajectory does not match chain");
  CurrentSeries s;
  s.times = traj.times;
  const auto junction = static_cast<std::size_t>(spec.n_bath - 1);
  const auto mid = static_cast<std::size_t>(mid_bond(spec) - 1);
  for (const auto& row : traj.currents) {
    s.q_junction.push_back(row[junction]);
    s.q_mid.push_back(row[mid]);
  }
  s.delta_z = transferred_magnetization(s.times, s.q_junction);
  return s;
}

void write_current_series_csv(std::ostream& out, const CurrentSeries& series) {
  out << "t,Q,Q_m,dZ\n" << std::setprecision(17);
  for (std::size_t k = 0; k < series.times.size(); ++k) {
    out << series.times[k] << ',' << series.q_junction[k] << ',' << series.q_mid[k] << ',' << series.delta_z[k]
        << '\n';
  }
}

Eigen::MatrixXd continuity_residual(const Trajectory& traj) {
  traj.validate();
  const std::size_t n = traj.n_sites();
  const std::size_t m = traj.size();
  if (m < 3) return Eigen::MatrixXd(0, static_cast<Index>(n));
  const auto& t = traj.times;
  const auto& z = traj.z_profiles;
  bool uniform = m >= 5;
  for (std::size_t j = 1; uniform && j + 1 < m; ++j) {
    uniform = std::abs((t[j + 1] - t[j]) - (t[1] - t[0])) <= 1e-9 * (t[1] - t[0]);
  }
  const double h = t[1] - t[0];
  Eigen::MatrixXd res(static_cast<Index>(m - 2), static_cast<Index>(n));
  for (std::size_t k = 1; k + 1 < m; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      double dz = 0.0;
      if (!uniform) {
        dz = (z[k + 1][i] - z[k - 1][i]) / (t[k + 1] - t[k - 1]);
      } else if (k == 1) {
        dz = (-3.0 * z[0][i] - 10.0 * z[1][i] + 18.0 * z[2][i] - 6.0 * z[3][i] + z[4][i]) / (12.0 * h);
      } else if (k + 2 == m) {
        dz = (3.0 * z[m - 1][i] + 10.0 * z[m - 2][i] - 18.0 * z[m - 3][i] + 6.0 * z[m - 4][i] - z[m - 5][i]) /
             (12.0 * h);
      } else {
        dz = (z[k - 2][i] - 8.0 * z[k - 1][i] + 8.0 * z[k + 1][i] - z[k + 2][i]) / (12.0 * h);
      }
      const double in = i > 0 ? traj.currents[k][i - 1] : 0.0;
      const double out = i + 1 < n ? traj.currents[k][i] : 0.0;
      res(static_cast<Index>(k - 1), static_cast<Index>(i)) = dz - (in - out);
    }
  }
  return res;
}

}  // namespace xxz
