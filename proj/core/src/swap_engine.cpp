#include "qfuse/swap_engine.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace qfuse {

namespace {

BellKind bell_of(BsmOutcome outcome) {
  return outcome == BsmOutcome::PsiMinus ? BellKind::PsiMinus
                                         : BellKind::PsiPlus;
}

std::vector<int> surviving_channels(const PumpSchedule& plan, int bsm_channel) {
  std::vector<int> out;
  for (const ItuChannel& ch : plan.channels)
    if (ch.channel_number != bsm_channel) out.push_back(ch.channel_number);
  return out;
}

const DensityMatrix& input_state(const std::map<int, DensityMatrix>& states,
                                 int channel, const std::string& side) {
  auto it = states.find(channel);
  if (it == states.end())
    throw std::invalid_argument("missing input state for " + side + " CH" +
                                std::to_string(channel));
  if (it->second.qubit_count() != 2)
    throw std::invalid_argument("input state for " + side + " CH" +
                                std::to_string(channel) +
                                " must be a 2-qubit (signal, idler) state");
  return it->second;
}

}  // namespace

DetectorPattern DetectorPattern::of(std::initializer_list<BsmDetector> clicks) {
  DetectorPattern p;
  for (BsmDetector d : clicks) {
    switch (d) {
      case BsmDetector::H1:
        p.h1 = true;
        break;
      case BsmDetector::V1:
        p.v1 = true;
        break;
      case BsmDetector::H2:
        p.h2 = true;
        break;
      case BsmDetector::V2:
        p.v2 = true;
        break;
    }
  }
  return p;
}

const char* to_string(BsmOutcome outcome) {
  switch (outcome) {
    case BsmOutcome::PsiMinus:
      return "psi_minus";
    case BsmOutcome::PsiPlus:
      return "psi_plus";
    case BsmOutcome::Inconclusive:
      return "inconclusive";
  }
  return "unknown";
}

BsmOutcome classify_pattern(const DetectorPattern& pattern) {
  if (pattern.click_count() != 2) return BsmOutcome::Inconclusive;
  if ((pattern.h1 && pattern.v2) || (pattern.v1 && pattern.h2))
    return BsmOutcome::PsiMinus;
  if ((pattern.h1 && pattern.v1) || (pattern.h2 && pattern.v2))
    return BsmOutcome::PsiPlus;
  return BsmOutcome::Inconclusive;  // same-polarization clicks: H1&H2, V1&V2
}

std::pair<double, DensityMatrix> swapped_state(const DensityMatrix& rho_a,
                                               const DensityMatrix& rho_b,
                                               BsmOutcome outcome, double xi) {
  if (outcome == BsmOutcome::Inconclusive)
    throw std::invalid_argument("cannot compute a swapped state for an "
                                "inconclusive heralding");
  if (rho_a.qubit_count() != 2 || rho_b.qubit_count() != 2)
    throw std::invalid_argument("swap inputs must be 2-qubit states");
  if (xi < 0.0 || xi > 1.0)
    throw std::invalid_argument("mode overlap xi must lie in [0, 1]");

  // Joint order: (signal_a, idler_a, signal_b, idler_b); the idlers meet
  // at the swap station.
  const DensityMatrix joint = tensor(rho_a, rho_b);
  auto [p, ideal] = project_and_trace(joint, bell_of(outcome), {1, 3});
  if (xi == 1.0) return {p, std::move(ideal)};

  Matrix mixed = xi * ideal.matrix();
  for (Eigen::Index i = 0; i < ideal.dim(); ++i)
    mixed(i, i) += (1.0 - xi) * ideal.matrix()(i, i);
  return {p, DensityMatrix::from_matrix(std::move(mixed))};
}

double fringe_visibility_analytic(const DensityMatrix& state,
                                  const AnalyzerSetting& analyzer_a) {
  if (state.qubit_count() != 2)
    throw std::invalid_argument("fringe analysis needs a 2-qubit state");
  const Matrix pa = analyzer_projector(analyzer_a);
  Matrix sz = Matrix::Zero(2, 2);
  sz(0, 0) = 1.0;
  sz(1, 1) = -1.0;
  Matrix sx = Matrix::Zero(2, 2);
  sx(0, 1) = 1.0;
  sx(1, 0) = 1.0;
  const Matrix eye = Matrix::Identity(2, 2);

  auto kron2 = [](const Matrix& a, const Matrix& b) {
    Matrix out(4, 4);
    for (Eigen::Index i = 0; i < 2; ++i)
      for (Eigen::Index j = 0; j < 2; ++j)
        out.block(2 * i, 2 * j, 2, 2) = a(i, j) * b;
    return out;
  };

  // A half-wave plate at angle t in front of the partner's PBS projects
  // onto (cos 2t, sin 2t), so the coincidence rate is
  //   R(t) = (T_I + T_z cos 4t + T_x sin 4t) / 2.
  const double t_i = expectation(state, kron2(pa, eye));
  const double t_z = expectation(state, kron2(pa, sz));
  const double t_x = expectation(state, kron2(pa, sx));
  if (t_i <= kAlgebraTol)
    throw std::domain_error(
        "fringe visibility undefined: analyzer never passes light");
  return std::hypot(t_z, t_x) / t_i;
}

FusionReport run_fusion(const PumpSchedule& plan_a, const PumpSchedule& plan_b,
                        const std::vector<AlignmentSetting>& alignment,
                        const SwapConfig& config,
                        const std::map<int, DensityMatrix>& states_a,
                        const std::map<int, DensityMatrix>& states_b,
                        int bsm_channel) {
  if (config.outcome_filter == BsmOutcome::Inconclusive)
    throw std::invalid_argument("outcome filter must be a conclusive outcome");
  if (config.trials < 0)
    throw std::invalid_argument("trials must be >= 0");
  if (plan_a.network_id == plan_b.network_id)
    throw std::invalid_argument("fused networks need distinct network ids");
  auto has_channel = [](const PumpSchedule& plan, int ch) {
    for (const ItuChannel& c : plan.channels)
      if (c.channel_number == ch) return true;
    return false;
  };
  if (!has_channel(plan_a, bsm_channel) || !has_channel(plan_b, bsm_channel))
    throw std::invalid_argument("both networks must include the swap channel "
                                "CH" + std::to_string(bsm_channel));

  const std::vector<int> users_a = surviving_channels(plan_a, bsm_channel);
  const std::vector<int> users_b = surviving_channels(plan_b, bsm_channel);

  // The alignment schedule must touch every cross pair exactly once.
  std::map<std::pair<int, int>, int> setting_of;
  for (const AlignmentSetting& setting : alignment)
    for (const auto& pair : setting.overlaps) {
      if (setting_of.count(pair))
        throw CoverageError("cross pair (CH" + std::to_string(pair.first) +
                            ", CH" + std::to_string(pair.second) +
                            ") is covered by more than one setting");
      setting_of[pair] = setting.setting_index;
    }
  std::ostringstream missing;
  int missing_count = 0;
  for (int a : users_a)
    for (int b : users_b)
      if (!setting_of.count({a, b})) {
        missing << (missing_count++ ? ", " : "") << "(CH" << a << ", CH" << b
                << ")";
      }
  if (missing_count > 0)
    throw CoverageError("alignment schedule misses " +
                        std::to_string(missing_count) + " cross pair(s): " +
                        missing.str());

  FusionReport report;
  report.pairs.reserve(users_a.size() * users_b.size());
  double sum_vda = 0.0;
  double sum_fid = 0.0;

  for (int a : users_a) {
    const DensityMatrix& rho_a = input_state(states_a, a, plan_a.network_id);
    for (int b : users_b) {
      const DensityMatrix& rho_b = input_state(states_b, b, plan_b.network_id);
      double xi = config.mode_overlap_xi;
      if (auto it = config.xi_overrides.find({a, b});
          it != config.xi_overrides.end())
        xi = it->second;

      const DensityMatrix joint = tensor(rho_a, rho_b);
      const BellPairDistribution idler_weights =
          bell_decompose(joint, {1, 3}, {0, 2});
      double p_minus = 0.0;
      double p_plus = 0.0;
      for (BellKind partner : kAllBellKinds) {
        p_minus += idler_weights.at(BellKind::PsiMinus, partner);
        p_plus += idler_weights.at(BellKind::PsiPlus, partner);
      }
      const double p_inc = std::max(0.0, 1.0 - p_minus - p_plus);
      const std::int64_t c_minus = std::llround(p_minus * config.trials);
      const std::int64_t c_plus = std::llround(p_plus * config.trials);

      auto [p_branch, rho] =
          swapped_state(rho_a, rho_b, config.outcome_filter, xi);
      (void)p_branch;
      const double v_hv =
          fringe_visibility_analytic(rho, AnalyzerSetting(0.0, 0.0));
      const double v_da = fringe_visibility_analytic(
          rho, AnalyzerSetting(std::numbers::pi / 8.0, 0.0));
      const double fid = (3.0 * v_da + 1.0) / 4.0;
      const double state_fid = expectation(
          rho, bell_state(bell_of(config.outcome_filter)).matrix());

      sum_vda += v_da;
      sum_fid += fid;
      report.pairs.push_back(PairSwapRecord{
          a, b, setting_of.at({a, b}), p_minus, p_plus, p_inc, c_minus, c_plus,
          config.trials - c_minus - c_plus, xi, v_hv, v_da, fid, state_fid,
          std::move(rho)});
    }
  }

  std::sort(report.pairs.begin(), report.pairs.end(),
            [](const PairSwapRecord& lhs, const PairSwapRecord& rhs) {
              return std::pair{lhs.a_channel, lhs.b_channel} <
                     std::pair{rhs.a_channel, rhs.b_channel};
            });
  report.fused = fuse_topologies(plan_a, plan_b, bsm_channel, bsm_channel);
  const double n = static_cast<double>(report.pairs.size());
  if (n > 0) {
    report.mean_visibility_da = sum_vda / n;
    report.mean_fidelity = sum_fid / n;
  }
  return report;
}

nlohmann::ordered_json fusion_report_to_json(const FusionReport& report) {
  nlohmann::ordered_json j;
  j["pair_count"] = report.pairs.size();
  j["mean_visibility_da"] = report.mean_visibility_da;
  j["mean_fidelity"] = report.mean_fidelity;
  j["pairs"] = nlohmann::ordered_json::array();
  for (const PairSwapRecord& rec : report.pairs) {
    nlohmann::ordered_json p;
    p["a_channel"] = rec.a_channel;
    p["b_channel"] = rec.b_channel;
    p["setting_index"] = rec.setting_index;
    p["outcome_counts"] = {{"psi_minus", rec.count_psi_minus},
                           {"psi_plus", rec.count_psi_plus},
                           {"inconclusive", rec.count_inconclusive}};
    p["outcome_probabilities"] = {{"psi_minus", rec.p_psi_minus},
                                  {"psi_plus", rec.p_psi_plus},
                                  {"inconclusive", rec.p_inconclusive}};
    p["mode_overlap_xi"] = rec.xi;
    p["visibility_hv"] = rec.visibility_hv;
    p["visibility_da"] = rec.visibility_da;
    p["fidelity"] = rec.fidelity;
    p["state_fidelity"] = rec.state_fidelity;
    j["pairs"].push_back(std::move(p));
  }
  j["fused_topology"] = topology_to_json(report.fused);
  return j;
}

}  // namespace qfuse
