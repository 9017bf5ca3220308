#pragma once

#include "qfuse/atwm_plan.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace qfuse {

struct SourceParams {
  /// Mean pair number per pulse per pair process. The model is first
  /// order in mu and is only trusted up to 0.2.
  double mu = 0.01;
  double rep_rate_hz = 60e6;
};

struct DetectorParams {
  double efficiency = 0.7;
  double dark_rate_hz = 0.0;
  double jitter_sigma_ps = 0.0;
};

struct LinkParams {
  /// Aggregate fiber + mux + filter transmission per photon.
  double transmission = 1.0;
};

struct TimeTagStream {
  std::string detector_id;
  std::vector<std::int64_t> tags_ps;  // sorted, within [0, duration)
};

/// Gaussian coincidence dip R(tau)/R_t = 1 - v0 * exp(-(tau - tau0)^2 /
/// (2 sigma^2)) centered at the relative delay tau0.
struct HomModel {
  double max_visibility_v0 = 0.0;
  double dip_sigma_tau_ps = 1.0;
  double relative_delay_tau_ps = 0.0;
};

/// Runs the pulsed sources of one network for `duration_s` seconds and
/// returns the detected time tags per user channel. Every (slot, pair)
/// process and every dark-count generator draws from its own
/// seed-derived substream, so the output is independent of iteration
/// order and bit-identical for a fixed (config, seed).
std::map<int, TimeTagStream> simulate_network(
    const PumpSchedule& schedule, const SourceParams& source,
    const std::map<int, DetectorParams>& detectors,
    const std::map<int, LinkParams>& links, double duration_s,
    std::uint64_t seed);

/// First-order true coincidence rate mu * R * (eta_a T_a) * (eta_b T_b)
/// in coincidences per second.
double expected_pair_rate(const SourceParams& source,
                          const DetectorParams& det_a,
                          const DetectorParams& det_b,
                          const LinkParams& link_a, const LinkParams& link_b);

/// Background coincidence rate per second:
///   R * (mu eta_a T_a) * (mu eta_b T_b) + 2 * d_a * d_b * w,
/// the first term from independent pairs landing in the same gated slot,
/// the second from dark-dark overlaps in a window of w = window_ps.
/// `unrelated_slots` marks the pair as not sharing a pump slot; at first
/// order in mu the gated background is the same either way, so the flag
/// only documents intent.
double expected_accidental_rate(const SourceParams& source,
                                const DetectorParams& det_a,
                                const DetectorParams& det_b,
                                const LinkParams& link_a,
                                const LinkParams& link_b,
                                std::int64_t window_ps, bool unrelated_slots);

/// Relative coincidence rate R(tau)/R_t for each requested delay.
std::vector<double> hom_coincidence_curve(const HomModel& model,
                                          const std::vector<double>& delays_ps);

/// Effective indistinguishability of two heralded photons behind
/// Gaussian filters of the given FWHM bandwidths (at 1550 nm) with a
/// relative arrival-time offset. `calibration` rescales the ideal
/// overlap to match a measured interference visibility.
double mode_overlap_from_filters(double bw_a_nm, double bw_b_nm,
                                 double timing_mismatch_ps,
                                 double calibration = 1.0);

struct TagFileMeta {
  double duration_s = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;
};

/// Columnar text format: one comment header line carrying duration,
/// seed and config hash, a column header, then `detector_id,time_ps`
/// rows sorted by detector and time.
void write_tag_streams_csv(std::ostream& out,
                           const std::map<int, TimeTagStream>& streams,
                           const TagFileMeta& meta);

std::pair<std::map<int, TimeTagStream>, TagFileMeta> read_tag_streams_csv(
    std::istream& in);

}  // namespace qfuse
