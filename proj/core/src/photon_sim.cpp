#include "qfuse/photon_sim.hpp"

#include "qfuse/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>

namespace qfuse {

namespace {

constexpr double kPsPerSecond = 1e12;

void validate_source(const SourceParams& source) {
  if (!(source.mu >= 0.0) || source.mu > 0.2)
    throw std::invalid_argument(
        "source mu must lie in [0, 0.2]; the first-order pair model is not "
        "valid beyond that");
  if (!(source.rep_rate_hz > 0.0))
    throw std::invalid_argument("rep_rate_hz must be > 0");
}

void validate_detector(const DetectorParams& det) {
  if (det.efficiency < 0.0 || det.efficiency > 1.0)
    throw std::invalid_argument("detector efficiency must lie in [0, 1]");
  if (det.dark_rate_hz < 0.0)
    throw std::invalid_argument("dark_rate_hz must be >= 0");
  if (det.jitter_sigma_ps < 0.0)
    throw std::invalid_argument("jitter_sigma_ps must be >= 0");
}

void validate_link(const LinkParams& link) {
  if (link.transmission < 0.0 || link.transmission > 1.0)
    throw std::invalid_argument("link transmission must lie in [0, 1]");
}

template <typename T>
const T& lookup_or_default(const std::map<int, T>& m, int key,
                           const T& fallback) {
  auto it = m.find(key);
  return it == m.end() ? fallback : it->second;
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

int channel_from_detector_id(const std::string& id) {
  const std::size_t colon = id.rfind(':');
  const std::size_t start = colon == std::string::npos ? 0 : colon + 1;
  if (id.compare(start, 2, "CH") != 0)
    throw std::invalid_argument("detector id '" + id +
                                "' does not name a CH<n> channel");
  int ch = 0;
  auto [ptr, ec] =
      std::from_chars(id.data() + start + 2, id.data() + id.size(), ch);
  if (ec != std::errc{} || ptr != id.data() + id.size())
    throw std::invalid_argument("detector id '" + id +
                                "' does not name a CH<n> channel");
  return ch;
}

}  // namespace

std::map<int, TimeTagStream> simulate_network(
    const PumpSchedule& schedule, const SourceParams& source,
    const std::map<int, DetectorParams>& detectors,
    const std::map<int, LinkParams>& links, double duration_s,
    std::uint64_t seed) {
  validate_source(source);
  for (const auto& [ch, det] : detectors) validate_detector(det);
  for (const auto& [ch, link] : links) validate_link(link);
  if (duration_s < 0.0) throw std::invalid_argument("duration must be >= 0");

  const DetectorParams default_det;
  const LinkParams default_link;
  const std::int64_t duration_ps = std::llround(duration_s * kPsPerSecond);
  const std::int64_t period_ps = schedule.rep_period_ps;
  const std::int64_t n_pulses = duration_ps / period_ps;
  const std::uint64_t net_hash = fnv1a64(schedule.network_id);

  std::map<int, std::vector<std::int64_t>> tags;
  for (const ItuChannel& ch : schedule.channels) {
    const int u = ch.channel_number;
    // Expected yield: every process this user takes part in, plus darks.
    double expected =
        lookup_or_default(detectors, u, default_det).dark_rate_hz * duration_s;
    const double p_u =
        lookup_or_default(detectors, u, default_det).efficiency *
        lookup_or_default(links, u, default_link).transmission;
    expected += source.mu * static_cast<double>(n_pulses) * p_u *
                static_cast<double>(schedule.user_count() - 1);
    auto& vec = tags[u];
    vec.reserve(static_cast<std::size_t>(expected * 1.02 + 1024.0));
  }

  for (const PumpSlot& slot : schedule.slots) {
    for (const auto& [u, v] : slot.served_pairs) {
      auto engine = substream_engine(
          seed, "pair",
          {net_hash, static_cast<std::uint64_t>(slot.slot_index),
           static_cast<std::uint64_t>(u), static_cast<std::uint64_t>(v)});
      const DetectorParams& det_u = lookup_or_default(detectors, u, default_det);
      const DetectorParams& det_v = lookup_or_default(detectors, v, default_det);
      const double p_u =
          det_u.efficiency * lookup_or_default(links, u, default_link).transmission;
      const double p_v =
          det_v.efficiency * lookup_or_default(links, v, default_link).transmission;

      std::poisson_distribution<std::int64_t> pair_count(
          source.mu * static_cast<double>(n_pulses));
      std::uniform_int_distribution<std::int64_t> pulse(0, n_pulses - 1);
      std::bernoulli_distribution survive_u(p_u);
      std::bernoulli_distribution survive_v(p_v);
      std::normal_distribution<double> jitter_u(0.0, det_u.jitter_sigma_ps);
      std::normal_distribution<double> jitter_v(0.0, det_v.jitter_sigma_ps);

      const std::int64_t pairs = n_pulses > 0 ? pair_count(engine) : 0;
      std::vector<std::int64_t>& tags_u = tags[u];
      std::vector<std::int64_t>& tags_v = tags[v];
      for (std::int64_t m = 0; m < pairs; ++m) {
        const std::int64_t base =
            pulse(engine) * period_ps + slot.time_offset_ps;
        if (survive_u(engine)) {
          std::int64_t t = base;
          if (det_u.jitter_sigma_ps > 0.0) t += std::llround(jitter_u(engine));
          if (t >= 0 && t < duration_ps) tags_u.push_back(t);
        }
        if (survive_v(engine)) {
          std::int64_t t = base;
          if (det_v.jitter_sigma_ps > 0.0) t += std::llround(jitter_v(engine));
          if (t >= 0 && t < duration_ps) tags_v.push_back(t);
        }
      }
    }
  }

  for (const ItuChannel& ch : schedule.channels) {
    const int u = ch.channel_number;
    const DetectorParams& det = lookup_or_default(detectors, u, default_det);
    if (det.dark_rate_hz <= 0.0 || duration_ps <= 0) continue;
    auto engine = substream_engine(seed, "dark",
                                   {net_hash, static_cast<std::uint64_t>(u)});
    std::poisson_distribution<std::int64_t> dark_count(det.dark_rate_hz *
                                                       duration_s);
    std::uniform_int_distribution<std::int64_t> when(0, duration_ps - 1);
    const std::int64_t darks = dark_count(engine);
    for (std::int64_t m = 0; m < darks; ++m) tags[u].push_back(when(engine));
  }

  std::map<int, TimeTagStream> streams;
  for (auto& [u, vec] : tags) {
    std::sort(vec.begin(), vec.end());
    streams[u] = TimeTagStream{node_name(schedule.network_id, u),
                               std::move(vec)};
  }
  return streams;
}

double expected_pair_rate(const SourceParams& source,
                          const DetectorParams& det_a,
                          const DetectorParams& det_b,
                          const LinkParams& link_a, const LinkParams& link_b) {
  validate_source(source);
  validate_detector(det_a);
  validate_detector(det_b);
  validate_link(link_a);
  validate_link(link_b);
  return source.mu * source.rep_rate_hz * det_a.efficiency *
         link_a.transmission * det_b.efficiency * link_b.transmission;
}

double expected_accidental_rate(const SourceParams& source,
                                const DetectorParams& det_a,
                                const DetectorParams& det_b,
                                const LinkParams& link_a,
                                const LinkParams& link_b,
                                std::int64_t window_ps, bool unrelated_slots) {
  (void)unrelated_slots;  // same gated O(mu^2) background either way
  validate_source(source);
  validate_detector(det_a);
  validate_detector(det_b);
  validate_link(link_a);
  validate_link(link_b);
  if (window_ps < 0) throw std::invalid_argument("window_ps must be >= 0");
  const double p_a = source.mu * det_a.efficiency * link_a.transmission;
  const double p_b = source.mu * det_b.efficiency * link_b.transmission;
  const double window_s = static_cast<double>(window_ps) / kPsPerSecond;
  return source.rep_rate_hz * p_a * p_b +
         2.0 * det_a.dark_rate_hz * det_b.dark_rate_hz * window_s;
}

std::vector<double> hom_coincidence_curve(
    const HomModel& model, const std::vector<double>& delays_ps) {
  if (model.max_visibility_v0 < 0.0 || model.max_visibility_v0 > 1.0)
    throw std::invalid_argument("HOM visibility must lie in [0, 1]");
  if (!(model.dip_sigma_tau_ps > 0.0))
    throw std::invalid_argument("HOM dip sigma must be > 0");
  std::vector<double> out;
  out.reserve(delays_ps.size());
  for (double tau : delays_ps) {
    const double x = (tau - model.relative_delay_tau_ps) / model.dip_sigma_tau_ps;
    out.push_back(1.0 - model.max_visibility_v0 * std::exp(-0.5 * x * x));
  }
  return out;
}

double mode_overlap_from_filters(double bw_a_nm, double bw_b_nm,
                                 double timing_mismatch_ps,
                                 double calibration) {
  if (!(bw_a_nm > 0.0) || !(bw_b_nm > 0.0))
    throw std::invalid_argument("filter bandwidths must be > 0");
  if (calibration < 0.0)
    throw std::invalid_argument("calibration must be >= 0");
  // Gaussian wavepackets behind FWHM filters at 1550 nm. sigma is the
  // rms angular-frequency width in rad/ps.
  constexpr double kCenterNm = 1550.0;
  const double fwhm_to_sigma = 1.0 / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  auto sigma_of = [&](double bw_nm) {
    const double fwhm_thz = kSpeedOfLightNmThz * bw_nm / (kCenterNm * kCenterNm);
    return 2.0 * std::numbers::pi * fwhm_thz * fwhm_to_sigma;
  };
  const double s1 = sigma_of(bw_a_nm);
  const double s2 = sigma_of(bw_b_nm);
  const double s_sq = s1 * s1 + s2 * s2;
  const double spectral = 2.0 * s1 * s2 / s_sq;
  const double temporal = std::exp(-timing_mismatch_ps * timing_mismatch_ps *
                                   s1 * s1 * s2 * s2 / s_sq);
  return std::clamp(calibration * spectral * temporal, 0.0, 1.0);
}

void write_tag_streams_csv(std::ostream& out,
                           const std::map<int, TimeTagStream>& streams,
                           const TagFileMeta& meta) {
  out << "# duration_s=" << format_double(meta.duration_s)
      << " seed=" << meta.seed << " config_hash=" << meta.config_hash << "\n";
  out << "detector_id,time_ps\n";
  for (const auto& [ch, stream] : streams)
    for (std::int64_t t : stream.tags_ps)
      out << stream.detector_id << ',' << t << "\n";
}

std::pair<std::map<int, TimeTagStream>, TagFileMeta> read_tag_streams_csv(
    std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw std::invalid_argument("tag file must start with a '# ' header line");
  TagFileMeta meta;
  std::size_t pos = 2;
  while (pos < line.size()) {
    const std::size_t eq = line.find('=', pos);
    if (eq == std::string::npos) break;
    const std::string key = line.substr(pos, eq - pos);
    std::size_t end = line.find(' ', eq + 1);
    if (end == std::string::npos) end = line.size();
    const std::string value = line.substr(eq + 1, end - eq - 1);
    if (key == "duration_s")
      meta.duration_s = std::stod(value);
    else if (key == "seed")
      meta.seed = std::stoull(value);
    else if (key == "config_hash")
      meta.config_hash = value;
    pos = end + 1;
  }
  if (!std::getline(in, line) || line != "detector_id,time_ps")
    throw std::invalid_argument("tag file missing detector_id,time_ps header");

  std::map<int, TimeTagStream> streams;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("malformed tag row: " + line);
    const std::string id = line.substr(0, comma);
    std::int64_t t = 0;
    auto [ptr, ec] = std::from_chars(line.data() + comma + 1,
                                     line.data() + line.size(), t);
    if (ec != std::errc{} || ptr != line.data() + line.size())
      throw std::invalid_argument("malformed tag time in row: " + line);
    const int ch = channel_from_detector_id(id);
    TimeTagStream& stream = streams[ch];
    if (stream.detector_id.empty()) stream.detector_id = id;
    stream.tags_ps.push_back(t);
  }
  for (auto& [ch, stream] : streams)
    if (!std::is_sorted(stream.tags_ps.begin(), stream.tags_ps.end()))
      throw std::invalid_argument("tag stream for " + stream.detector_id +
                                  " is not sorted");
  return {std::move(streams), meta};
}

}  // namespace qfuse
