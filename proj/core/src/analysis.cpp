#include "qfuse/analysis.hpp"

#include "qfuse/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace qfuse {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if (a % b != 0 && (a < 0) != (b < 0)) --q;
  return q;
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw std::invalid_argument("malformed number: " + s);
  return v;
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(pos));
      return cells;
    }
    cells.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
}

/// Coefficients of the coincidence rate behind (fixed analyzer, rotating
/// half-wave plate): R(t) = (t_i + t_z cos 4t + t_x sin 4t) / 2.
struct FringeCoefficients {
  double t_i;
  double t_z;
  double t_x;

  double rate(double angle) const {
    return 0.5 * (t_i + t_z * std::cos(4.0 * angle) +
                  t_x * std::sin(4.0 * angle));
  }
};

FringeCoefficients fringe_coefficients(const DensityMatrix& state,
                                       const AnalyzerSetting& analyzer_a) {
  if (state.qubit_count() != 2)
    throw std::invalid_argument("fringe synthesis needs a 2-qubit state");
  const Matrix pa = analyzer_projector(analyzer_a);
  auto obs = [&](double zz, double hv, double vh, double vv) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = zz;
    m(0, 1) = hv;
    m(1, 0) = vh;
    m(1, 1) = vv;
    Matrix out(4, 4);
    for (Eigen::Index i = 0; i < 2; ++i)
      for (Eigen::Index j = 0; j < 2; ++j)
        out.block(2 * i, 2 * j, 2, 2) = pa(i, j) * m;
    return out;
  };
  return FringeCoefficients{expectation(state, obs(1, 0, 0, 1)),
                            expectation(state, obs(1, 0, 0, -1)),
                            expectation(state, obs(0, 1, 1, 0))};
}

}  // namespace

std::uint64_t Histogram::total() const {
  std::uint64_t sum = 0;
  for (std::uint64_t c : counts) sum += c;
  return sum;
}

Histogram cross_correlate(const TimeTagStream& a, const TimeTagStream& b,
                          std::int64_t bin_ps, std::int64_t range_ps) {
  if (bin_ps <= 0) throw std::invalid_argument("bin width must be > 0");
  if (range_ps <= 0) throw std::invalid_argument("range must be > 0");
  Histogram h;
  h.bin_width_ps = bin_ps;
  h.origin_ps = -range_ps;
  const std::int64_t n_bins = floor_div(2 * range_ps + bin_ps - 1, bin_ps);
  h.counts.assign(static_cast<std::size_t>(n_bins), 0);
  const std::int64_t upper = h.origin_ps + n_bins * bin_ps;

  std::size_t lo = 0;
  std::size_t hi = 0;
  for (std::int64_t ta : a.tags_ps) {
    while (lo < b.tags_ps.size() && b.tags_ps[lo] - ta < h.origin_ps) ++lo;
    if (hi < lo) hi = lo;
    while (hi < b.tags_ps.size() && b.tags_ps[hi] - ta < upper) ++hi;
    for (std::size_t k = lo; k < hi; ++k) {
      const std::int64_t delay = b.tags_ps[k] - ta;
      ++h.counts[static_cast<std::size_t>(
          floor_div(delay - h.origin_ps, bin_ps))];
    }
  }
  return h;
}

CoincidenceMatrix::CoincidenceMatrix(std::vector<int> users,
                                     std::int64_t window_ps, double duration_s)
    : users_(std::move(users)),
      counts_(users_.size(), std::vector<std::uint64_t>(users_.size(), 0)),
      window_ps_(window_ps),
      duration_s_(duration_s) {}

int CoincidenceMatrix::index_of(int user) const {
  for (std::size_t i = 0; i < users_.size(); ++i)
    if (users_[i] == user) return static_cast<int>(i);
  throw std::invalid_argument("user CH" + std::to_string(user) +
                              " is not part of this matrix");
}

std::uint64_t CoincidenceMatrix::at(int user_a, int user_b) const {
  return counts_[index_of(user_a)][index_of(user_b)];
}

void CoincidenceMatrix::set(int user_a, int user_b, std::uint64_t count) {
  const int i = index_of(user_a);
  const int j = index_of(user_b);
  if (i == j && count != 0)
    throw std::invalid_argument("diagonal entries must stay zero");
  counts_[i][j] = count;
  counts_[j][i] = count;
}

std::uint64_t CoincidenceMatrix::min_off_diagonal() const {
  std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
  for (std::size_t i = 0; i < users_.size(); ++i)
    for (std::size_t j = i + 1; j < users_.size(); ++j)
      best = std::min(best, counts_[i][j]);
  return best;
}

int slot_index_of_time(const PumpSchedule& schedule, std::int64_t t_ps) {
  const std::int64_t period = schedule.rep_period_ps;
  const std::int64_t dt = schedule.delta_t_ps;
  // Frame offsets span [-dt/2, period - dt/2) so a train may fill the
  // whole period; ties at half a spacing round toward the later slot.
  const std::int64_t pulse = floor_div(t_ps + dt / 2, period);
  const std::int64_t offset = t_ps - pulse * period;
  const std::int64_t m = floor_div(offset + dt / 2, dt);
  if (m < 0 || m >= schedule.slot_count()) return 0;
  return static_cast<int>(m) + 1;
}

std::uint64_t gated_coincidences(const TimeTagStream& a,
                                 const TimeTagStream& b,
                                 const PumpSchedule& schedule, int slot_index,
                                 std::int64_t window_ps) {
  if (slot_index < 1 || slot_index > schedule.slot_count())
    throw std::invalid_argument("slot index out of range");
  std::uint64_t count = 0;
  std::size_t lo = 0;
  for (std::int64_t ta : a.tags_ps) {
    if (slot_index_of_time(schedule, ta) != slot_index) continue;
    while (lo < b.tags_ps.size() && b.tags_ps[lo] < ta - window_ps) ++lo;
    for (std::size_t k = lo;
         k < b.tags_ps.size() && b.tags_ps[k] <= ta + window_ps; ++k)
      if (slot_index_of_time(schedule, b.tags_ps[k]) == slot_index) ++count;
  }
  return count;
}

namespace {

void check_matrix_inputs(const std::map<int, TimeTagStream>& streams,
                         const PumpSchedule& schedule,
                         std::int64_t window_ps) {
  if (window_ps <= 0) throw std::invalid_argument("window must be > 0");
  if (2 * window_ps >= schedule.delta_t_ps)
    throw std::invalid_argument(
        "slot gating needs window < delta_t/2, got window " +
        std::to_string(window_ps) + " ps at delta_t " +
        std::to_string(schedule.delta_t_ps) + " ps");
  for (const auto& [user, stream] : streams)
    if (slot_of_pair(schedule, user, schedule.channels[0].channel_number) ==
            0 &&
        user != schedule.channels[0].channel_number)
      throw std::invalid_argument("stream user CH" + std::to_string(user) +
                                  " is absent from the schedule");
}

std::uint64_t window_pairs(const std::vector<std::int64_t>& a,
                           const std::vector<std::int64_t>& b,
                           std::int64_t window_ps) {
  std::uint64_t count = 0;
  std::size_t lo = 0;
  std::size_t hi = 0;
  for (std::int64_t ta : a) {
    while (lo < b.size() && b[lo] < ta - window_ps) ++lo;
    if (hi < lo) hi = lo;
    while (hi < b.size() && b[hi] <= ta + window_ps) ++hi;
    count += hi - lo;
  }
  return count;
}

}  // namespace

CoincidenceMatrix coincidence_matrix(
    const std::map<int, TimeTagStream>& streams, const PumpSchedule& schedule,
    std::int64_t window_ps, double duration_s) {
  check_matrix_inputs(streams, schedule, window_ps);
  std::vector<int> users;
  for (const ItuChannel& ch : schedule.channels)
    users.push_back(ch.channel_number);
  CoincidenceMatrix matrix(users, window_ps, duration_s);

  // One pass per stream: split the tags by pump slot, preserving order.
  const std::size_t n_slots = static_cast<std::size_t>(schedule.slot_count());
  std::map<int, std::vector<std::vector<std::int64_t>>> buckets;
  for (const auto& [user, stream] : streams) {
    auto& per_slot = buckets[user];
    per_slot.resize(n_slots);
    for (std::int64_t t : stream.tags_ps) {
      const int s = slot_index_of_time(schedule, t);
      if (s > 0) per_slot[static_cast<std::size_t>(s - 1)].push_back(t);
    }
  }

  static const std::vector<std::int64_t> kEmpty;
  auto bucket_of = [&](int user, int slot) -> const std::vector<std::int64_t>& {
    auto it = buckets.find(user);
    if (it == buckets.end()) return kEmpty;
    return it->second[static_cast<std::size_t>(slot - 1)];
  };

  for (std::size_t i = 0; i < users.size(); ++i)
    for (std::size_t j = i + 1; j < users.size(); ++j) {
      const int s = slot_of_pair(schedule, users[i], users[j]);
      if (s == 0) continue;
      matrix.set(users[i], users[j],
                 window_pairs(bucket_of(users[i], s), bucket_of(users[j], s),
                              window_ps));
    }
  return matrix;
}

CoincidenceMatrix coincidence_matrix_reference(
    const std::map<int, TimeTagStream>& streams, const PumpSchedule& schedule,
    std::int64_t window_ps, double duration_s) {
  check_matrix_inputs(streams, schedule, window_ps);
  std::vector<int> users;
  for (const ItuChannel& ch : schedule.channels)
    users.push_back(ch.channel_number);
  CoincidenceMatrix matrix(users, window_ps, duration_s);

  static const TimeTagStream kEmptyStream;
  auto stream_of = [&](int user) -> const TimeTagStream& {
    auto it = streams.find(user);
    return it == streams.end() ? kEmptyStream : it->second;
  };
  for (std::size_t i = 0; i < users.size(); ++i)
    for (std::size_t j = i + 1; j < users.size(); ++j) {
      const int s = slot_of_pair(schedule, users[i], users[j]);
      if (s == 0) continue;
      matrix.set(users[i], users[j],
                 gated_coincidences(stream_of(users[i]), stream_of(users[j]),
                                    schedule, s, window_ps));
    }
  return matrix;
}

void validate(const FringeScan& scan) {
  if (scan.points.size() < 8)
    throw std::invalid_argument("a fringe scan needs at least 8 points");
  double lo = scan.points.front().angle_rad;
  double hi = lo;
  for (const FringePoint& p : scan.points) {
    lo = std::min(lo, p.angle_rad);
    hi = std::max(hi, p.angle_rad);
    if (p.count < 0)
      throw std::invalid_argument("fringe counts must be non-negative");
    if (!(p.integration_s > 0.0))
      throw std::invalid_argument("integration time must be > 0");
  }
  if (hi - lo < std::numbers::pi - 1e-9)
    throw std::invalid_argument(
        "a fringe scan must span at least pi of half-wave-plate angle");
}

VisibilityResult fringe_visibility(const FringeScan& scan,
                                   VisibilityMethod method) {
  validate(scan);
  const std::size_t n = scan.points.size();
  const bool all_equal = std::all_of(
      scan.points.begin(), scan.points.end(),
      [&](const FringePoint& p) { return p.count == scan.points[0].count; });

  if (method == VisibilityMethod::Extrema) {
    std::int64_t max = scan.points[0].count;
    std::int64_t min = scan.points[0].count;
    for (const FringePoint& p : scan.points) {
      max = std::max(max, p.count);
      min = std::min(min, p.count);
    }
    if (all_equal || max + min <= 0)
      throw UndefinedVisibilityError(
          "visibility undefined: the scan has no contrast");
    const double big = static_cast<double>(max);
    const double small = static_cast<double>(min);
    const double sum = big + small;
    return VisibilityResult{(big - small) / sum,
                            2.0 * std::sqrt(big * small / (sum * sum * sum)),
                            VisibilityMethod::Extrema};
  }
  if (method == VisibilityMethod::Dip)
    throw std::invalid_argument("dip visibility takes (r0, rt), not a scan");

  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    x(i, 1) = std::cos(4.0 * scan.points[i].angle_rad);
    x(i, 2) = std::sin(4.0 * scan.points[i].angle_rad);
    y(i) = static_cast<double>(scan.points[i].count);
  }
  const Eigen::Vector3d beta = x.colPivHouseholderQr().solve(y);
  const double c0 = beta(0);
  const double amp = std::hypot(beta(1), beta(2));
  if (all_equal || c0 <= 0.0 || amp <= 1e-9 * std::max(1.0, c0))
    throw UndefinedVisibilityError(
        "visibility undefined: the fit has no fringe amplitude");

  // Poisson sandwich covariance: Cov = (X'X)^-1 X' diag(var) X (X'X)^-1.
  const Eigen::Matrix3d xtx_inv = (x.transpose() * x).inverse();
  const Eigen::MatrixXd m = xtx_inv * x.transpose();
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const double var = std::max(y(i), 1.0);
    cov += var * m.col(i) * m.col(i).transpose();
  }
  const Eigen::Vector3d grad(-amp / (c0 * c0), beta(1) / (amp * c0),
                             beta(2) / (amp * c0));
  const double variance = grad.transpose() * cov * grad;
  return VisibilityResult{amp / c0, std::sqrt(std::max(0.0, variance)),
                          VisibilityMethod::Fit};
}

VisibilityResult dip_visibility(double r0, double rt) {
  if (r0 < 0.0) throw std::invalid_argument("dip floor r0 must be >= 0");
  if (!(rt > 0.0))
    throw UndefinedVisibilityError(
        "dip visibility undefined: baseline rt must be > 0");
  const double error =
      std::sqrt(r0 / (rt * rt) + r0 * r0 / (rt * rt * rt));
  return VisibilityResult{1.0 - r0 / rt, error, VisibilityMethod::Dip};
}

double fidelity_from_visibility(double v) {
  if (v < -1.0 / 3.0 || v > 1.0)
    throw std::invalid_argument("visibility must lie in [-1/3, 1]");
  return (3.0 * v + 1.0) / 4.0;
}

ChshResult chsh_s(double v) {
  if (v < 0.0 || v > 1.0)
    throw std::invalid_argument("visibility must lie in [0, 1]");
  return ChshResult{2.0 * std::numbers::sqrt2 * v,
                    v > 1.0 / std::numbers::sqrt2};
}

double binary_entropy(double p) {
  if (p < 0.0 || p > 1.0)
    throw std::invalid_argument("probability must lie in [0, 1]");
  if (p == 0.0 || p == 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

double bbm92_key_rate(double v, double sifted_rate) {
  if (v < 0.0 || v > 1.0)
    throw std::invalid_argument("visibility must lie in [0, 1]");
  if (sifted_rate < 0.0)
    throw std::invalid_argument("sifted rate must be >= 0");
  const double qber = (1.0 - v) / 2.0;
  if (qber >= 0.11) return 0.0;
  return sifted_rate * std::max(0.0, 1.0 - 2.0 * binary_entropy(qber));
}

FringeScan synthesize_fringe_scan(const DensityMatrix& state,
                                  const AnalyzerSetting& analyzer_a,
                                  const std::vector<double>& angles_rad,
                                  double amplitude, double integration_s) {
  if (amplitude < 0.0) throw std::invalid_argument("amplitude must be >= 0");
  const FringeCoefficients coeff = fringe_coefficients(state, analyzer_a);
  FringeScan scan;
  scan.points.reserve(angles_rad.size());
  for (double angle : angles_rad)
    scan.points.push_back(FringePoint{
        angle, std::llround(amplitude * coeff.rate(angle)), integration_s});
  return scan;
}

FringeScan synthesize_fringe_scan_poisson(const DensityMatrix& state,
                                          const AnalyzerSetting& analyzer_a,
                                          const std::vector<double>& angles_rad,
                                          double amplitude,
                                          double integration_s,
                                          std::uint64_t seed) {
  if (amplitude < 0.0) throw std::invalid_argument("amplitude must be >= 0");
  const FringeCoefficients coeff = fringe_coefficients(state, analyzer_a);
  auto engine = substream_engine(seed, "fringe", {});
  FringeScan scan;
  scan.points.reserve(angles_rad.size());
  for (double angle : angles_rad) {
    const double mean = amplitude * coeff.rate(angle);
    std::int64_t count = 0;
    if (mean > 0.0) {
      std::poisson_distribution<std::int64_t> draw(mean);
      count = draw(engine);
    }
    scan.points.push_back(FringePoint{angle, count, integration_s});
  }
  return scan;
}

void histogram_to_csv(std::ostream& out, const Histogram& h) {
  out << "# bin_width_ps=" << h.bin_width_ps << " origin_ps=" << h.origin_ps
      << "\n";
  out << "bin_start_ps,count\n";
  for (std::size_t k = 0; k < h.counts.size(); ++k)
    out << h.bin_start_ps(k) << ',' << h.counts[k] << "\n";
}

Histogram histogram_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw std::invalid_argument("histogram file must start with '# ' header");
  Histogram h;
  {
    std::istringstream header(line.substr(2));
    std::string item;
    while (header >> item) {
      const std::size_t eq = item.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = item.substr(0, eq);
      const std::string value = item.substr(eq + 1);
      if (key == "bin_width_ps")
        h.bin_width_ps = std::stoll(value);
      else if (key == "origin_ps")
        h.origin_ps = std::stoll(value);
    }
  }
  if (h.bin_width_ps <= 0)
    throw std::invalid_argument("histogram bin width must be > 0");
  if (!std::getline(in, line) || line != "bin_start_ps,count")
    throw std::invalid_argument("histogram file missing column header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_row(line);
    if (cells.size() != 2)
      throw std::invalid_argument("malformed histogram row: " + line);
    const std::int64_t start = std::stoll(cells[0]);
    if (start != h.bin_start_ps(h.counts.size()))
      throw std::invalid_argument("histogram bins must be contiguous");
    h.counts.push_back(std::stoull(cells[1]));
  }
  if (h.counts.empty())
    throw std::invalid_argument("histogram must have at least one bin");
  return h;
}

nlohmann::ordered_json histogram_to_json(const Histogram& h) {
  nlohmann::ordered_json j;
  j["bin_width_ps"] = h.bin_width_ps;
  j["origin_ps"] = h.origin_ps;
  j["total"] = h.total();
  j["counts"] = h.counts;
  return j;
}

void fringe_scan_to_csv(std::ostream& out, const FringeScan& scan) {
  out << "angle_rad,count,integration_s\n";
  for (const FringePoint& p : scan.points)
    out << format_double(p.angle_rad) << ',' << p.count << ','
        << format_double(p.integration_s) << "\n";
}

FringeScan fringe_scan_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "angle_rad,count,integration_s")
    throw std::invalid_argument("fringe file missing column header");
  FringeScan scan;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_row(line);
    if (cells.size() != 3)
      throw std::invalid_argument("malformed fringe row: " + line);
    scan.points.push_back(FringePoint{parse_double(cells[0]),
                                      std::stoll(cells[1]),
                                      parse_double(cells[2])});
  }
  return scan;
}

nlohmann::ordered_json coincidence_matrix_to_json(const CoincidenceMatrix& m) {
  nlohmann::ordered_json j;
  j["users"] = m.users();
  j["window_ps"] = m.window_ps();
  j["duration_s"] = m.duration_s();
  j["min_off_diagonal"] =
      m.users().size() >= 2 ? m.min_off_diagonal() : 0;
  j["counts"] = nlohmann::ordered_json::array();
  for (int a : m.users()) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (int b : m.users()) row.push_back(m.at(a, b));
    j["counts"].push_back(std::move(row));
  }
  return j;
}

void coincidence_matrix_to_csv(std::ostream& out, const CoincidenceMatrix& m) {
  out << "user";
  for (int b : m.users()) out << ",CH" << b;
  out << "\n";
  for (int a : m.users()) {
    out << "CH" << a;
    for (int b : m.users()) out << ',' << m.at(a, b);
    out << "\n";
  }
}

}  // namespace qfuse
