#include "risac/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <random>
#include <thread>

#include "json.hpp"

namespace risac {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed ^ (salt * 0x9e3779b97f4a7c15ULL);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

void open_out(std::ofstream& out, const std::string& path) {
  out.open(path);
  if (!out) throw InvalidInput(path + ": cannot open for writing");
}

}  // namespace

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::crb_threshold: return "crb_threshold";
    case SweepAxis::antennas: return "antennas";
    case SweepAxis::qos_threshold: return "qos_threshold";
    case SweepAxis::secrecy_threshold: return "secrecy_threshold";
    case SweepAxis::p_max: return "p_max";
  }
  return "?";
}

SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "crb_threshold" || s == "crb") return SweepAxis::crb_threshold;
  if (s == "antennas" || s == "nt") return SweepAxis::antennas;
  if (s == "qos_threshold" || s == "qos") return SweepAxis::qos_threshold;
  if (s == "secrecy_threshold" || s == "secrecy") return SweepAxis::secrecy_threshold;
  if (s == "p_max" || s == "pmax") return SweepAxis::p_max;
  throw InvalidInput("unknown sweep axis: " + s);
}

void SweepSpec::validate() const {
  if (values.empty()) throw InvalidInput("sweep: values must be nonempty");
  for (size_t i = 1; i < values.size(); ++i) {
    if (values[i] <= values[i - 1])
      throw InvalidInput("sweep: values must be strictly increasing");
  }
  if (algorithms.empty() || schemes.empty())
    throw InvalidInput("sweep: algorithms and schemes must be nonempty");
}

SweepRow run_single(const ScenarioConfig& config, Algorithm algorithm, Scheme scheme,
                    std::optional<double> axis_value, SweepAxis axis) {
  ScenarioConfig c = config;
  c.algorithm.selector = selector_for(scheme);
  if (axis_value) {
    switch (axis) {
      case SweepAxis::crb_threshold: c.algorithm.crb_threshold = *axis_value; break;
      case SweepAxis::antennas:
        c.array.n_tx = static_cast<int>(*axis_value);
        c.array.n_rx = static_cast<int>(*axis_value);
        break;
      case SweepAxis::qos_threshold: c.algorithm.qos_threshold = *axis_value; break;
      case SweepAxis::secrecy_threshold: c.algorithm.secrecy_threshold = *axis_value; break;
      case SweepAxis::p_max: c.algorithm.p_max = *axis_value; break;
    }
  }
  c.validate(/*allow_no_eaves=*/algorithm == Algorithm::alg3);

  SweepRow row;
  row.algorithm = algorithm;
  row.scheme = scheme;
  row.axis_value = axis_value.value_or(0.0);
  row.run_id = to_string(algorithm) + "_" + to_string(scheme);
  if (axis_value) row.run_id += "_" + to_string(axis) + "=" + fmt(*axis_value);

  std::uint64_t salt = 0;
  for (char ch : row.run_id) salt = salt * 131 + static_cast<unsigned char>(ch);
  std::mt19937_64 rng(mix_seed(c.seed, salt));

  try {
    conic::BarrierBackend backend;
    const RunResult rr = run_algorithm(algorithm, c.algorithm, c.build(), backend, rng);
    row.status = rr.status;
    row.iterations = rr.iterations;
    row.objective_trace = rr.objective_trace;
    row.penalty_trace = rr.penalty_trace;
    row.dinkelbach_trace = rr.dinkelbach_trace;
    if (rr.status == RunStatus::converged || rr.status == RunStatus::iteration_limit) {
      row.objective = rr.objective();
      row.power_w = rr.metrics.total_power;
      row.min_rate = rr.metrics.min_total_rate();
      row.min_secrecy_rate = rr.metrics.min_secrecy_rate();
      row.crb_det = rr.crb_det;
    }
  } catch (const std::exception& e) {
    row.status = RunStatus::numerical_failure;
  }
  return row;
}

SweepTable run_sweep(const SweepSpec& spec, const ScenarioConfig& base, int num_workers) {
  spec.validate();
  struct Job {
    double value;
    Algorithm algorithm;
    Scheme scheme;
  };
  std::vector<Job> jobs;
  for (double v : spec.values)
    for (Algorithm a : spec.algorithms)
      for (Scheme s : spec.schemes) jobs.push_back({v, a, s});

  SweepTable table;
  table.rows.resize(jobs.size());
  std::atomic<size_t> next{0};
  const int workers = num_workers > 0
                          ? num_workers
                          : static_cast<int>(std::min<size_t>(
                                std::max(1u, std::thread::hardware_concurrency()), jobs.size()));
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const Job& j = jobs[i];
      table.rows[i] = run_single(base, j.algorithm, j.scheme, j.value, spec.axis);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return table;
}

std::vector<double> default_angle_grid() {
  std::vector<double> grid;
  for (double deg = -90.0; deg <= 90.0 + 1e-9; deg += 0.5) grid.push_back(deg_to_rad(deg));
  return grid;
}

std::vector<BeampatternRow> beampattern(const BeamformerSet& bf,
                                        const std::vector<double>& angle_grid_rad,
                                        const ArrayConfig& array) {
  if (angle_grid_rad.empty()) throw InvalidInput("beampattern: empty angle grid");
  std::vector<std::pair<std::string, const MatrixXcd*>> mats;
  if (bf.w_common.rows() > 0) mats.emplace_back("Wc", &bf.w_common);
  for (int k = 0; k < bf.num_users(); ++k)
    mats.emplace_back("W" + std::to_string(k + 1), &bf.w_private[static_cast<size_t>(k)]);
  if (bf.has_extra()) mats.emplace_back("Wv", &bf.w_extra);
  if (bf.w_an) mats.emplace_back("Wan", &*bf.w_an);

  std::vector<BeampatternRow> rows;
  rows.reserve(mats.size() * angle_grid_rad.size());
  for (const auto& [id, w] : mats) {
    for (double th : angle_grid_rad) {
      const VectorXcd a = steering_vector(th, array.n_tx, array.spacing_ratio);
      const double gain = std::max(0.0, (a.adjoint() * (*w) * a)(0).real());
      BeampatternRow row;
      row.matrix_id = id;
      row.angle_deg = rad_to_deg(th);
      row.gain_db = std::max(-120.0, 10.0 * std::log10(std::max(gain, 1e-300)));
      rows.push_back(row);
    }
  }
  return rows;
}

ValidationReport validate_statistics(const ScenarioConfig& config, int samples) {
  if (samples < 10000) throw InvalidInput("validate_statistics: need at least 1e4 samples");
  ValidationReport rep;
  rep.samples = samples;
  std::mt19937_64 rng(mix_seed(config.seed, 0xabcdefULL));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = config.array.n_tx;

  auto random_psd = [&] {
    MatrixXcd b(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) b(i, j) = Complex(gauss(rng), gauss(rng));
    return MatrixXcd(b * b.adjoint() / static_cast<double>(n));
  };

  auto check_link = [&](const UserGeometry& geom, const std::string& label) {
    const ChannelStats cs = channel_covariance(geom, config.array);
    double worst = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
      const MatrixXcd w = random_psd();
      const double expected = (cs.covariance * w).trace().real();
      double acc = 0.0;
      std::mt19937_64 ch_rng(mix_seed(config.seed, std::hash<std::string>{}(label) + trial));
      for (int s = 0; s < samples; ++s) {
        const VectorXcd h = sample_channel(geom, config.array, ch_rng);
        acc += (h.adjoint() * w * h)(0).real();
      }
      acc /= static_cast<double>(samples);
      worst = std::max(worst, std::abs(acc - expected) / expected);
    }
    rep.entries.push_back({label, worst});
    rep.max_deviation = std::max(rep.max_deviation, worst);
  };

  for (size_t k = 0; k < config.users.size(); ++k)
    check_link(config.users[k], "user" + std::to_string(k + 1));
  for (size_t m = 0; m < config.eavesdroppers.size(); ++m)
    check_link(config.eavesdroppers[m], "eave" + std::to_string(m + 1));
  return rep;
}

std::string results_csv_header() {
  return "run_id,algorithm,scheme,axis_value,objective,power_w,min_rate,"
         "min_secrecy_rate,crb_det,iterations,status";
}

void emit_results(const SweepTable& table, EmitFormat format, const std::string& path) {
  std::ofstream out;
  open_out(out, path);
  if (format == EmitFormat::csv) {
    out << results_csv_header() << "\n";
    for (const auto& r : table.rows) {
      out << r.run_id << "," << to_string(r.algorithm) << "," << to_string(r.scheme) << ","
          << fmt(r.axis_value) << "," << fmt(r.objective) << "," << fmt(r.power_w) << ","
          << fmt(r.min_rate) << "," << fmt(r.min_secrecy_rate) << "," << fmt(r.crb_det)
          << "," << r.iterations << "," << to_string(r.status) << "\n";
    }
  } else {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : table.rows) {
      j.push_back({{"run_id", r.run_id},
                   {"algorithm", to_string(r.algorithm)},
                   {"scheme", to_string(r.scheme)},
                   {"axis_value", r.axis_value},
                   {"objective", r.objective},
                   {"power_w", r.power_w},
                   {"min_rate", r.min_rate},
                   {"min_secrecy_rate", r.min_secrecy_rate},
                   {"crb_det", r.crb_det},
                   {"iterations", r.iterations},
                   {"status", to_string(r.status)}});
    }
    out << j.dump(2) << "\n";
  }
  if (!out) throw InvalidInput(path + ": write failed");
}

void emit_convergence(const SweepTable& table, EmitFormat format, const std::string& path) {
  std::ofstream out;
  open_out(out, path);
  if (format == EmitFormat::csv) {
    out << "run_id,iteration,objective,penalty,dinkelbach\n";
    for (const auto& r : table.rows)
      for (size_t i = 0; i < r.objective_trace.size(); ++i) {
        const double pen = i < r.penalty_trace.size() ? r.penalty_trace[i] : 0.0;
        const double din = i < r.dinkelbach_trace.size() ? r.dinkelbach_trace[i] : 0.0;
        out << r.run_id << "," << (i + 1) << "," << fmt(r.objective_trace[i]) << ","
            << fmt(pen) << "," << fmt(din) << "\n";
      }
  } else {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : table.rows)
      for (size_t i = 0; i < r.objective_trace.size(); ++i) {
        const double pen = i < r.penalty_trace.size() ? r.penalty_trace[i] : 0.0;
        const double din = i < r.dinkelbach_trace.size() ? r.dinkelbach_trace[i] : 0.0;
        j.push_back({{"run_id", r.run_id},
                     {"iteration", i + 1},
                     {"objective", r.objective_trace[i]},
                     {"penalty", pen},
                     {"dinkelbach", din}});
      }
    out << j.dump(2) << "\n";
  }
  if (!out) throw InvalidInput(path + ": write failed");
}

void emit_beampattern(const std::vector<BeampatternRow>& rows, EmitFormat format,
                      const std::string& path) {
  std::ofstream out;
  open_out(out, path);
  if (format == EmitFormat::csv) {
    out << "matrix_id,angle_deg,gain_db\n";
    for (const auto& r : rows)
      out << r.matrix_id << "," << fmt(r.angle_deg) << "," << fmt(r.gain_db) << "\n";
  } else {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : rows)
      j.push_back(
          {{"matrix_id", r.matrix_id}, {"angle_deg", r.angle_deg}, {"gain_db", r.gain_db}});
    out << j.dump(2) << "\n";
  }
  if (!out) throw InvalidInput(path + ": write failed");
}

void emit_validation(const ValidationReport& report, EmitFormat format,
                     const std::string& path) {
  std::ofstream out;
  open_out(out, path);
  if (format == EmitFormat::csv) {
    out << "link,max_deviation,samples\n";
    for (const auto& e : report.entries)
      out << e.link << "," << fmt(e.deviation) << "," << report.samples << "\n";
  } else {
    nlohmann::json j;
    j["samples"] = report.samples;
    j["max_deviation"] = report.max_deviation;
    j["entries"] = nlohmann::json::array();
    for (const auto& e : report.entries)
      j["entries"].push_back({{"link", e.link}, {"deviation", e.deviation}});
    out << j.dump(2) << "\n";
  }
  if (!out) throw InvalidInput(path + ": write failed");
}

}  // namespace risac
