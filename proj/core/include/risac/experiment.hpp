#pragma once

#include <optional>
#include <string>
#include <vector>

#include "risac/scenario.hpp"

namespace risac {

enum class SweepAxis { crb_threshold, antennas, qos_threshold, secrecy_threshold, p_max };
std::string to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(const std::string& s);

struct SweepSpec {
  SweepAxis axis = SweepAxis::crb_threshold;
  std::vector<double> values;               // strictly monotone
  std::vector<Algorithm> algorithms;
  std::vector<Scheme> schemes;

  void validate() const;
};

struct SweepRow {
  std::string run_id;
  Algorithm algorithm = Algorithm::alg1;
  Scheme scheme = Scheme::scheme1;
  double axis_value = 0.0;
  double objective = 0.0;
  double power_w = 0.0;
  double min_rate = 0.0;
  double min_secrecy_rate = 0.0;
  double crb_det = 0.0;
  int iterations = 0;
  RunStatus status = RunStatus::numerical_failure;
  std::vector<double> objective_trace;
  std::vector<double> penalty_trace;
  std::vector<double> dinkelbach_trace;
};

struct SweepTable {
  std::vector<SweepRow> rows;
};

struct BeampatternRow {
  std::string matrix_id;
  double angle_deg = 0.0;
  double gain_db = 0.0;
};

struct ValidationReport {
  struct Entry {
    std::string link;      // "user1", "eve2", ...
    double deviation = 0.0;  // max relative deviation across trial matrices
  };
  std::vector<Entry> entries;
  int samples = 0;
  double max_deviation = 0.0;
};

/// Runs one algorithm on one scenario (a single-row "sweep").
SweepRow run_single(const ScenarioConfig& config, Algorithm algorithm, Scheme scheme,
                    std::optional<double> axis_value = std::nullopt,
                    SweepAxis axis = SweepAxis::crb_threshold);

/// Runs every (axis value x algorithm x scheme) combination on a bounded
/// worker pool. Individual failures are recorded per row; the sweep
/// continues.
SweepTable run_sweep(const SweepSpec& spec, const ScenarioConfig& base,
                     int num_workers = 0);

/// Beamforming gain a_t(theta)^H W a_t(theta) per matrix over the angle grid,
/// in dB with a -120 dB floor.
std::vector<BeampatternRow> beampattern(const BeamformerSet& bf,
                                        const std::vector<double>& angle_grid_rad,
                                        const ArrayConfig& array);

/// The default [-90 deg, 90 deg] grid in 0.5 deg steps.
std::vector<double> default_angle_grid();

/// Monte-Carlo check of E{h^H W h} = tr(H W) for every link against the
/// closed-form covariances, over random PSD trial matrices.
ValidationReport validate_statistics(const ScenarioConfig& config, int samples);

enum class EmitFormat { csv, json };

/// Stable-format emitters. CSV columns:
///   results:     run_id,algorithm,scheme,axis_value,objective,power_w,
///                min_rate,min_secrecy_rate,crb_det,iterations,status
///   convergence: run_id,iteration,objective,penalty,dinkelbach
///   beampattern: matrix_id,angle_deg,gain_db
void emit_results(const SweepTable& table, EmitFormat format, const std::string& path);
void emit_convergence(const SweepTable& table, EmitFormat format, const std::string& path);
void emit_beampattern(const std::vector<BeampatternRow>& rows, EmitFormat format,
                      const std::string& path);
void emit_validation(const ValidationReport& report, EmitFormat format,
                     const std::string& path);

std::string results_csv_header();

}  // namespace risac
