#pragma once

// Artifact formatting. CSV: ',' separator, '.' decimal, LF line endings,
// doubles at 17 significant digits. JSON through nlohmann::json.
//
// Column layouts:
//   map CSV          x, y, re_l0, im_l0, ..., re_l{d-1}, im_l{d-1}, min_gap, max_overlap
//   spectrum CSV     index, re, im, defective, cluster
//   trajectory CSV   t, re_s0, im_s0, ..., norm, re_ebar, im_ebar, sheet_index, c2_0, ..., log_norm
//   tscan CSV        T, ccw_fidelity, cw_fidelity, verdict, adiabaticity_ratio
//   steady CSV       Omega, Delta, discriminant, roots, n_0, n_1, n_2, stable_0, stable_1, stable_2
//   rydberg traj CSV t, n_R, re_rho21, im_rho21, Omega, Delta

#include <string>
#include <vector>

#include "lep/config.hpp"
#include "lep/dynamics.hpp"
#include "lep/linalg.hpp"
#include "lep/rydberg.hpp"
#include "lep/spectra.hpp"

namespace lep::cli {

/// 17 significant digits, general notation.
std::string csv_number(double v);

std::string map_csv(const spectra::GridScan& grid);
std::string map_json(const spectra::ExceptionalMap& map);

std::string spectrum_csv(const linalg::SpectralDecomposition& d);
std::string spectrum_json(const ExperimentConfig& cfg, const linalg::SpectralDecomposition& d);

std::string trajectory_csv(const dynamics::TrajectoryRecord& traj);
std::string chirality_json(const ExperimentConfig& cfg, const dynamics::ChiralityReport& rep);
std::string direction_json(const ExperimentConfig& cfg, const dynamics::DirectionResult& r, int initial_index);

struct PeriodScanRow {
    double T = 0.0;
    double ccw_fidelity = 0.0;
    double cw_fidelity = 0.0;
    dynamics::Verdict verdict = dynamics::Verdict::Ambiguous;
    double adiabaticity_ratio = 0.0;
};

std::vector<double> log_periods(double t_min, double t_max, int points);
std::string tscan_csv(const std::vector<PeriodScanRow>& rows);

std::string steady_csv(const rydberg::SteadyScan& scan);
std::string folds_json(const rydberg::BistabilityMap& map);
std::string conditions_json(const rydberg::TransferConditions& c);
std::string rydberg_trajectory_csv(const rydberg::RydbergTrajectory& traj);
std::string transfer_json(const ExperimentConfig& cfg, const std::vector<const rydberg::SteadyDirection*>& runs,
                          bool chiral);

}  // namespace lep::cli
