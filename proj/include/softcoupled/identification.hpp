#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "softcoupled/model.hpp"

namespace softcoupled {

/// One static measurement: configuration, torque on the observed coordinate
/// and which coordinates were externally held.
struct IdSample {
  VectorXd q;
  double tau_measured = 0.0;
  std::vector<bool> held;
};

struct FitResult {
  CouplingFamily family = CouplingFamily::Linear;
  double k_hat = 0.0;
  double r_squared = 0.0;
  std::vector<double> residuals;
  std::size_t n_samples = 0;
  /// Set when k_hat < 0.
  bool negative_stiffness = false;
};

/// Coupling geometry shared by all families during identification: the
/// coordinate pair for Linear/NeoHookean and the segment pair for the
/// integral families. `observed` is the coordinate whose torque is measured.
struct IdentificationSetup {
  int coord_i = 0;
  int coord_j = 1;
  SegmentRef segment_a{0, 0};
  SegmentRef segment_b{1, 0};
  int quadrature_points = 20;
  int observed = 1;

  CouplingSpec unit_spec(CouplingFamily family) const;
};

/// Unit-stiffness coupling torque on the observed coordinate; the model
/// predicts tau = k * regressor.
double regressor(CouplingFamily family, const RobotModel& model,
                 const IdentificationSetup& setup, const VectorXd& q);

/// One-parameter OLS through the origin, k = sum(phi tau) / sum(phi^2), with
/// R^2 = 1 - SS_res / SS_tot and SS_tot taken about the torque mean.
/// Throws Error(DegenerateDataset) for fewer than two samples or all-zero
/// regressors.
FitResult fit_stiffness(CouplingFamily family, const RobotModel& model,
                        const IdentificationSetup& setup,
                        const std::vector<IdSample>& dataset);

/// Sampling plan for synthetic identification data. For every actuated
/// angle in the grid one held sample per entry of `held_angles` is taken;
/// with `include_free`, one more sample lets the observed link settle where
/// its own spring balances the coupling.
struct SyntheticProtocol {
  double actuated_min = -0.6;
  double actuated_max = 0.6;
  int actuated_count = 30;
  std::vector<double> held_angles{-0.2, 0.2};
  bool include_free = true;
  /// Absolute noise standard deviation (N m).
  double noise_std = 0.0;
  /// Additional noise as a fraction of the noiseless torque range.
  double noise_fraction = 0.0;
};

std::vector<IdSample> generate_synthetic_dataset(
    const RobotModel& model, const IdentificationSetup& setup,
    CouplingFamily family, double k_true, const SyntheticProtocol& protocol,
    std::uint64_t seed);

/// Dataset CSV: header q_1,...,q_n,tau,held_1,...,held_n.
void write_dataset_csv(const std::vector<IdSample>& data, const std::string& path);
std::vector<IdSample> read_dataset_csv(const std::string& path);

}  // namespace softcoupled
