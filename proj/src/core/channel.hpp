// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "common.hpp"

namespace dcbleo::channel {

struct RfConstants {
    double channel_power_gain = 0.0;  // beta0, reference gain at 1 m
    double path_loss_exponent = 2.0;  // alpha
    double noise_power = 0.0;         // sigma^2, W
    double bandwidth = 1e7;           // B, Hz
    double carrier_frequency = 2.4e9;  // Hz
    double p_min = 1.0;               // W
    double p_max = 2.0;               // W
    double rho0 = 1.0;                // energy-term normaliser of the power subproblem

    void validate() const;
};

struct PowerAllocation {
    std::vector<double> powers;  // W, one per terminal

    [[nodiscard]] double total() const;
    [[nodiscard]] std::size_t size() const { return powers.size(); }
};

/// One point of the discretised trade-off between energy (a) and SNR (b).
struct WeightScheme {
    double a = 0.0;
    double b = 0.0;
    int k = 0;  // 1-based index into the scheme set
};

/// Free-space reference gain (lambda / 4 pi)^2 at 1 m.
double free_space_gain(double carrier_frequency);

/// Noise power in W for a PSD given in dBm/Hz over `bandwidth` Hz.
double noise_power_from_psd(double psd_dbm_per_hz, double bandwidth);

/// Energy normaliser that puts both terms of the power subproblem on the SNR scale at distance `reference_distance`:
/// n * beta0 * d_ref^-alpha / (sigma^2 * dt).
double balanced_rho0(const RfConstants& rf, std::size_t num_terminals, double reference_distance, double slot_duration);

double link_distance(const GroundPoint& terminal, const Vec3& sat_local);

/// (sum_i sqrt(P_i beta0 d_i^-alpha))^2 / sigma^2 with phases perfectly aligned.
double snr(const PowerAllocation& alloc, std::span<const double> distances, const RfConstants& rf);

/// B log2(1 + snr), bps.
double achievable_rate(double snr_value, const RfConstants& rf);

/// a rho0 sum_i P_i dt - b * snr(P).
double p2_objective(const PowerAllocation& alloc, std::span<const double> distances, const RfConstants& rf,
                    const WeightScheme& scheme, double slot_duration);

struct SolverOptions {
    int max_iterations = 10000;
    double tolerance = 1e-8;  // on the scale-free projected-gradient step, relative to (p_max - p_min)
    double armijo = 1e-4;
};

struct SolveReport {
    PowerAllocation allocation;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Projected gradient descent with Armijo backtracking on the box [p_min, p_max]^N,
/// started at the box midpoint.
SolveReport solve_p2_detailed(std::span<const double> distances, const RfConstants& rf, const WeightScheme& scheme,
                              double slot_duration, const SolverOptions& options = {});

PowerAllocation solve_p2(std::span<const double> distances, const RfConstants& rf, const WeightScheme& scheme,
                         double slot_duration);

/// Schemes k = 1..cardinality with a_k = k / cardinality, b_k = 1 - a_k.
std::vector<WeightScheme> weight_set(int cardinality);

}  // namespace dcbleo::channel
