// SPDX-License-Identifier: Apache-2.0
#include "channel.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

namespace dcbleo::channel {

namespace {

constexpr double kSpeedOfLight = 299792458.0;

void check_lengths(std::size_t powers, std::size_t distances) {
    if (powers != distances || powers == 0)
        throw ShapeError(fmt::format("allocation ({}) and distances ({}) must have equal non-zero length", powers,
                                     distances));
}

// Per-terminal amplitude gain sqrt(beta0 d^-alpha).
std::vector<double> amplitude_gains(std::span<const double> distances, const RfConstants& rf) {
    std::vector<double> g(distances.size());
    for (std::size_t i = 0; i < distances.size(); ++i) {
        if (!(distances[i] > 0.0)) throw DomainError("link distance must be positive");
        g[i] = std::sqrt(rf.channel_power_gain * std::pow(distances[i], -rf.path_loss_exponent));
    }
    return g;
}

struct P2Function {
    std::vector<double> gains;
    double energy_coeff;  // a * rho0 * dt
    double snr_coeff;     // b / sigma^2

    double value(const std::vector<double>& p) const {
        double total = 0.0, amp = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            total += p[i];
            amp += std::sqrt(p[i]) * gains[i];
        }
        return energy_coeff * total - snr_coeff * amp * amp;
    }

    void gradient(const std::vector<double>& p, std::vector<double>& g) const {
        double amp = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) amp += std::sqrt(p[i]) * gains[i];
        for (std::size_t i = 0; i < p.size(); ++i)
            g[i] = energy_coeff - snr_coeff * amp * gains[i] / std::sqrt(p[i]);
    }
};

}  // namespace

void RfConstants::validate() const {
    if (!(p_min > 0.0 && p_min <= p_max)) throw ConfigError("rf: require 0 < p_min <= p_max");
    if (!(path_loss_exponent >= 2.0)) throw ConfigError("rf: require path_loss_exponent >= 2");
    if (!(noise_power > 0.0)) throw ConfigError("rf: require noise_power > 0");
    if (!(bandwidth > 0.0)) throw ConfigError("rf: require bandwidth > 0");
    if (!(channel_power_gain > 0.0)) throw ConfigError("rf: require channel_power_gain > 0");
    if (!(carrier_frequency > 0.0)) throw ConfigError("rf: require carrier_frequency > 0");
    if (!(rho0 > 0.0)) throw ConfigError("rf: require rho0 > 0");
}

double PowerAllocation::total() const { return std::accumulate(powers.begin(), powers.end(), 0.0); }

double free_space_gain(double carrier_frequency) {
    const double lambda = kSpeedOfLight / carrier_frequency;
    const double r = lambda / (4.0 * std::numbers::pi);
    return r * r;
}

double noise_power_from_psd(double psd_dbm_per_hz, double bandwidth) {
    return std::pow(10.0, psd_dbm_per_hz / 10.0) * 1e-3 * bandwidth;
}

double balanced_rho0(const RfConstants& rf, std::size_t num_terminals, double reference_distance,
                     double slot_duration) {
    return static_cast<double>(num_terminals) * rf.channel_power_gain *
           std::pow(reference_distance, -rf.path_loss_exponent) / (rf.noise_power * slot_duration);
}

double link_distance(const GroundPoint& terminal, const Vec3& sat_local) {
    return (sat_local - terminal.as_vec3()).norm();
}

double snr(const PowerAllocation& alloc, std::span<const double> distances, const RfConstants& rf) {
    check_lengths(alloc.size(), distances.size());
    const auto g = amplitude_gains(distances, rf);
    double amp = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) amp += std::sqrt(alloc.powers[i]) * g[i];
    return amp * amp / rf.noise_power;
}

double achievable_rate(double snr_value, const RfConstants& rf) {
    if (snr_value < 0.0) throw DomainError("snr must be >= 0");
    return rf.bandwidth * std::log2(1.0 + snr_value);
}

double p2_objective(const PowerAllocation& alloc, std::span<const double> distances, const RfConstants& rf,
                    const WeightScheme& scheme, double slot_duration) {
    check_lengths(alloc.size(), distances.size());
    return scheme.a * rf.rho0 * alloc.total() * slot_duration - scheme.b * snr(alloc, distances, rf);
}

SolveReport solve_p2_detailed(std::span<const double> distances, const RfConstants& rf, const WeightScheme& scheme,
                              double slot_duration, const SolverOptions& options) {
    if (distances.empty()) throw ShapeError("solve_p2 needs at least one terminal");
    const P2Function f{amplitude_gains(distances, rf), scheme.a * rf.rho0 * slot_duration,
                       scheme.b / rf.noise_power};
    const std::size_t n = distances.size();
    const double lo = rf.p_min, hi = rf.p_max, span = hi - lo;
    auto project = [&](double v) { return std::clamp(v, lo, hi); };

    std::vector<double> x(n, 0.5 * (lo + hi)), grad(n), trial(n);
    double fx = f.value(x);
    SolveReport report;
    if (span == 0.0) {
        report.converged = true;
    }

    double step_scale = 1.0;
    for (int it = 0; it < options.max_iterations && !report.converged; ++it) {
        report.iterations = it + 1;
        f.gradient(x, grad);
        double gmax = 0.0;
        for (double g : grad) gmax = std::max(gmax, std::abs(g));
        if (gmax == 0.0) {
            report.converged = true;
            break;
        }
        // Scale-free stationarity measure: the projected step a full-span move would take.
        const double unit = span / gmax;
        double pg = 0.0;
        for (std::size_t i = 0; i < n; ++i) pg = std::max(pg, std::abs(project(x[i] - unit * grad[i]) - x[i]));
        if (pg <= options.tolerance * span) {
            report.converged = true;
            break;
        }

        double t = unit * step_scale;
        bool accepted = false;
        for (int bt = 0; bt < 80; ++bt) {
            double decrease = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                trial[i] = project(x[i] - t * grad[i]);
                decrease += grad[i] * (trial[i] - x[i]);
            }
            const double ft = f.value(trial);
            if (ft <= fx + options.armijo * decrease) {
                accepted = ft < fx;
                x.swap(trial);
                fx = ft;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            // No representable decrease left.
            report.converged = true;
            break;
        }
        step_scale = std::min(1.0, 2.0 * t / unit);
    }
    report.allocation.powers = std::move(x);
    report.objective = fx;
    return report;
}

PowerAllocation solve_p2(std::span<const double> distances, const RfConstants& rf, const WeightScheme& scheme,
                         double slot_duration) {
    return solve_p2_detailed(distances, rf, scheme, slot_duration).allocation;
}

std::vector<WeightScheme> weight_set(int cardinality) {
    if (cardinality < 1) throw DomainError("weight set cardinality must be >= 1");
    std::vector<WeightScheme> out;
    out.reserve(static_cast<std::size_t>(cardinality));
    for (int k = 1; k <= cardinality; ++k) {
        const double a = static_cast<double>(k) / cardinality;
        out.push_back({a, 1.0 - a, k});
    }
    return out;
}

}  // namespace dcbleo::channel
