// SPDX-License-Identifier: Apache-2.0
#include "orbits.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace dcbleo::orbits {

void PhysicalConstants::validate() const {
    if (!(earth_radius > 0.0)) throw ConfigError("earth_radius must be > 0");
    if (!(gravitational_constant > 0.0)) throw ConfigError("gravitational_constant must be > 0");
    if (!(earth_mass > 0.0)) throw ConfigError("earth_mass must be > 0");
}

OrbitalElements OrbitalElements::circular(double inclination, double raan, double argument_of_perigee,
                                          double true_anomaly, double altitude,
                                          const PhysicalConstants& constants) {
    OrbitalElements e;
    e.inclination = wrap_angle(inclination);
    e.raan = wrap_angle(raan);
    e.argument_of_perigee = wrap_angle(argument_of_perigee);
    e.true_anomaly = wrap_angle(true_anomaly);
    e.eccentricity = 0.0;
    e.altitude = altitude;
    e.semi_major_axis = altitude + constants.earth_radius;
    return e;
}

void OrbitalElements::validate(const PhysicalConstants& constants) const {
    if (eccentricity != 0.0) throw ConfigError("eccentricity must be 0 (circular orbits only)");
    if (!(altitude > 0.0)) throw ConfigError("altitude must be > 0");
    if (semi_major_axis != altitude + constants.earth_radius)
        throw ConfigError("semi_major_axis must equal altitude + earth_radius");
    for (double a : {inclination, raan, argument_of_perigee, true_anomaly}) {
        if (!(a >= 0.0 && a < kTwoPi)) throw ConfigError("orbital angles must lie in [0, 2pi)");
    }
}

double angular_velocity(const OrbitalElements& elements, const PhysicalConstants& constants) {
    const double h = elements.semi_major_axis;
    if (!(h > 0.0)) throw DomainError(fmt::format("semi-major axis must be positive, got {}", h));
    return std::sqrt(constants.gravitational_constant * constants.earth_mass / (h * h * h));
}

double orbital_period(const OrbitalElements& elements, const PhysicalConstants& constants) {
    return kTwoPi / angular_velocity(elements, constants);
}

double phase_at(const OrbitalElements& elements, const PhysicalConstants& constants, int slot,
                double slot_duration) {
    if (slot < 0) throw DomainError("slot index must be >= 0");
    const double swept = std::fmod(static_cast<double>(slot) * slot_duration * angular_velocity(elements, constants),
                                   kTwoPi);
    return wrap_angle(elements.argument_of_perigee + swept);
}

SatellitePosition position_at(const OrbitalElements& elements, const PhysicalConstants& constants, int slot,
                              double slot_duration) {
    const double u = phase_at(elements, constants, slot, slot_duration) + elements.true_anomaly;
    const double h = elements.semi_major_axis;
    const double cu = std::cos(u), su = std::sin(u);
    const double co = std::cos(elements.raan), so = std::sin(elements.raan);
    const double ci = std::cos(elements.inclination), si = std::sin(elements.inclination);
    return {{h * (cu * co - su * ci * so), h * (cu * so + su * ci * co), h * (su * si)}, slot};
}

Vec3 LocalFrame::to_local(const Vec3& inertial) const {
    const double cl = std::cos(longitude), sl = std::sin(longitude);
    const Vec3 up{cl, sl, 0.0};
    const Vec3 east{-sl, cl, 0.0};
    const Vec3 north{0.0, 0.0, 1.0};
    const Vec3 rel = inertial - earth_radius * up;
    return {rel.dot(east), rel.dot(north), rel.dot(up)};
}

double elevation_angle(const Vec3& sat_local, const GroundPoint& terminal) {
    const Vec3 ray = sat_local - terminal.as_vec3();
    const double r = ray.norm();
    if (r == 0.0) throw DomainError("elevation undefined: satellite coincides with terminal");
    return std::asin(std::clamp(ray.z / r, -1.0, 1.0));
}

bool is_geometrically_visible(const Vec3& sat_local, const GroundPoint& terminal, double min_elevation) {
    return elevation_angle(sat_local, terminal) >= min_elevation;
}

}  // namespace dcbleo::orbits
