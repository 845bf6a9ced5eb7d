// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "common.hpp"

namespace dcbleo::orbits {

struct PhysicalConstants {
    double earth_radius = 6.371e6;             // m
    double gravitational_constant = 6.674e-11;  // m^3 kg^-1 s^-2
    double earth_mass = 5.972e24;              // kg

    void validate() const;
};

/// Keplerian elements of one circular orbit. Angles in radians, lengths in metres.
struct OrbitalElements {
    double inclination = 0.0;
    double raan = 0.0;
    double argument_of_perigee = 0.0;  // value at slot 0
    double eccentricity = 0.0;
    double semi_major_axis = 0.0;      // = altitude + earth radius
    double true_anomaly = 0.0;
    double altitude = 0.0;

    /// Builds a circular orbit; angles are wrapped into [0, 2pi).
    static OrbitalElements circular(double inclination, double raan, double argument_of_perigee,
                                    double true_anomaly, double altitude, const PhysicalConstants& constants);

    void validate(const PhysicalConstants& constants) const;
};

struct SatellitePosition {
    Vec3 position;  // Earth-centred inertial, m
    int slot = 0;
};

/// sqrt(G M / H^3) in rad/s.
double angular_velocity(const OrbitalElements& elements, const PhysicalConstants& constants);

/// 2 pi / angular velocity, in s.
double orbital_period(const OrbitalElements& elements, const PhysicalConstants& constants);

/// In-plane phase omega^t = omega_init + (t * dt * angular velocity mod 2 pi), wrapped into [0, 2pi).
double phase_at(const OrbitalElements& elements, const PhysicalConstants& constants, int slot, double slot_duration);

SatellitePosition position_at(const OrbitalElements& elements, const PhysicalConstants& constants, int slot,
                              double slot_duration);

/// Tangent-plane frame anchored on the equator at `longitude`.
/// Local axes: x east, y north, z up; the origin sits on the Earth's surface.
struct LocalFrame {
    double longitude = 0.0;
    double earth_radius = 6.371e6;

    [[nodiscard]] Vec3 to_local(const Vec3& inertial) const;
};

/// Elevation of `sat_local` seen from `terminal`, in [-pi/2, pi/2]. Both in the local frame.
/// Throws DomainError when the points coincide.
double elevation_angle(const Vec3& sat_local, const GroundPoint& terminal);

/// Closed boundary: an elevation exactly at `min_elevation` counts as visible.
bool is_geometrically_visible(const Vec3& sat_local, const GroundPoint& terminal, double min_elevation);

}  // namespace dcbleo::orbits
