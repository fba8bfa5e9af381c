#pragma once

#include <optional>

#include "hwymarl/traffic.hpp"

namespace hwy {

// Hard braking floor shared by IDM output clamping and the MOBIL safety bound.
inline constexpr double kMaxBraking = 9.0;

struct IdmParams {
    double v0 = 30.0;      // desired speed
    double T = 1.5;        // desired time headway
    double a_max = 3.0;
    double b_comf = 5.0;
    double delta = 4.0;
    double s0 = 10.0;      // minimum gap

    void validate() const;
};

struct MobilParams {
    double p = 0.0;           // politeness
    double b_safe = 9.0;      // braking magnitude the new follower may be forced into
    double delta_a_th = 0.1;  // incentive threshold

    void validate() const;
};

struct IdmOutcome {
    double acceleration;  // clamped to [-kMaxBraking, a_max]
    bool emergency;       // gap <= 0: vehicles already overlap
    double demand;        // unclamped model value (-inf when overlapping); what MOBIL judges
};

IdmOutcome idm_evaluate(double v, std::optional<double> gap, std::optional<double> v_leader, const IdmParams& params);

inline double idm_acceleration(double v, std::optional<double> gap, std::optional<double> v_leader,
                               const IdmParams& params) {
    return idm_evaluate(v, gap, v_leader, params).acceleration;
}

// Desired dynamic gap s* for speed v closing at dv on the leader.
double idm_desired_gap(double v, double dv, const IdmParams& params);

// Steady-state bumper gap when following a leader at the same speed v.
double idm_equilibrium_gap(double v, const IdmParams& params);

bool mobil_safety(double a_new_follower_after, const MobilParams& params);

bool mobil_incentive(double a_c, double a_c_tilde, double a_n, double a_n_tilde, double a_o, double a_o_tilde,
                     const MobilParams& params);

// IDM + MOBIL decision for one human-driven vehicle, evaluated on the given snapshot.
// Each vehicle's own desired_speed replaces idm.v0. MOBIL compares unclamped IDM
// demands, so a follower that would need more than b_safe of braking vetoes the
// change; the returned acceleration is the clamped current-lane value.
Command hdv_decide(const WorldState& world, VehicleId id, const IdmParams& idm, const MobilParams& mobil);

}  // namespace hwy
