#include "hwymarl/hdv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hwymarl/errors.hpp"

namespace hwy {

void IdmParams::validate() const {
    if (!(v0 > 0 && T > 0 && a_max > 0 && b_comf > 0 && delta > 0 && s0 > 0)) {
        throw ContractError("IDM parameters must all be strictly positive");
    }
}

void MobilParams::validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw ContractError("politeness must lie in [0, 1]");
    if (!(b_safe > 0.0)) throw ContractError("b_safe must be positive");
    if (!(delta_a_th >= 0.0)) throw ContractError("delta_a_th must be non-negative");
}

double idm_desired_gap(double v, double dv, const IdmParams& params) {
    // The dynamic part never goes negative, so a fast leader cannot demand a gap below s0.
    const double dynamic = v * params.T + v * dv / (2.0 * std::sqrt(params.a_max * params.b_comf));
    return params.s0 + std::max(0.0, dynamic);
}

double idm_equilibrium_gap(double v, const IdmParams& params) {
    const double free_term = std::pow(v / params.v0, params.delta);
    if (free_term >= 1.0) return std::numeric_limits<double>::infinity();
    return idm_desired_gap(v, 0.0, params) / std::sqrt(1.0 - free_term);
}

IdmOutcome idm_evaluate(double v, std::optional<double> gap, std::optional<double> v_leader, const IdmParams& params) {
    if (gap && *gap <= 0.0) return {-kMaxBraking, true, -std::numeric_limits<double>::infinity()};
    double a = 1.0 - std::pow(v / params.v0, params.delta);
    if (gap) {
        const double dv = v - v_leader.value_or(v);
        const double ratio = idm_desired_gap(v, dv, params) / *gap;
        a -= ratio * ratio;
    }
    const double demand = params.a_max * a;
    return {std::clamp(demand, -kMaxBraking, params.a_max), false, demand};
}

bool mobil_safety(double a_new_follower_after, const MobilParams& params) {
    return a_new_follower_after >= -params.b_safe;
}

bool mobil_incentive(double a_c, double a_c_tilde, double a_n, double a_n_tilde, double a_o, double a_o_tilde,
                     const MobilParams& params) {
    const double own = a_c_tilde - a_c;
    if (params.p == 0.0) return own >= params.delta_a_th;
    return own + params.p * ((a_n_tilde - a_n) + (a_o_tilde - a_o)) >= params.delta_a_th;
}

namespace {

IdmParams with_desired_speed(IdmParams p, const VehicleState& v) {
    p.v0 = v.desired_speed;
    return p;
}

// IDM outcome for `rear` if it followed `front` (or drove freely when front is null).
IdmOutcome idm_behind(const VehicleState& rear, const VehicleState* front, const IdmParams& idm) {
    const IdmParams p = with_desired_speed(idm, rear);
    if (!front) return idm_evaluate(rear.v, std::nullopt, std::nullopt, p);
    return idm_evaluate(rear.v, bumper_gap(rear, *front), front->v, p);
}

double demand_behind(const VehicleState& rear, const VehicleState* front, const IdmParams& idm) {
    return idm_behind(rear, front, idm).demand;
}

const VehicleState* lookup(const WorldState& world, const std::optional<LeaderInfo>& info) {
    return info ? &world.vehicle(info->id) : nullptr;
}

}  // namespace

Command hdv_decide(const WorldState& world, VehicleId id, const IdmParams& idm, const MobilParams& mobil) {
    const VehicleState& ego = world.vehicle(id);
    if (ego.kind != VehicleKind::HDV) throw ContractError("vehicle " + std::to_string(id) + " is not an HDV");

    if (ego.changing_lane()) {
        return {idm_behind(ego, lookup(world, leader(world, id, ego.target_lane)), idm).acceleration,
                LaneDecision::Keep};
    }

    const VehicleState* cur_leader = lookup(world, leader(world, id, ego.lane));
    const VehicleState* old_follower = lookup(world, follower(world, id, ego.lane));
    const IdmOutcome current = idm_behind(ego, cur_leader, idm);
    const double a_c = current.demand;
    double a_o = 0.0, a_o_tilde = 0.0;
    if (old_follower) {
        a_o = demand_behind(*old_follower, &ego, idm);
        a_o_tilde = demand_behind(*old_follower, cur_leader, idm);
    }

    LaneDecision best = LaneDecision::Keep;
    double best_gain = 0.0;
    for (const LaneDecision side : {LaneDecision::Left, LaneDecision::Right}) {
        const int lane = ego.lane + (side == LaneDecision::Left ? -1 : 1);
        if (!world.road.valid_lane(lane)) continue;

        const auto lead_info = leader(world, id, lane);
        const auto follow_info = follower(world, id, lane);
        // Physically blocked: the ego would overlap a vehicle already in the target lane.
        if ((lead_info && lead_info->gap <= 0.0) || (follow_info && follow_info->gap <= 0.0)) continue;
        const VehicleState* new_leader = lookup(world, lead_info);
        const VehicleState* new_follower = lookup(world, follow_info);

        const double a_c_tilde = demand_behind(ego, new_leader, idm);
        double a_n = 0.0, a_n_tilde = 0.0;
        if (new_follower) {
            a_n = demand_behind(*new_follower, lookup(world, leader(world, new_follower->id, lane)), idm);
            a_n_tilde = demand_behind(*new_follower, &ego, idm);
            if (!mobil_safety(a_n_tilde, mobil)) continue;
        }
        if (!mobil_incentive(a_c, a_c_tilde, a_n, a_n_tilde, a_o, a_o_tilde, mobil)) continue;

        const double gain = a_c_tilde - a_c;
        if (best == LaneDecision::Keep || gain > best_gain) {
            best = side;
            best_gain = gain;
        }
    }
    return {current.acceleration, best};
}

}  // namespace hwy
