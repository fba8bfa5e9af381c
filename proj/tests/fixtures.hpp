#pragma once

#include <vector>

#include "hwymarl/traffic.hpp"

namespace fixtures {

inline hwy::VehicleState car(hwy::VehicleId id, double x, double v, int lane = 0,
                             hwy::VehicleKind kind = hwy::VehicleKind::HDV, double lane_width = 4.0) {
    hwy::VehicleState s;
    s.id = id;
    s.kind = kind;
    s.lane = s.target_lane = s.source_lane = lane;
    s.x = x;
    s.y = lane * lane_width;
    s.v = v;
    s.desired_speed = kind == hwy::VehicleKind::AV ? v : 30.0;
    return s;
}

inline hwy::VehicleState av(hwy::VehicleId id, double x, double v, int lane = 0) {
    return car(id, x, v, lane, hwy::VehicleKind::AV);
}

// Vehicles must be passed in ascending id order.
inline hwy::WorldState world(std::vector<hwy::VehicleState> vehicles, double length = 520.0) {
    hwy::WorldState w;
    w.road.length = length;
    w.vehicles = std::move(vehicles);
    return w;
}

inline hwy::CommandMap keep_all(const hwy::WorldState& w, double a = 0.0) {
    hwy::CommandMap c;
    for (const auto& v : w.vehicles) c[v.id] = {a, hwy::LaneDecision::Keep};
    return c;
}

}  // namespace fixtures
