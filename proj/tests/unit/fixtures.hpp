#pragma once

#include "vsmfarm/baseline.hpp"
#include "vsmfarm/interaction.hpp"
#include "vsmfarm/redesign.hpp"

namespace fixtures {

using namespace vsmfarm;

inline const FarmConfig& benchmark() {
    static const FarmConfig cfg = FarmConfig::benchmark();
    return cfg;
}

/// Trim with the initial gains.
inline const OperatingPoint& base_op() {
    static const OperatingPoint op = find_operating_point(FarmOde(benchmark(), initial_controllers(benchmark())));
    return op;
}

inline const ControllerSet& stage_a() {
    static const ControllerSet a =
        stage_a_controllers(FarmOde(benchmark(), initial_controllers(benchmark())), base_op());
    return a;
}

inline const OperatingPoint& stage_a_op() {
    static const OperatingPoint op = [] {
        TrimOptions to;
        to.initial = &base_op();
        return find_operating_point(FarmOde(benchmark(), stage_a()), to);
    }();
    return op;
}

/// Stage-A gains with every coupling present.
inline const LinearModel& stage_b_lin() {
    static const LinearModel lin = jacobian_linearize(FarmOde(benchmark(), stage_a()), stage_a_op());
    return lin;
}

inline const InteractionAnalysis& stage_b_interaction() {
    static const InteractionAnalysis a = analyze_interaction(stage_b_lin(), {0, 1, 2, 3}, {}, {0, 2});
    return a;
}

/// Two redesign passes along the derived sequence.
inline const RedesignResult& gamma() {
    static const RedesignResult r = [] {
        RedesignOptions o;
        o.iterations = 2;
        o.sequence = stage_b_interaction().sequence;
        return coordinated_redesign(benchmark(), stage_a(), base_op(), o);
    }();
    return r;
}

inline const LinearModel& gamma_lin() {
    static const LinearModel lin = jacobian_linearize(FarmOde(benchmark(), gamma().controllers), gamma().op);
    return lin;
}

}  // namespace fixtures
