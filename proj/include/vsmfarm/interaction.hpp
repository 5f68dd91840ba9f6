#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vsmfarm/control.hpp"
#include "vsmfarm/linearize.hpp"

namespace vsmfarm {

/// Loop identified by machine and loop id, e.g. "dfig3.GSCq".
struct LoopRef {
    std::size_t machine = 0;
    LoopId loop = LoopId::VSMP;

    std::string label() const;
    bool operator==(const LoopRef&) const = default;
};

/// The seven loops of one machine, in canonical order.
std::vector<LoopRef> machine_loops(std::size_t machine);
/// All loops of the farm, machine-major.
std::vector<LoopRef> farm_loops(std::size_t n_units);

struct ImpulseOptions {
    double t_f = 1.0;
    double dt = 1e-4;
};

/// Perturbation-rejection signals of one impulse experiment.
struct RejectionSignals {
    LoopRef perturbed;
    double t_f = 0.0;
    double dt = 0.0;
    std::vector<LoopRef> loops;  // recorded channels, one column each
    MatrixXd sigma;              // samples x loops
    bool unstable = false;

    Eigen::Index column(const LoopRef& r) const;
};

/// Unit impulse at d of `perturbed`, realized as x(0) = B e_i and stepped with
/// the exact discretization exp(A dt). Records the s-output of every loop in `record`.
RejectionSignals impulse_rejection(const LinearModel& lin, const LoopRef& perturbed,
                                   const std::vector<LoopRef>& record,
                                   const ImpulseOptions& opt = {});

/// One experiment per entry of `loops`, sharing one matrix exponential.
std::vector<RejectionSignals> impulse_rejection_all(const LinearModel& lin,
                                                    const std::vector<LoopRef>& loops,
                                                    const ImpulseOptions& opt = {});

/// Trapezoid rule on a uniform grid.
double trapezoid(const Eigen::Ref<const VectorXd>& f, double dt);

struct InteractionMatrix {
    std::vector<LoopRef> loops;
    MatrixXd rho;  // row: perturbed loop, column: responding loop
    std::vector<std::pair<std::size_t, std::size_t>> zero_energy;
};

/// rho_ij = |int s_j s_i| / sqrt(int s_j^2 int s_i^2) over the i-th experiment.
InteractionMatrix correlation_matrix(const std::vector<RejectionSignals>& experiments);

struct LoopIndices {
    std::vector<LoopRef> loops;
    std::vector<double> iidx;  // influence: off-diagonal row mean
    std::vector<double> sidx;  // susceptibility: off-diagonal column mean
};

LoopIndices influence_indices(const InteractionMatrix& m);

/// Loops ordered by descending IIdx averaged over the given machines (each
/// holding the seven loops of one machine), ties in kTieBreakOrder.
std::vector<LoopId> redesign_sequence(const std::vector<LoopIndices>& per_machine);

/// Per-machine matrices and indices, the farm-wide matrix over all loops of
/// the listed machines, and the sequence averaged over `sequence_from`.
struct InteractionAnalysis {
    std::vector<std::size_t> machines;
    std::vector<InteractionMatrix> matrices;  // one per machine
    std::vector<LoopIndices> indices;
    InteractionMatrix farm;
    std::vector<LoopId> sequence;
    bool unstable = false;
};

/// `sequence_from` empty means every listed machine.
InteractionAnalysis analyze_interaction(const LinearModel& lin, const std::vector<std::size_t>& machines,
                                        const ImpulseOptions& opt = {},
                                        const std::vector<std::size_t>& sequence_from = {});

void write_rho_csv(std::ostream& os, const InteractionMatrix& m);
/// Plain value grid (no labels), one row per line.
void write_heatmap(std::ostream& os, const InteractionMatrix& m);
void write_indices_csv(std::ostream& os, const std::vector<LoopIndices>& per_machine);
void write_sequence(std::ostream& os, const std::vector<LoopId>& seq);

}  // namespace vsmfarm
