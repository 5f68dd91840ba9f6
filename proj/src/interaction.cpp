#include "vsmfarm/interaction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <fmt/core.h>
#include <fmt/ostream.h>
#include <unsupported/Eigen/MatrixFunctions>

namespace vsmfarm {

std::string LoopRef::label() const {
    return fmt::format("dfig{}.{}", machine + 1, loop_name(loop));
}

std::vector<LoopRef> machine_loops(std::size_t machine) {
    std::vector<LoopRef> v;
    for (LoopId id : kAllLoops) v.push_back({machine, id});
    return v;
}

std::vector<LoopRef> farm_loops(std::size_t n_units) {
    std::vector<LoopRef> v;
    for (std::size_t k = 0; k < n_units; ++k)
        for (LoopId id : kAllLoops) v.push_back({k, id});
    return v;
}

Eigen::Index RejectionSignals::column(const LoopRef& r) const {
    for (std::size_t i = 0; i < loops.size(); ++i)
        if (loops[i] == r) return static_cast<Eigen::Index>(i);
    throw std::out_of_range(fmt::format("loop {} was not recorded", r.label()));
}

namespace {

std::string tag_name(const LoopRef& r, const char* kind) {
    return fmt::format("dfig{}.{}_{}", r.machine + 1, kind, loop_tag(r.loop));
}

struct Stepper {
    MatrixXd Phi;
    bool unstable = false;
    std::size_t steps = 0;
};

Stepper make_stepper(const LinearModel& lin, const ImpulseOptions& opt) {
    if (!(opt.dt > 0) || !(opt.t_f > 0)) throw std::invalid_argument("t_f and dt must be > 0");
    Stepper s;
    const double ratio = opt.t_f / opt.dt;
    s.steps = static_cast<std::size_t>(std::llround(ratio));
    if (std::abs(ratio - static_cast<double>(s.steps)) > 1e-9 * ratio)
        throw std::invalid_argument("t_f must be an integer multiple of dt");
    if (lin.A.rows() > 0) {
        const Eigen::VectorXcd ev = lin.A.eigenvalues();
        double fastest = 0.0;
        for (const auto& l : ev) {
            fastest = std::max(fastest, std::abs(l));
            if (l.real() > 1e-9) s.unstable = true;
        }
        if (fastest * opt.dt > std::numbers::pi) {
            const double suggest = std::pow(10.0, std::floor(std::log10(std::numbers::pi / (4.0 * fastest))));
            throw std::invalid_argument(
                fmt::format("dt = {} s is too coarse for the fastest mode ({:.4g} rad/s); use dt <= {} s",
                            opt.dt, fastest, suggest));
        }
        s.Phi = (lin.A * opt.dt).exp();
    }
    return s;
}

RejectionSignals run(const LinearModel& lin, const Stepper& st, const LoopRef& perturbed,
                     const std::vector<LoopRef>& record, const ImpulseOptions& opt) {
    RejectionSignals out;
    out.perturbed = perturbed;
    out.t_f = opt.t_f;
    out.dt = opt.dt;
    out.loops = record;
    out.unstable = st.unstable;
    MatrixXd Cs(static_cast<Eigen::Index>(record.size()), lin.A.cols());
    for (std::size_t j = 0; j < record.size(); ++j)
        Cs.row(static_cast<Eigen::Index>(j)) = lin.C.row(
            static_cast<Eigen::Index>(lin.output_index(tag_name(record[j], "s"))));
    VectorXd x = lin.B.col(static_cast<Eigen::Index>(lin.input_index(tag_name(perturbed, "d"))));
    out.sigma.resize(static_cast<Eigen::Index>(st.steps + 1), Cs.rows());
    for (std::size_t k = 0; k <= st.steps; ++k) {
        out.sigma.row(static_cast<Eigen::Index>(k)) = (Cs * x).transpose();
        if (k < st.steps) x = st.Phi * x;
    }
    return out;
}

}  // namespace

RejectionSignals impulse_rejection(const LinearModel& lin, const LoopRef& perturbed,
                                   const std::vector<LoopRef>& record, const ImpulseOptions& opt) {
    return run(lin, make_stepper(lin, opt), perturbed, record, opt);
}

std::vector<RejectionSignals> impulse_rejection_all(const LinearModel& lin,
                                                    const std::vector<LoopRef>& loops,
                                                    const ImpulseOptions& opt) {
    const auto st = make_stepper(lin, opt);
    std::vector<RejectionSignals> out;
    out.reserve(loops.size());
    for (const auto& l : loops) out.push_back(run(lin, st, l, loops, opt));
    return out;
}

double trapezoid(const Eigen::Ref<const VectorXd>& f, double dt) {
    const Eigen::Index n = f.size();
    if (n < 2) return 0.0;
    return dt * (f.sum() - 0.5 * (f[0] + f[n - 1]));
}

InteractionMatrix correlation_matrix(const std::vector<RejectionSignals>& experiments) {
    InteractionMatrix m;
    const std::size_t n = experiments.size();
    for (const auto& e : experiments) m.loops.push_back(e.perturbed);
    m.rho = MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& e = experiments[i];
        if (e.sigma.rows() != experiments.front().sigma.rows() || e.dt != experiments.front().dt)
            throw std::invalid_argument("rejection signals are not on identical grids");
        if (!e.sigma.allFinite()) throw std::invalid_argument("non-finite rejection signal");
        const VectorXd si = e.sigma.col(e.column(e.perturbed));
        const double eii = trapezoid(si.cwiseProduct(si), e.dt);
        for (std::size_t j = 0; j < n; ++j) {
            const auto I = static_cast<Eigen::Index>(i), J = static_cast<Eigen::Index>(j);
            if (i == j) {
                m.rho(I, J) = 1.0;
                continue;
            }
            const VectorXd sj = e.sigma.col(e.column(m.loops[j]));
            const double ejj = trapezoid(sj.cwiseProduct(sj), e.dt);
            const double den = std::sqrt(eii * ejj);
            if (!(den > 0)) {
                m.zero_energy.emplace_back(i, j);
                continue;
            }
            // Cauchy-Schwarz bounds the exact value; clamp rounding only.
            m.rho(I, J) = std::min(1.0, std::abs(trapezoid(sj.cwiseProduct(si), e.dt)) / den);
        }
    }
    return m;
}

LoopIndices influence_indices(const InteractionMatrix& m) {
    const Eigen::Index n = m.rho.rows();
    if (n < 2 || m.rho.cols() != n) throw std::invalid_argument("rho must be square with n >= 2");
    LoopIndices idx;
    idx.loops = m.loops;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double row = m.rho.row(i).sum() - m.rho(i, i);
        const double col = m.rho.col(i).sum() - m.rho(i, i);
        idx.iidx.push_back(row / static_cast<double>(n - 1));
        idx.sidx.push_back(col / static_cast<double>(n - 1));
    }
    return idx;
}

std::vector<LoopId> redesign_sequence(const std::vector<LoopIndices>& per_machine) {
    if (per_machine.empty()) throw std::invalid_argument("no indices to average");
    std::array<double, 7> avg{};
    for (const auto& m : per_machine) {
        if (m.loops.size() != 7) throw std::invalid_argument("expected the seven loops of one machine");
        for (std::size_t i = 0; i < 7; ++i) avg[loop_index(m.loops[i].loop)] += m.iidx[i];
    }
    for (auto& a : avg) a /= static_cast<double>(per_machine.size());
    std::vector<LoopId> seq(kTieBreakOrder.begin(), kTieBreakOrder.end());
    std::stable_sort(seq.begin(), seq.end(), [&](LoopId a, LoopId b) {
        return avg[loop_index(a)] > avg[loop_index(b)];
    });
    return seq;
}

InteractionAnalysis analyze_interaction(const LinearModel& lin, const std::vector<std::size_t>& machines,
                                        const ImpulseOptions& opt,
                                        const std::vector<std::size_t>& sequence_from) {
    if (machines.empty()) throw std::invalid_argument("no machines to analyze");
    const auto st = make_stepper(lin, opt);
    InteractionAnalysis a;
    a.machines = machines;
    a.unstable = st.unstable;
    std::vector<LoopRef> all;
    for (std::size_t k : machines) {
        const auto loops = machine_loops(k);
        all.insert(all.end(), loops.begin(), loops.end());
        std::vector<RejectionSignals> ex;
        for (const auto& l : loops) ex.push_back(run(lin, st, l, loops, opt));
        a.matrices.push_back(correlation_matrix(ex));
        a.indices.push_back(influence_indices(a.matrices.back()));
    }
    std::vector<RejectionSignals> ex;
    for (const auto& l : all) ex.push_back(run(lin, st, l, all, opt));
    a.farm = correlation_matrix(ex);
    std::vector<LoopIndices> chosen;
    for (std::size_t i = 0; i < machines.size(); ++i)
        if (sequence_from.empty() ||
            std::find(sequence_from.begin(), sequence_from.end(), machines[i]) != sequence_from.end())
            chosen.push_back(a.indices[i]);
    if (chosen.empty()) throw std::invalid_argument("sequence machines are not among the analyzed ones");
    a.sequence = redesign_sequence(chosen);
    return a;
}

void write_rho_csv(std::ostream& os, const InteractionMatrix& m) {
    fmt::print(os, "loop");
    for (const auto& l : m.loops) fmt::print(os, ",{}", l.label());
    fmt::print(os, "\n");
    for (Eigen::Index i = 0; i < m.rho.rows(); ++i) {
        fmt::print(os, "{}", m.loops[static_cast<std::size_t>(i)].label());
        for (Eigen::Index j = 0; j < m.rho.cols(); ++j) fmt::print(os, ",{:.10g}", m.rho(i, j));
        fmt::print(os, "\n");
    }
}

void write_heatmap(std::ostream& os, const InteractionMatrix& m) {
    for (Eigen::Index i = 0; i < m.rho.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.rho.cols(); ++j)
            fmt::print(os, j == 0 ? "{:.6f}" : " {:.6f}", m.rho(i, j));
        fmt::print(os, "\n");
    }
}

void write_indices_csv(std::ostream& os, const std::vector<LoopIndices>& per_machine) {
    fmt::print(os, "loop,iidx,sidx\n");
    for (const auto& m : per_machine)
        for (std::size_t i = 0; i < m.loops.size(); ++i)
            fmt::print(os, "{},{:.10g},{:.10g}\n", m.loops[i].label(), m.iidx[i], m.sidx[i]);
}

void write_sequence(std::ostream& os, const std::vector<LoopId>& seq) {
    for (LoopId id : seq) fmt::print(os, "{}\n", loop_name(id));
}

}  // namespace vsmfarm
