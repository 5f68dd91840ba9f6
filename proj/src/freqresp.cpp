#include "vsmfarm/freqresp.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <Eigen/Eigenvalues>
#include <fmt/core.h>
#include <fmt/ostream.h>

namespace vsmfarm {

namespace {
constexpr double kRad2Deg = 180.0 / std::numbers::pi;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0 && hi > lo) || n < 2) throw std::invalid_argument("invalid frequency grid");
    std::vector<double> g(n);
    const double a = std::log10(lo), b = std::log10(hi);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    return g;
}

Resolvent::Resolvent(const MatrixXd& A) {
    if (A.rows() != A.cols()) throw std::invalid_argument("A must be square");
    if (A.rows() == 0) return;
    Eigen::HessenbergDecomposition<MatrixXd> hd(A);
    H_ = hd.matrixH();
    Q_ = hd.matrixQ();
}

Eigen::VectorXcd Resolvent::solve_hessenberg(Complex jw, const Eigen::VectorXcd& rhs,
                                             bool* singular) const {
    const Eigen::Index n = H_.rows();
    Eigen::MatrixXcd M = -H_.cast<Complex>();
    M.diagonal().array() += jw;
    Eigen::VectorXcd z = rhs;
    const double scale = std::max(1.0, H_.cwiseAbs().maxCoeff()) + std::abs(jw);
    const double tiny = scale * 64.0 * std::numeric_limits<double>::epsilon();
    *singular = false;
    // Gaussian elimination with adjacent-row pivoting keeps the Hessenberg form.
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        if (std::abs(M(k + 1, k)) > std::abs(M(k, k))) {
            M.row(k).segment(k, n - k).swap(M.row(k + 1).segment(k, n - k));
            std::swap(z[k], z[k + 1]);
        }
        if (std::abs(M(k, k)) <= tiny) {
            *singular = true;
            return z;
        }
        const Complex f = M(k + 1, k) / M(k, k);
        if (f != Complex{0.0, 0.0}) {
            M.row(k + 1).segment(k, n - k) -= f * M.row(k).segment(k, n - k);
            z[k + 1] -= f * z[k];
        }
    }
    if (std::abs(M(n - 1, n - 1)) <= tiny) {
        *singular = true;
        return z;
    }
    for (Eigen::Index k = n - 1; k >= 0; --k) {
        Complex acc = z[k];
        for (Eigen::Index c = k + 1; c < n; ++c) acc -= M(k, c) * z[c];
        z[k] = acc / M(k, k);
    }
    return z;
}

Eigen::VectorXcd Resolvent::solve(double omega, const VectorXd& b, bool* perturbed) const {
    if (perturbed) *perturbed = false;
    if (H_.rows() == 0) return Eigen::VectorXcd(0);
    const Eigen::VectorXcd rhs = (Q_.transpose() * b).cast<Complex>();
    double w = omega;
    for (int attempt = 0; attempt < 4; ++attempt) {
        bool singular = false;
        const Eigen::VectorXcd z = solve_hessenberg({0.0, w}, rhs, &singular);
        if (!singular) return Q_.cast<Complex>() * z;
        if (perturbed) *perturbed = true;
        w = omega + (attempt + 1) * 1e-9 * std::max(1.0, std::abs(omega));
    }
    throw std::runtime_error(fmt::format("resolvent singular near omega = {}", omega));
}

Complex Resolvent::siso(double omega, const VectorXd& b, const Eigen::RowVectorXd& c, double d,
                        bool* perturbed) const {
    if (H_.rows() == 0) return d;
    const Eigen::VectorXcd z = solve(omega, b, perturbed);
    return (c.cast<Complex>() * z)(0) + Complex{d, 0.0};
}

FrequencyResponse frequency_response(const SisoSystem& sys, const std::vector<double>& grid,
                                     std::string label, std::string kind) {
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("grid must be strictly increasing");
    Resolvent res(sys.A);
    FrequencyResponse out{std::move(label), std::move(kind), grid, {}, {}};
    out.value.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        bool flag = false;
        out.value.push_back(res.siso(grid[i], sys.b, sys.c, sys.d, &flag));
        if (flag) out.flagged.push_back(i);
    }
    return out;
}

ChannelEvaluator::ChannelEvaluator(const AnalysisChannel& ch) : ch_(ch), res_(ch.to_s.A) {}

ChannelEvaluator::Point ChannelEvaluator::at(double omega) const {
    // Both paths share A and the input column.
    const Eigen::VectorXcd z = res_.solve(omega, ch_.to_s.b);
    return {(ch_.to_s.c.cast<Complex>() * z)(0) + Complex{ch_.to_s.d, 0.0},
            (ch_.to_t.c.cast<Complex>() * z)(0) + Complex{ch_.to_t.d, 0.0}};
}

double phase_margin_deg(Complex g) {
    double pm = 180.0 + std::arg(g) * kRad2Deg;
    while (pm > 180.0) pm -= 360.0;
    while (pm <= -180.0) pm += 360.0;
    return pm;
}

namespace {

double bisect_log(const std::function<double(double)>& f, double lo, double hi) {
    double flo = f(lo);
    for (int i = 0; i < 200 && hi / lo - 1.0 > 1e-13; ++i) {
        const double mid = std::sqrt(lo * hi);
        const double fm = f(mid);
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return std::sqrt(lo * hi);
}

void finish(LoopMargins& m) {
    m.has_crossover = !m.crossovers.empty();
    m.multiple = m.crossovers.size() > 1;
    if (!m.has_crossover) return;
    const Crossover* worst = &m.crossovers.front();
    for (const auto& c : m.crossovers)
        if (c.phi_m < worst->phi_m) worst = &c;
    m.phi_m = worst->phi_m;
    m.omega_o = worst->omega;
}

}  // namespace

LoopMargins stability_margins(const std::function<Complex(double)>& G,
                              const std::vector<double>& grid) {
    LoopMargins m;
    if (grid.size() < 2) throw std::invalid_argument("grid too short");
    std::vector<Complex> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = G(grid[i]);
    auto mag1 = [&](double w) { return std::abs(G(w)) - 1.0; };
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double a = std::abs(v[i - 1]) - 1.0, b = std::abs(v[i]) - 1.0;
        if (!std::isfinite(a) || !std::isfinite(b)) continue;
        if (a == 0.0) {
            m.crossovers.push_back({grid[i - 1], phase_margin_deg(v[i - 1])});
        } else if ((a > 0) != (b > 0) && b != 0.0) {
            const double w = bisect_log(mag1, grid[i - 1], grid[i]);
            m.crossovers.push_back({w, phase_margin_deg(G(w))});
        }
    }
    finish(m);
    // Gain margin at phase crossovers (Im G changes sign with Re G < 0).
    auto img = [&](double w) { return G(w).imag(); };
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if ((v[i - 1].imag() > 0) == (v[i].imag() > 0)) continue;
        if (v[i - 1].real() >= 0 && v[i].real() >= 0) continue;
        const double w = bisect_log(img, grid[i - 1], grid[i]);
        const Complex g = G(w);
        if (g.real() >= 0) continue;
        const double gm = -20.0 * std::log10(std::abs(g));
        if (!m.gain_margin_db || std::abs(gm) < std::abs(*m.gain_margin_db)) {
            m.gain_margin_db = gm;
            m.omega_pc = w;
        }
    }
    return m;
}

LoopMargins stability_margins(const FrequencyResponse& resp) {
    LoopMargins m;
    const auto& w = resp.omega;
    const auto& v = resp.value;
    const auto phase = unwrapped_phase_deg(v);
    for (std::size_t i = 1; i < w.size(); ++i) {
        const double a = std::log(std::abs(v[i - 1])), b = std::log(std::abs(v[i]));
        if (!std::isfinite(a) || !std::isfinite(b) || (a > 0) == (b > 0) || a == b) continue;
        const double t = a / (a - b);
        const double lw = std::log(w[i - 1]) + t * (std::log(w[i]) - std::log(w[i - 1]));
        const double ph = phase[i - 1] + t * (phase[i] - phase[i - 1]);
        m.crossovers.push_back({std::exp(lw), phase_margin_deg(std::polar(1.0, ph / kRad2Deg))});
    }
    finish(m);
    return m;
}

LoopMargins channel_margins(const AnalysisChannel& ch, const std::vector<double>& grid) {
    ChannelEvaluator ev(ch);
    return stability_margins([&](double w) { return ev.G(w); }, grid);
}

LoopFunctions loop_functions(const AnalysisChannel& ch, const RationalTf& C,
                             const std::vector<double>& grid) {
    ChannelEvaluator ev(ch);
    LoopFunctions lf;
    for (auto* r : {&lf.S, &lf.T, &lf.G, &lf.P}) {
        r->label = ch.label;
        r->omega.reserve(grid.size());
    }
    lf.S.kind = "S";
    lf.T.kind = "T";
    lf.G.kind = "G";
    lf.P.kind = "P";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto p = ev.at(grid[i]);
        lf.S.omega.push_back(grid[i]);
        lf.S.value.push_back(p.S());
        lf.T.omega.push_back(grid[i]);
        lf.T.value.push_back(p.T());
        if (std::abs(p.s) < 1e-12) {
            lf.excluded.push_back(i);
            continue;
        }
        const Complex g = p.G();
        const Complex c = C.at(grid[i]);
        lf.G.omega.push_back(grid[i]);
        lf.G.value.push_back(g);
        if (std::abs(c) == 0.0) {
            lf.excluded.push_back(i);
            continue;
        }
        lf.P.omega.push_back(grid[i]);
        lf.P.value.push_back(g / c);
    }
    lf.G.flagged = lf.excluded;
    lf.P.flagged = lf.excluded;
    return lf;
}

std::vector<double> unwrapped_phase_deg(const std::vector<Complex>& v) {
    std::vector<double> out(v.size());
    double offset = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double raw = std::arg(v[i]) * kRad2Deg;
        if (i > 0) {
            double d = raw + offset - out[i - 1];
            while (d > 180.0) {
                offset -= 360.0;
                d -= 360.0;
            }
            while (d < -180.0) {
                offset += 360.0;
                d += 360.0;
            }
        }
        out[i] = raw + offset;
    }
    return out;
}

std::vector<NicholsRow> nichols_export(const FrequencyResponse& resp) {
    const auto ph = unwrapped_phase_deg(resp.value);
    std::vector<NicholsRow> rows;
    rows.reserve(resp.value.size());
    for (std::size_t i = 0; i < resp.value.size(); ++i)
        rows.push_back({ph[i], 20.0 * std::log10(std::abs(resp.value[i])), resp.omega[i]});
    return rows;
}

void write_response_csv(std::ostream& os, const FrequencyResponse& resp) {
    fmt::print(os, "omega_rad_s,re,im\n");
    for (std::size_t i = 0; i < resp.value.size(); ++i)
        fmt::print(os, "{:.10g},{:.10g},{:.10g}\n", resp.omega[i], resp.value[i].real(),
                   resp.value[i].imag());
}

void write_bode_csv(std::ostream& os, const FrequencyResponse& resp) {
    fmt::print(os, "omega_rad_s,mag_db,phase_deg\n");
    for (const auto& r : nichols_export(resp))
        fmt::print(os, "{:.10g},{:.10g},{:.10g}\n", r.omega, r.mag_db, r.phase_deg);
}

void write_nichols_csv(std::ostream& os, const FrequencyResponse& resp) {
    fmt::print(os, "phase_deg,mag_db,omega_rad_s\n");
    for (const auto& r : nichols_export(resp))
        fmt::print(os, "{:.10g},{:.10g},{:.10g}\n", r.phase_deg, r.mag_db, r.omega);
}

}  // namespace vsmfarm
