#include "cqed/volterra.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <future>
#include <string>

#include "cqed/error.hpp"
#include "cqed/quadrature.hpp"

namespace cqed {
namespace {

constexpr double kSingularZdt = 1e-4;
constexpr std::size_t kResync = 512;
constexpr std::size_t kCheckStride = 8;
constexpr double kPhaseBudget = 48.0;
constexpr double kMaxOmegaDt = 0.05;

struct Fnv {
    std::uint64_t h = 1469598103934665603ull;
    void add(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xffu;
            h *= 1099511628211ull;
        }
    }
    void add(double v) { add(std::bit_cast<std::uint64_t>(v)); }
};

void add_density(Fnv& f, const SpectralDensity& rho) {
    f.add(static_cast<std::uint64_t>(rho.kind()));
    f.add(rho.omega_s());
    f.add(rho.q());
    f.add(rho.delta());
}

std::uint64_t resonant_key(const SystemParams& p, const SpectralDensity& rho, double dt, const QuadratureOptions& o) {
    Fnv f;
    f.add(p.kappa);
    f.add(p.gamma);
    f.add(p.omega_c);
    add_density(f, rho);
    f.add(dt);
    f.add(o.eps);
    f.add(o.cap_hwhm);
    f.add(o.tolerance);
    f.add(static_cast<std::uint64_t>(o.max_doublings));
    return f.h;
}

double window_half_width(const SpectralDensity& rho, const QuadratureOptions& o) {
    const double h = support_window(rho, o.eps).second - rho.omega_s();
    return std::min(h, o.cap_hwhm * rho.hwhm());
}

// Per-node data of the resonant-frame factor (e^{-kappa u} - e^{-(gamma + i x) u}) / z.
// Regular nodes are stored split into real/imaginary arrays for the vector loops.
struct NodeSplit {
    std::vector<double> x;           // omega_j - omega_c
    std::vector<double> dr, di;      // weight / z
    std::vector<cplx> sing_c;        // singular nodes: weight
    std::vector<cplx> sing_z;        // singular nodes: z
    std::vector<std::size_t> regular_index;
    std::vector<std::size_t> singular_index;
    cplx d_sum{};
};

NodeSplit split_nodes(const FrequencyNodes& nodes, double kappa, double gamma, double omega_c, double dt) {
    NodeSplit s;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        const double x = nodes.omega[j] - omega_c;
        const cplx z(kappa - gamma, -x);
        if (std::abs(z) * dt < kSingularZdt) {
            s.sing_c.push_back(nodes.weight[j]);
            s.sing_z.push_back(z);
            s.singular_index.push_back(j);
        } else {
            const cplx d = nodes.weight[j] / z;
            s.x.push_back(x);
            s.dr.push_back(d.real());
            s.di.push_back(d.imag());
            s.regular_index.push_back(j);
            s.d_sum += d;
        }
    }
    return s;
}

// Phasors b_j = e^{-(gamma + i x_j) k step}, advanced by one step per call and
// recomputed exactly every kResync steps.
class Phasors {
public:
    Phasors(const std::vector<double>& x, double gamma, double step) : x_(x), gamma_(gamma), step_(step) {
        const std::size_t n = x.size();
        br_.assign(n, 1.0);
        bi_.assign(n, 0.0);
        rr_.resize(n);
        ri_.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const cplx r = std::exp(-cplx(gamma, x[j]) * step);
            rr_[j] = r.real();
            ri_[j] = r.imag();
        }
    }

    // Advances to step k and returns sum_j (wr + i wi)_j b_j.
    cplx advance_dot(std::size_t k, const double* wr, const double* wi) {
        const std::size_t n = x_.size();
        double* br = br_.data();
        double* bi = bi_.data();
        const double* rr = rr_.data();
        const double* ri = ri_.data();
        double sr = 0.0;
        double si = 0.0;
        if (k % kResync == 0) {
            const double u = static_cast<double>(k) * step_;
            for (std::size_t j = 0; j < n; ++j) {
                const cplx b = std::exp(-cplx(gamma_, x_[j]) * u);
                br[j] = b.real();
                bi[j] = b.imag();
            }
#pragma omp simd reduction(+ : sr, si)
            for (std::size_t j = 0; j < n; ++j) {
                sr += wr[j] * br[j] - wi[j] * bi[j];
                si += wr[j] * bi[j] + wi[j] * br[j];
            }
        } else {
#pragma omp simd reduction(+ : sr, si)
            for (std::size_t j = 0; j < n; ++j) {
                const double nr = br[j] * rr[j] - bi[j] * ri[j];
                const double ni = br[j] * ri[j] + bi[j] * rr[j];
                br[j] = nr;
                bi[j] = ni;
                sr += wr[j] * nr - wi[j] * ni;
                si += wr[j] * ni + wi[j] * nr;
            }
        }
        return {sr, si};
    }

private:
    const std::vector<double>& x_;
    double gamma_;
    double step_;
    std::vector<double> br_, bi_, rr_, ri_;
};

// J(m step) for m = 0..count with the singular threshold set by dt.
std::vector<cplx> evaluate_j(const FrequencyNodes& nodes, double kappa, double gamma, double omega_c, double dt,
                             double step, std::size_t count) {
    const NodeSplit s = split_nodes(nodes, kappa, gamma, omega_c, dt);
    Phasors ph(s.x, gamma, step);
    std::vector<cplx> out(count + 1);
    out[0] = 0.0;
    for (std::size_t m = 1; m <= count; ++m) {
        const double u = static_cast<double>(m) * step;
        const double a = std::exp(-kappa * u);
        cplx j = a * s.d_sum - ph.advance_dot(m, s.dr.data(), s.di.data());
        for (std::size_t k = 0; k < s.sing_c.size(); ++k) j -= s.sing_c[k] * u * a * phi1(s.sing_z[k] * u);
        out[m] = j;
    }
    return out;
}

double max_abs(const std::vector<cplx>& v) {
    double m = 0.0;
    for (const auto& x : v) m = std::max(m, std::abs(x));
    return m;
}

std::size_t grid_index(double t, const TimeGrid& grid) {
    const double x = (t - grid.t_start) / grid.dt;
    const double k = std::round(x);
    if (std::abs(x - k) > 1e-6) {
        throw Error(ErrorCode::InvalidGrid, "drive boundary t = " + std::to_string(t) + " is not on the time grid");
    }
    return static_cast<std::size_t>(k);
}

struct SegmentSpan {
    std::size_t begin;
    std::size_t end;
    cplx eta;
};

std::vector<SegmentSpan> segment_spans(const DriveProtocol& protocol, const TimeGrid& grid) {
    const std::size_t n = grid.size();
    const double t_last = grid.time(n - 1);
    const double slack = 1e-6 * grid.dt;
    if (protocol.segments().empty() || protocol.t_begin() > grid.t_start + slack || protocol.t_end() < t_last - slack) {
        throw Error(ErrorCode::OutOfRange, "drive protocol does not cover the time grid");
    }
    std::vector<SegmentSpan> spans;
    for (const auto& seg : protocol.segments()) {
        const double lo = std::max(seg.t_start, grid.t_start);
        const double hi = std::min(seg.t_end, t_last);
        if (hi <= lo + slack) continue;
        const std::size_t b = grid_index(lo, grid);
        const std::size_t e = hi >= t_last - slack ? n - 1 : grid_index(hi, grid);
        if (e > b) spans.push_back({b, e, seg.eta});
    }
    return spans;
}

}  // namespace

FrequencyNodes frequency_nodes(const SpectralDensity& rho, std::size_t panels, const QuadratureOptions& options) {
    const double half = window_half_width(rho, options);
    const QuadratureRule rule = composite_gauss_legendre(rho.omega_s() - half, rho.omega_s() + half, panels);
    FrequencyNodes out;
    out.omega = rule.nodes;
    out.weight.resize(rule.size());
    for (std::size_t j = 0; j < rule.size(); ++j) out.weight[j] = rule.weights[j] * rho(rule.nodes[j]);
    return out;
}

ResonantKernel resonant_kernel(const SystemParams& params, const SpectralDensity& rho, double dt, double horizon,
                               const QuadratureOptions& options) {
    validate(params);
    if (!(dt > 0.0) || !(horizon > 0.0)) throw Error(ErrorCode::InvalidGrid, "kernel needs dt > 0 and horizon > 0");
    const auto count = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
    const double u_max = static_cast<double>(count) * dt;

    const double width = 2.0 * window_half_width(rho, options);
    const double panel = std::min(kPhaseBudget / u_max, 0.5 * rho.hwhm());
    auto panels = std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(width / panel)));

    const std::size_t strided = count / kCheckStride;
    const double step = dt * static_cast<double>(kCheckStride);
    auto sample = [&](std::size_t p) {
        return evaluate_j(frequency_nodes(rho, p, options), params.kappa, params.gamma, params.omega_c, dt, step,
                          strided);
    };

    std::vector<cplx> coarse = sample(panels);
    bool converged = false;
    for (int d = 0; d < options.max_doublings; ++d) {
        std::vector<cplx> fine = sample(2 * panels);
        double diff = 0.0;
        for (std::size_t m = 0; m < fine.size(); ++m) diff = std::max(diff, std::abs(fine[m] - coarse[m]));
        if (diff <= options.tolerance * max_abs(fine)) {
            converged = true;
            break;
        }
        coarse = std::move(fine);
        panels *= 2;
    }
    if (!converged) {
        throw Error(ErrorCode::QuadratureFailure,
                    "kernel frequency quadrature did not converge after " + std::to_string(options.max_doublings) +
                        " doublings");
    }

    ResonantKernel k;
    k.nodes = frequency_nodes(rho, panels, options);
    k.dt = dt;
    k.kappa = params.kappa;
    k.gamma = params.gamma;
    k.omega_c = params.omega_c;
    k.panels = panels;
    k.values = evaluate_j(k.nodes, params.kappa, params.gamma, params.omega_c, dt, dt, count);
    for (const auto& v : k.values) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
            throw Error(ErrorCode::NonFinite, "non-finite kernel value");
        }
    }
    return k;
}

std::uint64_t params_hash(const SystemParams& p, const SpectralDensity& rho, double dt) {
    Fnv f;
    for (double v : {p.omega_c, p.omega_s, p.omega_p, p.kappa, p.gamma, p.Omega}) f.add(v);
    add_density(f, rho);
    f.add(dt);
    return f.h;
}

KernelTable kernel_table(const SystemParams& params, const ResonantKernel& base) {
    if (params.kappa != base.kappa || params.gamma != base.gamma || params.omega_c != base.omega_c) {
        throw Error(ErrorCode::ValidationError, "resonant kernel was built for different kappa, gamma or omega_c");
    }
    KernelTable t;
    t.dt = base.dt;
    t.values.resize(base.values.size());
    const double omega2 = params.Omega * params.Omega;
    const double detuning = params.omega_c - params.omega_p;
    for (std::size_t m = 1; m < base.values.size(); ++m) {
        const double u = static_cast<double>(m) * base.dt;
        t.values[m] = omega2 * std::polar(1.0, -detuning * u) * base.values[m];
    }
    t.values[0] = 0.0;
    return t;
}

KernelTable kernel_table(const SystemParams& params, const SpectralDensity& rho, double dt, double horizon,
                         const QuadratureOptions& options) {
    KernelTable t = kernel_table(params, resonant_kernel(params, rho, dt, horizon, options));
    t.params_hash = params_hash(params, rho, dt);
    return t;
}

cplx forcing(const SystemParams& params, const DriveProtocol& protocol, double t) {
    const cplx mu(params.kappa, params.omega_c - params.omega_p);
    cplx f = 0.0;
    for (const auto& seg : protocol.segments()) {
        if (t <= seg.t_start) break;
        const double len = std::min(t, seg.t_end) - seg.t_start;
        f = f * std::exp(-mu * len) + seg.eta * len * phi1(-mu * len);
    }
    return f;
}

MemoryState initial_memory(const FrequencyNodes& nodes) {
    MemoryState s;
    s.nodes = nodes.omega;
    s.weights = nodes.weight;
    s.i_values.assign(nodes.size(), 0.0);
    return s;
}

MemoryState advance_memory(const MemoryState& state, std::span<const cplx> piece, double dt,
                           const SystemParams& params) {
    MemoryState next = state;
    if (piece.size() < 2) return next;
    const std::size_t n = state.nodes.size();
    const std::size_t last = piece.size() - 1;

    std::vector<double> rr(n), ri(n), sr(n, 0.0), si(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const cplx r = std::exp(-cplx(params.gamma, state.nodes[j] - params.omega_p) * dt);
        rr[j] = r.real();
        ri[j] = r.imag();
    }
    // Horner: S = sum_k c_k r^{last-k} A_k with trapezoid weights c_k
    for (std::size_t k = 0; k <= last; ++k) {
        const double c = (k == 0 || k == last) ? 0.5 : 1.0;
        const double ar = c * piece[k].real();
        const double ai = c * piece[k].imag();
        double* s_r = sr.data();
        double* s_i = si.data();
#pragma omp simd
        for (std::size_t j = 0; j < n; ++j) {
            const double nr = s_r[j] * rr[j] - s_i[j] * ri[j] + ar;
            const double ni = s_r[j] * ri[j] + s_i[j] * rr[j] + ai;
            s_r[j] = nr;
            s_i[j] = ni;
        }
    }
    const double span = static_cast<double>(last) * dt;
    for (std::size_t j = 0; j < n; ++j) {
        const cplx prop = std::exp(-cplx(params.gamma, state.nodes[j] - params.omega_p) * span);
        next.i_values[j] = prop * state.i_values[j] + dt * cplx(sr[j], si[j]);
    }
    next.a_last = piece.back();
    return next;
}

CavityTrajectory solve(const SystemParams& params, const ResonantKernel& base, const DriveProtocol& protocol,
                       const TimeGrid& grid) {
    validate(params);
    const double dt = grid.dt;
    if (params.Omega * dt >= kMaxOmegaDt) {
        throw Error(ErrorCode::StepTooLarge, "Omega*dt = " + std::to_string(params.Omega * dt) + " must be < 0.05");
    }
    if (std::abs(base.dt - dt) > 1e-12 * dt) throw Error(ErrorCode::InvalidGrid, "kernel dt differs from grid dt");
    const std::size_t n = grid.size();
    if (base.values.size() < n) throw Error(ErrorCode::InvalidGrid, "kernel horizon shorter than the time grid");

    const auto spans = segment_spans(protocol, grid);
    const KernelTable table = kernel_table(params, base);
    std::vector<double> kr(n), ki(n), ar(n, 0.0), ai(n, 0.0);
    for (std::size_t m = 0; m < n; ++m) {
        kr[m] = table.values[m].real();
        ki[m] = table.values[m].imag();
    }

    const NodeSplit split = split_nodes(base.nodes, params.kappa, params.gamma, params.omega_c, dt);
    const std::size_t nreg = split.x.size();
    std::vector<double> qr(nreg), qi(nreg);

    const cplx mu(params.kappa, params.omega_c - params.omega_p);
    const double omega2 = params.Omega * params.Omega;
    const double detuning = params.omega_c - params.omega_p;
    MemoryState memory = initial_memory(base.nodes);

    for (std::size_t si = 0; si < spans.size(); ++si) {
        const auto& seg = spans[si];
        const std::size_t b = seg.begin;
        const bool has_memory = si > 0;
        const cplx a_b(ar[b], ai[b]);

        cplx p_sum = 0.0;
        for (std::size_t r = 0; r < nreg; ++r) {
            const cplx q = cplx(split.dr[r], split.di[r]) * memory.i_values[split.regular_index[r]];
            qr[r] = q.real();
            qi[r] = q.imag();
            p_sum += q;
        }
        std::vector<cplx> sing_ci(split.sing_c.size());
        for (std::size_t r = 0; r < sing_ci.size(); ++r) {
            sing_ci[r] = split.sing_c[r] * memory.i_values[split.singular_index[r]];
        }
        Phasors ph(split.x, params.gamma, dt);

        for (std::size_t m = b + 1; m <= seg.end; ++m) {
            const std::size_t k = m - b;
            const double u = static_cast<double>(k) * dt;
            const double decay = std::exp(-params.kappa * u);

            cplx mem = 0.0;
            if (has_memory) {
                mem = decay * p_sum - ph.advance_dot(k, qr.data(), qi.data());
                for (std::size_t r = 0; r < sing_ci.size(); ++r) {
                    mem -= sing_ci[r] * u * decay * phi1(split.sing_z[r] * u);
                }
                mem *= omega2 * std::polar(1.0, -detuning * u);
            }

            double cr = 0.5 * (kr[k] * a_b.real() - ki[k] * a_b.imag());
            double ci = 0.5 * (kr[k] * a_b.imag() + ki[k] * a_b.real());
            const double* kr_p = kr.data();
            const double* ki_p = ki.data();
            const double* ar_p = ar.data() + b;
            const double* ai_p = ai.data() + b;
#pragma omp simd reduction(+ : cr, ci)
            for (std::size_t i = 1; i < k; ++i) {
                cr += kr_p[k - i] * ar_p[i] - ki_p[k - i] * ai_p[i];
                ci += kr_p[k - i] * ai_p[i] + ki_p[k - i] * ar_p[i];
            }

            const cplx a_m = dt * cplx(cr, ci) + a_b * std::exp(-mu * u) + mem - seg.eta * u * phi1(-mu * u);
            ar[m] = a_m.real();
            ai[m] = a_m.imag();
        }
        if (!std::isfinite(ar[seg.end]) || !std::isfinite(ai[seg.end])) {
            throw Error(ErrorCode::NonFinite, "solution diverged before t = " + std::to_string(grid.time(seg.end)));
        }

        if (si + 1 == spans.size()) break;
        std::vector<cplx> piece(seg.end - b + 1);
        for (std::size_t i = 0; i < piece.size(); ++i) piece[i] = cplx(ar[b + i], ai[b + i]);
        memory = advance_memory(memory, piece, dt, params);
    }

    CavityTrajectory traj;
    traj.grid = grid;
    traj.amplitude.resize(n);
    for (std::size_t m = 0; m < n; ++m) traj.amplitude[m] = cplx(ar[m], ai[m]);
    check_trajectory(traj);
    return traj;
}

CavityTrajectory solve(const SystemParams& params, const SpectralDensity& rho, const DriveProtocol& protocol,
                       const TimeGrid& grid, const QuadratureOptions& options) {
    validate(params);
    if (params.Omega * grid.dt >= kMaxOmegaDt) {
        throw Error(ErrorCode::StepTooLarge,
                    "Omega*dt = " + std::to_string(params.Omega * grid.dt) + " must be < 0.05");
    }
    const double horizon = static_cast<double>(grid.size() - 1) * grid.dt;
    return solve(params, resonant_kernel(params, rho, grid.dt, horizon, options), protocol, grid);
}

std::shared_ptr<const ResonantKernel> KernelCache::get(const SystemParams& params, const SpectralDensity& rho,
                                                       double dt, double horizon) {
    const auto count = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
    const Key key{resonant_key(params, rho, dt, options_), static_cast<double>(count)};
    std::shared_future<std::shared_ptr<const ResonantKernel>> future;
    std::promise<std::shared_ptr<const ResonantKernel>> promise;
    bool owner = false;
    {
        std::lock_guard lock(mutex_);
        auto it = pending_.find(key);
        if (it == pending_.end()) {
            future = promise.get_future().share();
            pending_.emplace(key, future);
            owner = true;
        } else {
            future = it->second;
        }
    }
    if (owner) {
        try {
            promise.set_value(std::make_shared<const ResonantKernel>(resonant_kernel(params, rho, dt, horizon, options_)));
        } catch (...) {
            promise.set_exception(std::current_exception());
            std::lock_guard lock(mutex_);
            pending_.erase(key);
        }
    }
    return future.get();
}

std::size_t KernelCache::size() const {
    std::lock_guard lock(mutex_);
    return pending_.size();
}

}  // namespace cqed
