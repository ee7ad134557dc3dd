#include "clusterguard/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace clusterguard {

namespace {

const double kSqrt3 = std::sqrt(3.0);

struct PairGeometry {
    double dx, dy, dz, d;
};

inline PairGeometry geometry(std::span<const double> pos, Index a, Index b) {
    const double dx = pos[3 * a] - pos[3 * b];
    const double dy = pos[3 * a + 1] - pos[3 * b + 1];
    const double dz = pos[3 * a + 2] - pos[3 * b + 2];
    return {dx, dy, dz, std::sqrt(dx * dx + dy * dy + dz * dz)};
}

// Signed excess of an active tightened term, 0 when inactive. Linked pairs must end below
// b - margin, unlinked pairs above b + margin.
inline double tight_excess(double d, bool linked, double b, double margin) {
    if (linked) {
        const double c = b - margin;
        return d > c ? d - c : 0.0;
    }
    const double c = b + margin;
    return d <= c ? d - c : 0.0;
}

}  // namespace

double CorrectionParams::eps_q() const { return 2.0 * xi / (std::ldexp(1.0, m) - 1.0); }

double CorrectionParams::xi_prime() const { return xi * (1.0 - std::ldexp(1.0, -m)) - storage_rounding; }

double CorrectionParams::distance_margin() const { return 2.0 * kSqrt3 * (eps_q() + storage_rounding); }

void CorrectionParams::validate() const {
    if (!(xi > 0.0) || !std::isfinite(xi)) throw std::invalid_argument("xi must be positive and finite");
    if (!(b > 0.0) || !std::isfinite(b)) throw std::invalid_argument("b must be positive and finite");
    if (m < 2 || m > 52) throw std::invalid_argument("bit depth m must lie in [2, 52]");
    if (!(eps_loss > 0.0)) throw std::invalid_argument("eps_loss must be positive");
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("Adam betas must lie in [0, 1)");
    }
    if (!(eps_adam > 0.0)) throw std::invalid_argument("eps_adam must be positive");
    if (!(storage_rounding >= 0.0)) throw std::invalid_argument("storage rounding must be non-negative");
    const double xp = xi_prime();
    if (!(xp > 0.0 && xp < xi)) throw std::invalid_argument("shrunken bound must satisfy 0 < xi' < xi");
    if (!(eps_q() > std::ldexp(xi, -m))) throw std::invalid_argument("eps_q must exceed the quantization error");
}

PairSystem PairSystem::from(const VulnerablePairSet& v) {
    PairSystem sys;
    sys.globals = v.editable;
    sys.linked = v.orig_linked;
    sys.pairs.reserve(v.pairs.size());
    auto slot = [&](Index g) {
        const auto it = std::lower_bound(sys.globals.begin(), sys.globals.end(), g);
        return static_cast<Index>(it - sys.globals.begin());
    };
    for (const auto& pr : v.pairs) sys.pairs.push_back({slot(pr[0]), slot(pr[1])});
    return sys;
}

std::vector<double> gather(const ParticleSet& p, std::span<const Index> ids) {
    std::vector<double> out(3 * ids.size());
    for (std::size_t k = 0; k < ids.size(); ++k) {
        out[3 * k] = p.xs()[ids[k]];
        out[3 * k + 1] = p.ys()[ids[k]];
        out[3 * k + 2] = p.zs()[ids[k]];
    }
    return out;
}

double violation_loss(const PairSystem& sys, std::span<const double> pos, double b) {
    double total = 0.0;
    for (std::size_t k = 0; k < sys.pairs.size(); ++k) {
        const double d = geometry(pos, sys.pairs[k][0], sys.pairs[k][1]).d;
        if (sys.linked[k]) {
            if (d > b) total += (d - b) * (d - b);
        } else if (d <= b) {
            total += (b - d) * (b - d);
        }
    }
    return total;
}

double tight_loss(const PairSystem& sys, std::span<const double> pos, double b, double margin,
                  std::span<const std::uint8_t> counted) {
    double total = 0.0;
    for (std::size_t k = 0; k < sys.pairs.size(); ++k) {
        if (!counted.empty() && !counted[k]) continue;
        const double e = tight_excess(geometry(pos, sys.pairs[k][0], sys.pairs[k][1]).d, sys.linked[k], b, margin);
        total += e * e;
    }
    return total;
}

std::size_t tight_active_count(const PairSystem& sys, std::span<const double> pos, double b, double margin) {
    std::size_t n = 0;
    for (std::size_t k = 0; k < sys.pairs.size(); ++k) {
        const double d = geometry(pos, sys.pairs[k][0], sys.pairs[k][1]).d;
        n += sys.linked[k] ? d > b - margin : d <= b + margin;
    }
    return n;
}

std::size_t tight_gradient(const PairSystem& sys, std::span<const double> pos, double b, double margin,
                           std::span<double> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    std::size_t coincident = 0;
    for (std::size_t k = 0; k < sys.pairs.size(); ++k) {
        const auto [i, j] = sys.pairs[k];
        const PairGeometry g = geometry(pos, i, j);
        const double e = tight_excess(g.d, sys.linked[k], b, margin);
        if (e == 0.0) continue;
        double ux = 1.0, uy = 0.0, uz = 0.0;
        if (g.d > 0.0) {
            ux = g.dx / g.d;
            uy = g.dy / g.d;
            uz = g.dz / g.d;
        } else {
            ++coincident;
        }
        const double s = 2.0 * e;
        grad[3 * i] += s * ux;
        grad[3 * i + 1] += s * uy;
        grad[3 * i + 2] += s * uz;
        grad[3 * j] -= s * ux;
        grad[3 * j + 1] -= s * uy;
        grad[3 * j + 2] -= s * uz;
    }
    return coincident;
}

void clamp_to_box(std::span<double> pos, std::span<const double> orig, double bound) {
    for (std::size_t k = 0; k < pos.size(); ++k) pos[k] = std::clamp(pos[k], orig[k] - bound, orig[k] + bound);
}

double loss(const ParticleSet& p_hat, const VulnerablePairSet& v, double b) {
    const PairSystem sys = PairSystem::from(v);
    return violation_loss(sys, gather(p_hat, sys.globals), b);
}

double tight_loss(const ParticleSet& p_hat, const VulnerablePairSet& v, double b, double eps_q) {
    const PairSystem sys = PairSystem::from(v);
    return tight_loss(sys, gather(p_hat, sys.globals), b, 2.0 * kSqrt3 * eps_q);
}

std::vector<double> gradient(const ParticleSet& p_hat, const VulnerablePairSet& v, double b, double eps_q) {
    const PairSystem sys = PairSystem::from(v);
    std::vector<double> g(3 * sys.slots());
    tight_gradient(sys, gather(p_hat, sys.globals), b, 2.0 * kSqrt3 * eps_q, g);
    return g;
}

ParticleSet project_box(const ParticleSet& p_hat, const ParticleSet& p_orig, double bound) {
    if (!(bound > 0.0)) throw std::invalid_argument("project_box: bound must be positive");
    if (p_hat.size() != p_orig.size()) throw DataError("project_box: particle counts differ");
    std::vector<double> pos = p_hat.interleaved();
    clamp_to_box(pos, p_orig.interleaved(), bound);
    return ParticleSet::from_interleaved(pos, merge(p_hat.bbox(), p_orig.bbox()));
}

OptimState OptimState::start(std::vector<double> positions) {
    OptimState s;
    s.first_moment.assign(positions.size(), 0.0);
    s.second_moment.assign(positions.size(), 0.0);
    s.positions = std::move(positions);
    return s;
}

void adam_step(OptimState& s, std::span<const double> g, const CorrectionParams& p) {
    ++s.t;
    const double t = static_cast<double>(s.t);
    const double bias1 = 1.0 - std::pow(p.beta1, t);
    const double bias2 = 1.0 - std::pow(p.beta2, t);
    for (std::size_t k = 0; k < s.positions.size(); ++k) {
        s.first_moment[k] = p.beta1 * s.first_moment[k] + (1.0 - p.beta1) * g[k];
        s.second_moment[k] = p.beta2 * s.second_moment[k] + (1.0 - p.beta2) * g[k] * g[k];
        const double m_hat = s.first_moment[k] / bias1;
        const double v_hat = s.second_moment[k] / bias2;
        s.positions[k] -= p.alpha * m_hat / (std::sqrt(v_hat) + p.eps_adam);
    }
}

void vanilla_step(OptimState& s, std::span<const double> g, double step) {
    ++s.t;
    for (std::size_t k = 0; k < s.positions.size(); ++k) s.positions[k] -= step * g[k];
}

double estimate_lipschitz(const PairSystem& sys, std::span<const double> orig, const CorrectionParams& params) {
    std::vector<std::size_t> degree(sys.slots(), 0);
    const double reach = 2.0 * kSqrt3 * params.xi;
    const double c_hi = params.b + params.distance_margin();
    double curvature = 1.0;
    for (std::size_t k = 0; k < sys.pairs.size(); ++k) {
        ++degree[sys.pairs[k][0]];
        ++degree[sys.pairs[k][1]];
        if (sys.linked[k]) continue;
        const double d_min = geometry(orig, sys.pairs[k][0], sys.pairs[k][1]).d - reach;
        if (!(d_min > 0.0)) return std::numeric_limits<double>::infinity();
        curvature = std::max(curvature, c_hi / d_min - 1.0);
    }
    const std::size_t max_degree = degree.empty() ? 0 : *std::max_element(degree.begin(), degree.end());
    return 4.0 * static_cast<double>(std::max<std::size_t>(max_degree, 1)) * curvature;
}

void check_within_bound(const ParticleSet& p_orig, const ParticleSet& p_hat, double xi) {
    if (p_orig.size() != p_hat.size()) throw DataError("original and decompressed particle counts differ");
    for (int axis = 0; axis < 3; ++axis) {
        const auto& a = p_orig.axis(axis);
        const auto& h = p_hat.axis(axis);
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!(std::abs(h[i] - a[i]) <= xi)) {
                throw DataError("decompressed coordinate " + std::to_string(i) + "/" + "xyz"[axis] +
                                " violates the error bound");
            }
        }
    }
}

CorrectionResult correct(const ParticleSet& p_orig, const ParticleSet& p_hat0, const VulnerablePairSet& v,
                         const CorrectionParams& params) {
    params.validate();
    check_within_bound(p_orig, p_hat0, params.xi);

    const PairSystem sys = PairSystem::from(v);
    const std::vector<double> orig = gather(p_orig, sys.globals);
    const std::vector<double> start = gather(p_hat0, sys.globals);
    const double margin = params.distance_margin();
    const double box = params.xi_prime();

    double step = params.vanilla_step;
    if (params.optimizer == Optimizer::vanilla_pgd && !(step > 0.0)) step = 1.0 / estimate_lipschitz(sys, orig, params);

    CorrectionResult res;
    OptimState state = OptimState::start(start);
    std::vector<double> grad(state.positions.size());
    res.tight_pairs_initial = tight_active_count(sys, state.positions, params.b, margin);

    bool stopped = false;
    for (std::size_t t = 1; t <= params.t_max; ++t) {
        const double current = tight_loss(sys, state.positions, params.b, margin);
        res.loss_trace.push_back(current);
        if (current <= params.eps_loss) {
            stopped = true;
            break;
        }
        res.coincident_events += tight_gradient(sys, state.positions, params.b, margin, grad);
        if (params.optimizer == Optimizer::adam) {
            adam_step(state, grad, params);
        } else {
            vanilla_step(state, grad, step);
        }
        clamp_to_box(state.positions, orig, box);
        res.iterations = t;
    }
    res.final_loss = stopped ? res.loss_trace.back() : tight_loss(sys, state.positions, params.b, margin);
    if (!stopped) res.loss_trace.push_back(res.final_loss);
    res.converged = res.final_loss <= params.eps_loss;

    std::vector<double> full = p_hat0.interleaved();
    res.delta.assign(full.size(), 0.0);
    for (std::size_t k = 0; k < sys.slots(); ++k) {
        const std::size_t g = sys.globals[k];
        for (int a = 0; a < 3; ++a) {
            full[3 * g + a] = state.positions[3 * k + a];
            res.delta[3 * g + a] = state.positions[3 * k + a] - start[3 * k + a];
        }
    }
    res.corrected = ParticleSet::from_interleaved(full, merge(p_hat0.bbox(), p_orig.bbox()));
    return res;
}

std::uint64_t iteration_budget(double xi, std::size_t n_tight_pairs, double eps_loss) {
    if (!(eps_loss > 0.0)) throw std::invalid_argument("iteration_budget: eps_loss must be positive");
    if (n_tight_pairs == 0) return 0;
    const long double v = 12.0L * static_cast<long double>(xi) * static_cast<long double>(xi) *
                          static_cast<long double>(n_tight_pairs) / static_cast<long double>(eps_loss);
    if (v >= 0x1.0p64L) return std::numeric_limits<std::uint64_t>::max();
    // Inputs such as 1e-3 are not exact in binary; snap values within rounding noise of an integer.
    const long double r = std::nearbyint(v);
    if (std::abs(v - r) <= 1e-9L * std::max(1.0L, std::abs(v))) return static_cast<std::uint64_t>(r);
    return static_cast<std::uint64_t>(std::ceil(v));
}

}  // namespace clusterguard
