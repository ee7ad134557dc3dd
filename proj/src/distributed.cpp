#include "clusterguard/distributed.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace clusterguard {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double axis_width(const DomainBox& domain, const std::array<int, 3>& grid, int k) {
    return domain.extent(k) / static_cast<double>(grid[k]);
}

std::array<int, 3> rank_coords(const std::array<int, 3>& grid, int rank) {
    return {rank % grid[0], (rank / grid[0]) % grid[1], rank / (grid[0] * grid[1])};
}

std::size_t slot_of(const std::vector<Index>& globals, Index g) {
    return static_cast<std::size_t>(std::lower_bound(globals.begin(), globals.end(), g) - globals.begin());
}

// Per-rank state of the simulated optimisation.
struct RankState {
    PairSystem sys;
    std::vector<std::uint8_t> owned_pair;  // loss mask: pair owned by this rank
    std::vector<std::uint8_t> owned_slot;
    std::vector<double> orig;
    std::vector<double> start;
    OptimState opt;
    std::vector<double> grad;
    double seconds = 0.0;
    std::size_t tuples_received = 0;
};

}  // namespace

std::array<int, 3> rank_grid(int r) {
    if (r < 1) throw std::invalid_argument("rank count must be at least 1");
    std::array<int, 3> best{r, 1, 1};
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int gz = 1; gz * gz * gz <= r; ++gz) {
        if (r % gz) continue;
        for (int gy = gz; gy * gy <= r / gz; ++gy) {
            if ((r / gz) % gy) continue;
            const int gx = r / gz / gy;
            const double ratio = static_cast<double>(gx) / gz;
            if (ratio < best_ratio) {
                best_ratio = ratio;
                best = {gx, gy, gz};
            }
        }
    }
    return best;
}

double ghost_width(double b, double xi) { return b + 2.0 * std::sqrt(3.0) * xi; }

int owner_of(const DomainBox& domain, const std::array<int, 3>& grid, const Vec3& x) {
    int c[3];
    for (int k = 0; k < 3; ++k) {
        const double w = axis_width(domain, grid, k);
        const double t = w > 0.0 ? std::floor((x[k] - domain.lo[k]) / w) : 0.0;
        c[k] = static_cast<int>(std::clamp(t, 0.0, static_cast<double>(grid[k] - 1)));
    }
    return c[0] + grid[0] * (c[1] + grid[1] * c[2]);
}

std::vector<RankPartition> decompose(const DomainBox& domain, const ParticleSet& p, int r, double delta) {
    if (r < 1) throw std::invalid_argument("decompose: rank count must be at least 1");
    if (!(delta >= 0.0)) throw std::invalid_argument("decompose: ghost width must be non-negative");
    const auto grid = rank_grid(r);
    std::vector<RankPartition> parts(static_cast<std::size_t>(r));
    for (int rank = 0; rank < r; ++rank) {
        RankPartition& part = parts[static_cast<std::size_t>(rank)];
        part.rank_id = rank;
        const auto c = rank_coords(grid, rank);
        for (int k = 0; k < 3; ++k) {
            const double w = axis_width(domain, grid, k);
            part.box.lo[k] = domain.lo[k] + w * c[k];
            part.box.hi[k] = c[k] == grid[k] - 1 ? domain.hi[k] : domain.lo[k] + w * (c[k] + 1);
        }
    }

    std::vector<int> owner(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        owner[i] = owner_of(domain, grid, p.point(i));
        parts[static_cast<std::size_t>(owner[i])].owned_ids.push_back(static_cast<Index>(i));
    }

    // Slightly widened so rounding in the box edges cannot drop a particle exactly delta away.
    const double pad = delta * (1.0 + 1e-9) + 1e-300;
    for (auto& part : parts) {
        DomainBox padded = part.box;
        for (int k = 0; k < 3; ++k) {
            padded.lo[k] -= pad;
            padded.hi[k] += pad;
        }
        for (const auto& other : parts) {
            if (other.rank_id == part.rank_id) continue;
            bool overlap = true;
            for (int k = 0; k < 3; ++k) {
                overlap = overlap && other.box.lo[k] - pad <= padded.hi[k] && other.box.hi[k] + pad >= padded.lo[k];
            }
            if (overlap) part.neighbor_ranks.push_back(other.rank_id);
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (owner[i] != part.rank_id && padded.contains(p.point(i))) part.ghost_ids.push_back(static_cast<Index>(i));
        }
    }
    return parts;
}

std::size_t GhostExchange::tuple_count() const {
    std::size_t n = 0;
    for (const auto& m : messages) n += m.tuples.size();
    return n;
}

GhostExchange exchange_ghosts(const std::vector<RankPartition>& partitions, const ParticleSet& p) {
    const int r = static_cast<int>(partitions.size());
    std::vector<int> owner(p.size(), -1);
    for (const auto& part : partitions) {
        for (const Index i : part.owned_ids) owner[i] = part.rank_id;
    }
    GhostExchange ex;
    // Senders post one message per receiver; delivery walks senders in rank order.
    for (int from = 0; from < r; ++from) {
        for (int to = 0; to < r; ++to) {
            if (to == from) continue;
            GhostMessage msg{from, to, {}};
            for (const Index g : partitions[static_cast<std::size_t>(to)].ghost_ids) {
                if (owner[g] == from) msg.tuples.push_back({g, p.xs()[g], p.ys()[g], p.zs()[g]});
            }
            if (!msg.tuples.empty()) ex.messages.push_back(std::move(msg));
        }
    }
    ex.views.resize(partitions.size());
    for (std::size_t k = 0; k < partitions.size(); ++k) {
        const auto& part = partitions[k];
        RankView& view = ex.views[k];
        view.owned = part.owned_ids.size();
        view.ids = part.owned_ids;
        view.ids.insert(view.ids.end(), part.ghost_ids.begin(), part.ghost_ids.end());
        view.coords.assign(3 * view.ids.size(), 0.0);
        for (std::size_t s = 0; s < part.owned_ids.size(); ++s) {
            const Index g = part.owned_ids[s];
            view.coords[3 * s] = p.xs()[g];
            view.coords[3 * s + 1] = p.ys()[g];
            view.coords[3 * s + 2] = p.zs()[g];
        }
    }
    for (const auto& msg : ex.messages) {
        const auto& part = partitions[static_cast<std::size_t>(msg.to)];
        RankView& view = ex.views[static_cast<std::size_t>(msg.to)];
        for (const auto& t : msg.tuples) {
            const std::size_t s = part.owned_ids.size() + slot_of(part.ghost_ids, t.id);
            view.coords[3 * s] = t.x;
            view.coords[3 * s + 1] = t.y;
            view.coords[3 * s + 2] = t.z;
        }
    }
    return ex;
}

DistributedResult distributed_correct(const ParticleSet& p_orig, const ParticleSet& p_hat0,
                                      const CorrectionParams& params, int r, Precision precision, Stage2 stage2) {
    params.validate();
    check_within_bound(p_orig, p_hat0, params.xi);
    if (r < 1) throw std::invalid_argument("distributed_correct: rank count must be at least 1");

    DistributedResult out;
    DistributedReport& rep = out.report;
    rep.ranks = r;
    rep.grid = rank_grid(r);
    rep.ghost_width = ghost_width(params.b, params.xi);

    const DomainBox domain = p_orig.bbox();
    const auto parts = decompose(domain, p_orig, r, rep.ghost_width);
    std::vector<int> owner(p_orig.size());
    for (const auto& part : parts) {
        for (const Index i : part.owned_ids) owner[i] = part.rank_id;
    }

    // Bounding-box and initial ghost exchange of both snapshots.
    const GhostExchange orig_ex = exchange_ghosts(parts, p_orig);
    const GhostExchange hat_ex = exchange_ghosts(parts, p_hat0);

    const double margin = params.distance_margin();
    const double box = params.xi_prime();
    std::vector<RankState> ranks(parts.size());
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto t0 = Clock::now();
        const RankView& view = orig_ex.views[k];
        RankState& st = ranks[k];
        RankReport rr;
        rr.rank_id = static_cast<int>(k);
        rr.owned = parts[k].owned_ids.size();
        rr.ghosts = parts[k].ghost_ids.size();
        for (const auto& msg : orig_ex.messages) {
            if (msg.to == static_cast<int>(k)) rr.ghost_tuples_received += msg.tuples.size();
        }

        const ParticleSet local = ParticleSet::from_interleaved(view.coords);
        const VulnerablePairSet local_pairs = find_vulnerable_pairs(local, params.b, params.xi);
        std::vector<std::array<Index, 2>> global_pairs;
        std::vector<std::uint8_t> linked;
        global_pairs.reserve(local_pairs.size());
        for (std::size_t q = 0; q < local_pairs.size(); ++q) {
            const Index a = view.ids[local_pairs.pairs[q][0]];
            const Index b = view.ids[local_pairs.pairs[q][1]];
            global_pairs.push_back({std::min(a, b), std::max(a, b)});
            linked.push_back(local_pairs.orig_linked[q]);
        }
        const VulnerablePairSet v = make_pair_set(std::move(global_pairs), std::move(linked));
        st.sys = PairSystem::from(v);
        st.owned_pair.resize(v.size());
        for (std::size_t q = 0; q < v.size(); ++q) {
            st.owned_pair[q] = owner[v.pairs[q][0]] == static_cast<int>(k);
            if (st.owned_pair[q]) rep.owned_pairs.push_back(v.pairs[q]);
        }
        st.owned_slot.resize(st.sys.slots());
        for (std::size_t s = 0; s < st.sys.slots(); ++s) st.owned_slot[s] = owner[st.sys.globals[s]] == static_cast<int>(k);

        // Slot coordinates come from the rank's own view (owned + received ghosts).
        const RankView& hview = hat_ex.views[k];
        auto from_view = [&](const RankView& vw) {
            std::vector<double> c(3 * st.sys.slots());
            for (std::size_t s = 0; s < st.sys.slots(); ++s) {
                const Index g = st.sys.globals[s];
                std::size_t idx;
                if (owner[g] == static_cast<int>(k)) {
                    idx = slot_of(parts[k].owned_ids, g);
                } else {
                    idx = parts[k].owned_ids.size() + slot_of(parts[k].ghost_ids, g);
                }
                for (int a = 0; a < 3; ++a) c[3 * s + a] = vw.coords[3 * idx + a];
            }
            return c;
        };
        st.orig = from_view(view);
        st.start = from_view(hview);
        st.opt = OptimState::start(st.start);
        st.grad.assign(st.start.size(), 0.0);

        rr.local_pairs = v.size();
        rr.owned_pairs = static_cast<std::size_t>(std::count(st.owned_pair.begin(), st.owned_pair.end(), 1));
        rr.editable = st.sys.slots();
        rep.tight_pairs_initial += [&] {
            std::size_t n = 0;
            PairSystem owned_only;
            owned_only.globals = st.sys.globals;
            for (std::size_t q = 0; q < st.sys.pairs.size(); ++q) {
                if (!st.owned_pair[q]) continue;
                owned_only.pairs.push_back(st.sys.pairs[q]);
                owned_only.linked.push_back(st.sys.linked[q]);
            }
            n = tight_active_count(owned_only, st.start, params.b, margin);
            return n;
        }();
        st.seconds = seconds_since(t0);
        rep.per_rank.push_back(rr);
    }
    for (const auto& rr : rep.per_rank) rep.total_pairs += rr.owned_pairs;

    // Where each rank finds the authoritative copy of a global id: (owner rank, owner slot).
    auto owner_slot = [&](Index g) {
        const auto& sys = ranks[static_cast<std::size_t>(owner[g])].sys;
        return slot_of(sys.globals, g);
    };
    struct GhostLink {
        std::size_t local_slot;
        int from;
        std::size_t from_slot;
    };
    std::vector<std::vector<GhostLink>> refresh(parts.size());
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto& st = ranks[k];
        for (std::size_t s = 0; s < st.sys.slots(); ++s) {
            if (st.owned_slot[s]) continue;
            const Index g = st.sys.globals[s];
            refresh[k].push_back({s, owner[g], owner_slot(g)});
        }
        // Deliver in (sender rank, global id) order.
        std::stable_sort(refresh[k].begin(), refresh[k].end(),
                         [](const GhostLink& a, const GhostLink& b) { return a.from < b.from; });
    }

    double step = params.vanilla_step;
    if (params.optimizer == Optimizer::vanilla_pgd && !(step > 0.0)) {
        double lipschitz = 0.0;
        for (const auto& st : ranks) lipschitz = std::max(lipschitz, estimate_lipschitz(st.sys, st.orig, params));
        step = 1.0 / lipschitz;
    }

    auto global_loss = [&] {
        double total = 0.0;
        for (auto& st : ranks) {
            const auto t0 = Clock::now();
            total += tight_loss(st.sys, st.opt.positions, params.b, margin, st.owned_pair);
            st.seconds += seconds_since(t0);
        }
        return total;
    };
    auto refresh_ghosts = [&] {
        for (std::size_t k = 0; k < parts.size(); ++k) {
            auto& st = ranks[k];
            for (const auto& link : refresh[k]) {
                const auto& src = ranks[static_cast<std::size_t>(link.from)].opt.positions;
                for (int a = 0; a < 3; ++a) st.opt.positions[3 * link.local_slot + a] = src[3 * link.from_slot + a];
            }
            st.tuples_received += refresh[k].size();
        }
    };

    bool stopped = false;
    for (std::size_t t = 1; t <= params.t_max; ++t) {
        const double current = global_loss();
        rep.loss_trace.push_back(current);
        if (current <= params.eps_loss) {
            stopped = true;
            break;
        }
        for (auto& st : ranks) {
            const auto t0 = Clock::now();
            tight_gradient(st.sys, st.opt.positions, params.b, margin, st.grad);
            if (params.optimizer == Optimizer::adam) {
                adam_step(st.opt, st.grad, params);
            } else {
                vanilla_step(st.opt, st.grad, step);
            }
            clamp_to_box(st.opt.positions, st.orig, box);
            st.seconds += seconds_since(t0);
        }
        refresh_ghosts();
        rep.iterations = t;
    }
    rep.final_loss = stopped ? rep.loss_trace.back() : global_loss();
    if (!stopped) rep.loss_trace.push_back(rep.final_loss);
    rep.converged = rep.final_loss <= params.eps_loss;

    // Owners write their edits into the global arrays.
    std::vector<double> full = p_hat0.interleaved();
    out.delta.assign(full.size(), 0.0);
    for (const auto& st : ranks) {
        for (std::size_t s = 0; s < st.sys.slots(); ++s) {
            if (!st.owned_slot[s]) continue;
            const std::size_t g = st.sys.globals[s];
            for (int a = 0; a < 3; ++a) {
                full[3 * g + a] = st.opt.positions[3 * s + a];
                out.delta[3 * g + a] = st.opt.positions[3 * s + a] - st.start[3 * s + a];
            }
        }
    }
    for (std::size_t k = 0; k < ranks.size(); ++k) {
        rep.per_rank[k].seconds = ranks[k].seconds;
        rep.per_rank[k].ghost_tuples_received += ranks[k].tuples_received;
    }
    out.corrected = ParticleSet::from_interleaved(full, merge(p_hat0.bbox(), p_orig.bbox()));
    out.edits = make_edit_log(p_orig, p_hat0, out.delta, params.xi, params.b, params.m, precision, stage2);
    return out;
}

double imbalance_of(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (mean == 0.0) return 0.0;
    return (*std::max_element(values.begin(), values.end()) - mean) / mean;
}

Imbalance imbalance(const DistributedReport& report) {
    std::vector<double> times, counts;
    for (const auto& r : report.per_rank) {
        times.push_back(r.seconds);
        counts.push_back(static_cast<double>(r.owned));
    }
    return {imbalance_of(times), imbalance_of(counts)};
}

}  // namespace clusterguard
