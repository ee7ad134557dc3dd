#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "clusterguard/corrector.hpp"
#include "clusterguard/edit_codec.hpp"
#include "clusterguard/particles.hpp"
#include "clusterguard/spatial_index.hpp"

namespace clusterguard {

/// One simulated rank: a box of the regular decomposition, the particles it owns and the
/// ghost particles replicated from neighbours whose padded boxes overlap its own.
struct RankPartition {
    int rank_id = 0;
    DomainBox box;
    std::vector<Index> owned_ids;  // ascending
    std::vector<Index> ghost_ids;  // ascending
    std::vector<int> neighbor_ranks;
};

/// Nearest-to-cubic factorisation r = gx * gy * gz with gx >= gy >= gz.
std::array<int, 3> rank_grid(int r);

/// Ghost-zone width b + 2 sqrt(3) xi.
double ghost_width(double b, double xi);

/// Regular grid decomposition of `domain`. Ownership is by containment with half-open upper
/// faces (closed on the domain's upper boundary); ghosts are all non-owned particles inside the
/// rank's box padded by `delta`.
std::vector<RankPartition> decompose(const DomainBox& domain, const ParticleSet& p, int r, double delta);

/// Rank that owns position x under the decomposition `decompose` uses.
int owner_of(const DomainBox& domain, const std::array<int, 3>& grid, const Vec3& x);

struct GhostTuple {
    Index id;
    double x, y, z;
};

struct GhostMessage {
    int from = 0;
    int to = 0;
    std::vector<GhostTuple> tuples;  // ascending id
};

/// Coordinates a rank holds after an exchange: owned ids first, then ghosts, each ascending.
struct RankView {
    std::vector<Index> ids;
    std::vector<double> coords;  // interleaved
    std::size_t owned = 0;
};

struct GhostExchange {
    std::vector<RankView> views;
    /// Delivered in order of (sender rank, receiver rank); tuples ascending by id.
    std::vector<GhostMessage> messages;
    std::size_t tuple_count() const;
};

GhostExchange exchange_ghosts(const std::vector<RankPartition>& partitions, const ParticleSet& p_current);

struct RankReport {
    int rank_id = 0;
    std::size_t owned = 0;
    std::size_t ghosts = 0;
    std::size_t local_pairs = 0;
    std::size_t owned_pairs = 0;
    std::size_t editable = 0;
    std::size_t ghost_tuples_received = 0;
    double seconds = 0.0;
};

struct DistributedReport {
    int ranks = 1;
    std::array<int, 3> grid{1, 1, 1};
    double ghost_width = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    double final_loss = 0.0;
    std::vector<double> loss_trace;
    std::size_t tight_pairs_initial = 0;
    std::size_t total_pairs = 0;
    std::vector<RankReport> per_rank;
    /// Owned pairs of every rank (global ids), concatenated in rank order.
    std::vector<std::array<Index, 2>> owned_pairs;
};

struct DistributedResult {
    std::vector<double> delta;
    ParticleSet corrected;
    EditLogBuild edits;
    DistributedReport report;
};

/// Runs detection and projected gradient descent on r simulated ranks with per-iteration ghost
/// refresh and a rank-ordered global loss reduction; owners write the final edits.
DistributedResult distributed_correct(const ParticleSet& p_orig, const ParticleSet& p_hat0,
                                      const CorrectionParams& params, int r, Precision precision = Precision::f64,
                                      Stage2 stage2 = Stage2::deflate);

struct Imbalance {
    double time_imbalance = 0.0;
    double data_imbalance = 0.0;
};

/// (max - mean) / mean of the values; 0 for an empty or all-zero list.
double imbalance_of(const std::vector<double>& values);
Imbalance imbalance(const DistributedReport& report);

}  // namespace clusterguard
