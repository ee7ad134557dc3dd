#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "clusterguard/particles.hpp"
#include "clusterguard/spatial_index.hpp"

namespace clusterguard {

enum class Optimizer { adam, vanilla_pgd };

struct CorrectionParams {
    double xi = 0.0;  // absolute per-coordinate bound
    double b = 0.0;   // linking length
    int m = 16;       // edit bit depth
    double alpha = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_adam = 1e-8;
    std::size_t t_max = 10'000;
    double eps_loss = 1e-10;
    Optimizer optimizer = Optimizer::adam;
    /// Fixed step for vanilla PGD; <= 0 selects 1 / estimated gradient Lipschitz constant.
    double vanilla_step = 0.0;
    /// Largest change rounding to the storage precision can make to a coordinate (0 for f64).
    /// Subtracted from xi' and added to eps_q in the distance margin so the stored
    /// reconstruction keeps both the bound and the link states.
    double storage_rounding = 0.0;

    /// Safety margin 2 xi / (2^m - 1) used by the tightened loss.
    double eps_q() const;
    /// Shrunken box half-width xi (1 - 2^-m) - storage_rounding.
    double xi_prime() const;
    /// Distance margin 2 sqrt(3) (eps_q + storage_rounding) on both sides of b in the tightened loss.
    double distance_margin() const;

    /// Throws std::invalid_argument when an invariant does not hold.
    void validate() const;
};

/// Vulnerable pairs re-indexed onto a compact slot array holding only editable particles.
/// Slot k corresponds to global particle `globals[k]`; coordinates are interleaved per slot.
struct PairSystem {
    std::vector<std::array<Index, 2>> pairs;
    std::vector<std::uint8_t> linked;
    std::vector<Index> globals;

    std::size_t slots() const { return globals.size(); }
    static PairSystem from(const VulnerablePairSet& v);
};

/// Gathers interleaved coordinates of the given particles.
std::vector<double> gather(const ParticleSet& p, std::span<const Index> ids);

// Pair kernels over slot coordinates. `counted`, when non-empty, restricts the loss sum to
// pairs with a nonzero flag (the gradient always covers every pair).
double violation_loss(const PairSystem& sys, std::span<const double> pos, double b);
double tight_loss(const PairSystem& sys, std::span<const double> pos, double b, double margin,
                  std::span<const std::uint8_t> counted = {});
/// Number of pairs with an active tightened-loss term.
std::size_t tight_active_count(const PairSystem& sys, std::span<const double> pos, double b, double margin);
/// Writes d tight_loss / d pos into grad (zeroed first). Returns how many coincident pairs
/// (distance exactly 0 inside an active term) were given the fixed +x direction.
std::size_t tight_gradient(const PairSystem& sys, std::span<const double> pos, double b, double margin,
                           std::span<double> grad);
/// Clamps each coordinate to [orig - bound, orig + bound].
void clamp_to_box(std::span<double> pos, std::span<const double> orig, double bound);

// Whole-set convenience forms. `v` carries the original link state, so the original
// coordinates are not needed to evaluate the losses.
double loss(const ParticleSet& p_hat, const VulnerablePairSet& v, double b);
double tight_loss(const ParticleSet& p_hat, const VulnerablePairSet& v, double b, double eps_q);
/// Gradient over editable coordinates, interleaved in v.editable order (length 3|E|).
std::vector<double> gradient(const ParticleSet& p_hat, const VulnerablePairSet& v, double b, double eps_q);
ParticleSet project_box(const ParticleSet& p_hat, const ParticleSet& p_orig, double bound);

struct OptimState {
    std::vector<double> positions;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    std::uint64_t t = 0;

    static OptimState start(std::vector<double> positions);
};

/// One bias-corrected Adam update; increments state.t first.
void adam_step(OptimState& state, std::span<const double> g, const CorrectionParams& params);
void vanilla_step(OptimState& state, std::span<const double> g, double step);

/// Upper bound on the Lipschitz constant of the tight-loss gradient over the box of half-width
/// xi around the originals: 4 * max_degree * max(1, (b + margin) / d_min - 1), where d_min bounds
/// the reconstructed distance of every unlinked pair from below.
double estimate_lipschitz(const PairSystem& sys, std::span<const double> orig, const CorrectionParams& params);

struct CorrectionResult {
    ParticleSet corrected;
    /// Dense edits, interleaved (x0, y0, z0, x1, ...), zero outside editable particles.
    std::vector<double> delta;
    std::size_t iterations = 0;
    double final_loss = 0.0;
    bool converged = false;
    /// Tight loss at the top of every iteration, plus the final value.
    std::vector<double> loss_trace;
    std::size_t tight_pairs_initial = 0;
    std::size_t coincident_events = 0;
};

/// Checks |p_hat - p_orig| <= xi on every coordinate; throws DataError naming the first breach.
void check_within_bound(const ParticleSet& p_orig, const ParticleSet& p_hat, double xi);

/// Projected gradient descent on the tightened loss until it drops to eps_loss or t_max steps.
CorrectionResult correct(const ParticleSet& p_orig, const ParticleSet& p_hat0, const VulnerablePairSet& v,
                         const CorrectionParams& params);

/// Advisory iteration cap ceil(12 xi^2 n_tight / eps_loss).
std::uint64_t iteration_budget(double xi, std::size_t n_tight_pairs, double eps_loss);

}  // namespace clusterguard
