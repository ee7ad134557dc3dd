#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "clusterguard/corrector.hpp"
#include "clusterguard/distributed.hpp"
#include "clusterguard/edit_codec.hpp"
#include "clusterguard/particles.hpp"
#include "clusterguard/spatial_index.hpp"

namespace clusterguard {

/// Detection, correction and encoding of one (original, decompressed) pair.
struct PipelineResult {
    VulnerablePairSet pairs;
    std::size_t iterations = 0;
    bool converged = false;
    double final_loss = 0.0;
    std::vector<double> loss_trace;
    std::size_t tight_pairs_initial = 0;
    std::size_t coincident_events = 0;
    std::vector<double> delta;
    EditLogBuild edits;
    std::vector<std::uint8_t> encoded;
    ParticleSet reconstructed;
    std::optional<DistributedReport> distributed;
};

/// ranks == 1 runs the single-process corrector; ranks > 1 the simulated multi-rank protocol.
PipelineResult run_pipeline(const ParticleSet& p_orig, const ParticleSet& p_hat0, const CorrectionParams& params,
                            int ranks = 1, Precision precision = Precision::f64, Stage2 stage2 = Stage2::deflate);

/// Ordered key/value lines, `key: value`.
class Report {
public:
    void add(const std::string& key, const std::string& value);
    void add(const std::string& key, double value);
    void add(const std::string& key, std::uint64_t value);
    void add(const std::string& key, std::int64_t value);
    void add(const std::string& key, int value) { add(key, static_cast<std::int64_t>(value)); }
    void add(const std::string& key, bool value) { add(key, std::string(value ? "true" : "false")); }

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
    std::optional<std::string> get(const std::string& key) const;
    std::string str() const;

    static Report parse(const std::string& text);

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// Shortest round-tripping decimal form; inf/-inf/nan spelled out.
std::string format_double(double v);

void add_pipeline_fields(Report& report, const PipelineResult& r, const CorrectionParams& params,
                         std::size_t n, std::size_t base_bytes);

}  // namespace clusterguard
