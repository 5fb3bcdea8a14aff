// level_buffer.hpp - bounded store of scenarios prioritized by regret and staleness.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "matsg/core/rng.hpp"
#include "matsg/dsl/scenario.hpp"

namespace matsg::curriculum {

struct BufferEntry {
    dsl::ScenarioParams params;
    double regret_score = 0.0;
    std::uint64_t last_sampled_step = 0;
    std::uint64_t insert_step = 0;
    double max_return_seen = 0.0;
    bool operator==(const BufferEntry&) const = default;
};

struct BufferConfig {
    std::size_t capacity = 256;
    double temperature = 0.3;  // beta of the rank prioritization
    double staleness_mix = 0.3;  // rho
};

class LevelBuffer {
public:
    explicit LevelBuffer(BufferConfig cfg = {});

    const BufferConfig& config() const { return cfg_; }
    const std::vector<BufferEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    std::optional<std::size_t> find(const dsl::ScenarioParams& params) const;

    // Inserts θ, or raises the score of an existing copy to max(old, new).
    // At capacity the lowest-scoring entry (oldest on ties) is evicted unless
    // the new score is below it, in which case nothing changes. Returns
    // whether θ is in the buffer afterwards.
    bool insert(const dsl::ScenarioParams& params, double regret, std::uint64_t step, double max_return);

    // Replaces the score of a replayed entry and folds in its latest return.
    void rescore(std::size_t index, double regret, double max_return);

    // (1 - rho) P_rank + rho P_stale. Ranks order entries by descending
    // score, ties by insertion (older first). Staleness is uniform when no
    // entry is stale.
    std::vector<double> weights(std::uint64_t current_step) const;

    // Draws an entry index and marks it sampled at current_step.
    std::size_t sample(std::uint64_t current_step, Rng& rng);

    double mean_regret() const;

    // CSV: assignment,seed,regret,last_sampled_step,insert_step,max_return_seen
    std::string to_csv() const;
    static LevelBuffer from_csv(std::string_view text, const std::string& spec_id, BufferConfig cfg = {});

private:
    BufferConfig cfg_;
    std::vector<BufferEntry> entries_;
};

}  // namespace matsg::curriculum
