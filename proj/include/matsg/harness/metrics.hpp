// metrics.hpp - append-only metric rows, binning and CSV emission.
#pragma once

#include <string>
#include <vector>

namespace matsg::harness {

struct MetricsRow {
    std::string run;
    std::uint64_t seed = 0;
    std::uint64_t step = 0;
    std::string metric;
    double value = 0.0;
    bool operator==(const MetricsRow&) const = default;
};

class MetricsLog {
public:
    // Throws when step decreases within (run, seed).
    void add(const std::string& run, std::uint64_t seed, std::uint64_t step, const std::string& metric, double value);
    const std::vector<MetricsRow>& rows() const { return rows_; }

    // Header `run,seed,step,metric,value`, LF line endings.
    std::string to_csv() const;
    static MetricsLog from_csv(std::string_view text);

private:
    std::vector<MetricsRow> rows_;
};

struct BinnedRow {
    std::string run;
    std::uint64_t seed = 0;
    std::string metric;
    std::size_t bin = 0;
    std::uint64_t first_step = 0;
    std::uint64_t last_step = 0;
    std::size_t count = 0;
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation over the bin
};

// Groups each (run, seed, metric) series in row order into consecutive
// bins of k values; a short final bin is kept.
std::vector<BinnedRow> bin_metrics(const std::vector<MetricsRow>& rows, std::size_t k);
std::string binned_csv(const std::vector<BinnedRow>& rows);

// Shortest round-trip decimal text of a value.
std::string format_number(double v);

}  // namespace matsg::harness
