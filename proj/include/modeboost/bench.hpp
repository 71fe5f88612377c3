#pragma once

#include "modeboost/features.hpp"
#include "modeboost/gbtree.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace modeboost {

struct BenchOptions {
    std::size_t batch_size = 3500;
    int warmup = 3;
    int repeats = 10;
    /// Threads for the batch call; timing loops stay single-threaded at 1.
    std::size_t threads = 1;
};

struct BenchReport {
    int horizon = 0;
    Task task = Task::Regression;
    std::size_t batch_size = 0;
    /// Wall time of each timed batch call.
    std::vector<double> batch_ms;
    /// Wall time of each single-row call of the per-record loop.
    std::vector<double> record_ms;
    double total_ms = 0.0;  // mean batch wall time
    double per_record_mean_ms = 0.0;
    double p50_ms = 0.0;
    double p95_ms = 0.0;
    double p99_ms = 0.0;
    double records_per_s = 0.0;
    std::size_t model_bytes = 0;
    std::size_t resident_bytes = 0;
    std::optional<std::size_t> peak_rss_bytes;
    std::string host;
    bool outputs_identical = true;
};

/// Batch and per-record latency of `model` on raw rows (row-major, model
/// feature order). Rows are cycled up to the batch size. Throws EmptyMatrix,
/// ClockUnavailable.
BenchReport bench_inference(const Ensemble& model, std::span<const double> raw_rows, const BenchOptions& options = {});

struct ModelFootprint {
    std::size_t serialized_bytes = 0;
    std::size_t resident_bytes = 0;
};

ModelFootprint model_footprint(const Ensemble& model);

/// Nearest-rank percentile of an unsorted sample.
struct FeaturizeTiming {
    double total_ms = 0.0;  // mean over repeats
    std::size_t rows = 0;
    double per_record_ms = 0.0;
};

/// Times full matrix assembly of `panel`, reported apart from prediction so
/// featurize + predict cost per record can be read off both reports.
FeaturizeTiming bench_featurize(const DemandPanel& panel, const features::FeatureConfig& config,
                                std::span<const int> horizons, const labeling::LabelConfig& labels,
                                const SplitIndices& split, int repeats = 3);

double percentile(std::vector<double> sample, double q);

/// Operating system, architecture, core count and compiler.
std::string host_descriptor();

/// Peak resident set size of this process when the platform reports it.
std::optional<std::size_t> peak_rss_bytes();

/// One report per model; horizon and task are taken from the models.
std::vector<BenchReport> bench_suite(std::span<const Ensemble* const> models, std::span<const double> raw_rows,
                                     const BenchOptions& options = {});

/// `horizon,task,batch_size,total_ms,per_record_mean_ms,p50,p95,p99,records_per_s,model_bytes`
/// preceded by `#` lines with host, RSS and extra timings.
void write_bench_csv(std::span<const BenchReport> reports, const std::filesystem::path& path,
                     const std::vector<std::string>& notes = {});

}  // namespace modeboost
