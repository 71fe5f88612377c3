#include "modeboost/bench.hpp"

#include "modeboost/csv.hpp"
#include "modeboost/error.hpp"

#include <sys/resource.h>
#include <sys/utsname.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

namespace modeboost {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

double percentile(std::vector<double> sample, double q) {
    if (sample.empty()) return 0.0;
    std::sort(sample.begin(), sample.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sample.size())));
    return sample[std::clamp<std::size_t>(rank, 1, sample.size()) - 1];
}

std::string host_descriptor() {
    std::ostringstream out;
    utsname u{};
    if (uname(&u) == 0) {
        out << u.sysname << ' ' << u.release << ' ' << u.machine;
    } else {
        out << "unknown-os";
    }
    out << " cores=" << std::thread::hardware_concurrency();
#if defined(__clang__)
    out << " clang-" << __clang_major__ << '.' << __clang_minor__;
#elif defined(__GNUC__)
    out << " gcc-" << __GNUC__ << '.' << __GNUC_MINOR__;
#endif
    return out.str();
}

std::optional<std::size_t> peak_rss_bytes() {
    rusage r{};
    if (getrusage(RUSAGE_SELF, &r) != 0 || r.ru_maxrss <= 0) return std::nullopt;
    return static_cast<std::size_t>(r.ru_maxrss) * 1024;  // Linux reports KiB
}

ModelFootprint model_footprint(const Ensemble& model) {
    return {serialize(model).size(), estimated_resident_bytes(model)};
}

BenchReport bench_inference(const Ensemble& model, std::span<const double> raw_rows, const BenchOptions& options) {
    if (!Clock::is_steady) throw Error(ErrorCode::ClockUnavailable, "no monotonic clock");
    const std::size_t cols = model.feature_names.size();
    if (cols == 0 || raw_rows.size() < cols || raw_rows.size() % cols != 0) {
        throw Error(ErrorCode::EmptyMatrix, "benchmark needs at least one row in model feature order");
    }
    if (options.batch_size == 0 || options.repeats < 1 || options.warmup < 0) {
        throw Error(ErrorCode::InvalidConfig, "batch size and repeats must be >= 1");
    }
    const std::size_t available = raw_rows.size() / cols;
    std::vector<double> batch(options.batch_size * cols);
    for (std::size_t r = 0; r < options.batch_size; ++r) {
        const auto src = raw_rows.subspan((r % available) * cols, cols);
        std::copy(src.begin(), src.end(), batch.begin() + static_cast<std::ptrdiff_t>(r * cols));
    }

    BenchReport rep;
    rep.horizon = model.horizon;
    rep.task = model.task;
    rep.batch_size = options.batch_size;
    rep.host = host_descriptor();
    const auto fp = model_footprint(model);
    rep.model_bytes = fp.serialized_bytes;
    rep.resident_bytes = fp.resident_bytes;

    std::vector<double> reference;
    for (int i = 0; i < options.warmup; ++i) reference = model.predict_rows(batch, options.threads);
    for (int i = 0; i < options.repeats; ++i) {
        const auto t0 = Clock::now();
        auto out = model.predict_rows(batch, options.threads);
        rep.batch_ms.push_back(ms_since(t0));
        if (reference.empty()) reference = out;
        rep.outputs_identical = rep.outputs_identical && out == reference;
    }

    rep.record_ms.reserve(options.batch_size * static_cast<std::size_t>(options.repeats));
    for (int i = 0; i < options.repeats; ++i) {
        for (std::size_t r = 0; r < options.batch_size; ++r) {
            const auto row = std::span<const double>(batch).subspan(r * cols, cols);
            const auto t0 = Clock::now();
            const double v = model.predict_row(row);
            rep.record_ms.push_back(ms_since(t0));
            rep.outputs_identical = rep.outputs_identical && v == reference[r];
        }
    }

    rep.total_ms = std::accumulate(rep.batch_ms.begin(), rep.batch_ms.end(), 0.0) / static_cast<double>(rep.batch_ms.size());
    rep.per_record_mean_ms =
        std::accumulate(rep.record_ms.begin(), rep.record_ms.end(), 0.0) / static_cast<double>(rep.record_ms.size());
    rep.p50_ms = percentile(rep.record_ms, 0.50);
    rep.p95_ms = percentile(rep.record_ms, 0.95);
    rep.p99_ms = percentile(rep.record_ms, 0.99);
    rep.records_per_s = rep.total_ms > 0.0 ? static_cast<double>(options.batch_size) / (rep.total_ms / 1000.0) : 0.0;
    rep.peak_rss_bytes = peak_rss_bytes();
    return rep;
}

std::vector<BenchReport> bench_suite(std::span<const Ensemble* const> models, std::span<const double> raw_rows,
                                     const BenchOptions& options) {
    std::vector<BenchReport> out;
    for (const Ensemble* m : models) out.push_back(bench_inference(*m, raw_rows, options));
    return out;
}

FeaturizeTiming bench_featurize(const DemandPanel& panel, const features::FeatureConfig& config,
                                std::span<const int> horizons, const labeling::LabelConfig& labels,
                                const SplitIndices& split, int repeats) {
    if (repeats < 1) throw Error(ErrorCode::InvalidConfig, "repeats must be >= 1");
    FeaturizeTiming out;
    double sum = 0.0;
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = Clock::now();
        const auto m = features::assemble_matrix(panel, config, horizons, labels, split);
        sum += ms_since(t0);
        out.rows = m.rows;
    }
    out.total_ms = sum / repeats;
    out.per_record_ms = out.total_ms / static_cast<double>(out.rows);
    return out;
}

void write_bench_csv(std::span<const BenchReport> reports, const std::filesystem::path& path,
                     const std::vector<std::string>& notes) {
    std::ostringstream out;
    out.precision(10);
    out << "# host=" << host_descriptor() << '\n';
    if (auto rss = peak_rss_bytes()) out << "# peak_rss_bytes=" << *rss << '\n';
    for (const auto& r : reports) {
        out << "# horizon=" << r.horizon << " task=" << to_string(r.task) << " resident_bytes=" << r.resident_bytes
            << " outputs_identical=" << (r.outputs_identical ? 1 : 0) << '\n';
    }
    for (const auto& n : notes) out << "# " << n << '\n';
    out << "horizon,task,batch_size,total_ms,per_record_mean_ms,p50,p95,p99,records_per_s,model_bytes\n";
    for (const auto& r : reports) {
        out << r.horizon << ',' << to_string(r.task) << ',' << r.batch_size << ',' << r.total_ms << ','
            << r.per_record_mean_ms << ',' << r.p50_ms << ',' << r.p95_ms << ',' << r.p99_ms << ',' << r.records_per_s
            << ',' << r.model_bytes << '\n';
    }
    csv::write_file_atomic(path, out.str());
}

}  // namespace modeboost
