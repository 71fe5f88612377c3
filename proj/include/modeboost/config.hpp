#pragma once

#include "modeboost/baselines.hpp"
#include "modeboost/features.hpp"
#include "modeboost/gbtree.hpp"
#include "modeboost/labeling.hpp"
#include "modeboost/postprocess.hpp"
#include "modeboost/series.hpp"
#include "modeboost/tune.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace modeboost {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

/// Independent sub-seed for the component named `label`.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

/// Explicit flag, else MODEBOOST_JOBS, else 1. Throws UsageError for a
/// malformed environment value.
std::size_t resolve_jobs(std::optional<std::size_t> flag);

struct PathsConfig {
    std::filesystem::path input;
    std::filesystem::path holidays;
    std::filesystem::path regions;
    std::filesystem::path out_dir = "modeboost-out";
};

struct TuneConfig {
    int phase1_trials = 30;
    int phase2_trials = 30;
    double narrow = 0.5;
    tune::TpeOptions tpe;
    bool prune = true;
    int horizon = 60;
    Task task = Task::Regression;
};

struct RunConfig {
    PathsConfig paths;
    features::FeatureConfig features;
    labeling::LabelConfig labeling;
    TrainParams train;
    ScaleMode scale_mode = ScaleMode::MinMax;
    std::vector<int> horizons{5, 15, 30, 60};
    std::vector<Task> tasks{Task::Regression, Task::Classification};
    SplitRatios split;
    baselines::BaselineConfig baselines;
    TuneConfig tune;
    std::uint64_t seed = 42;
    std::size_t jobs = 1;

    /// Throws InvalidConfig.
    void validate() const;

    /// Stable `key=value` rendering of every setting that can change results
    /// (paths and thread counts excluded).
    std::string canonical() const;
    /// hex64(fnv1a64(canonical())).
    std::string hash() const;
};

/// Sections [paths] [features] [labeling] [train] [tune]; unknown keys throw
/// InvalidConfig. Relative paths resolve against `base_dir`.
RunConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

}  // namespace modeboost
