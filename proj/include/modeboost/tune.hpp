#pragma once

#include "modeboost/gbtree.hpp"
#include "modeboost/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace modeboost::tune {

struct ParamSpec {
    enum class Kind { Uniform, LogUniform, IntUniform, Categorical };

    std::string name;
    Kind kind = Kind::Uniform;
    double lo = 0.0;
    double hi = 1.0;
    std::vector<std::string> choices;

    static ParamSpec uniform(std::string name, double lo, double hi);
    static ParamSpec log_uniform(std::string name, double lo, double hi);
    static ParamSpec int_uniform(std::string name, long long lo, long long hi);
    static ParamSpec categorical(std::string name, std::vector<std::string> choices);

    bool numeric() const { return kind != Kind::Categorical; }
    /// Whether `v` is a legal value (categoricals store the choice index).
    bool contains(double v) const;
};

using SearchSpace = std::vector<ParamSpec>;
/// Parameter name to value; categoricals hold the index of the choice.
using Params = std::map<std::string, double>;

/// Throws EmptySpace or InvalidConfig (lo >= hi, non-positive log bounds,
/// no categorical choices).
void validate(const SearchSpace& space);

enum class TrialState { Running, Pruned, Complete, Failed };

std::string_view to_string(TrialState s);

struct Trial {
    int id = 0;
    Params params;
    std::map<int, double> intermediate;
    std::optional<double> value;
    TrialState state = TrialState::Running;
    std::string error;
};

struct TpeOptions {
    double gamma = 0.25;
    int n_candidates = 24;
    int n_startup = 10;
    /// Lower clamp on kernel bandwidths as a fraction of the parameter range.
    double min_bandwidth = 0.01;
    double prior_weight = 1.0;
};

/// Univariate TPE over completed trials; uniform sampling during start-up.
Params tpe_suggest(std::span<const Trial> history, const SearchSpace& space, const TpeOptions& options,
                   Xoshiro256& rng);

/// Uniform draw from the space.
Params random_suggest(const SearchSpace& space, Xoshiro256& rng);

/// True when at least `min_trials` completed trials reported at `step` and
/// `value` is strictly worse (greater) than their median.
bool median_prune(double value, int step, std::span<const Trial> history, int min_trials = 5);

/// Handed to the objective for intermediate reports.
class TrialContext {
public:
    TrialContext(int id, std::function<bool(int, double)> report) : id_(id), report_(std::move(report)) {}
    int id() const { return id_; }
    /// Records the value; returns true when the trial should stop.
    bool report(int step, double value);
    bool pruned() const { return pruned_; }
    const std::map<int, double>& intermediate() const { return intermediate_; }

private:
    int id_;
    std::function<bool(int, double)> report_;
    std::map<int, double> intermediate_;
    bool pruned_ = false;
};

/// Lower is better.
using Objective = std::function<double(const Params&, TrialContext&)>;

enum class Sampler { Tpe, Random };

struct StudyOptions {
    TpeOptions tpe;
    Sampler sampler = Sampler::Tpe;
    bool prune = true;
    int prune_min_trials = 5;
    std::size_t jobs = 1;
};

struct Study {
    std::vector<Trial> trials;
    std::vector<std::string> notes;

    /// Best completed trial, or nullptr.
    const Trial* best() const;
};

/// Runs `n_trials` more trials, appending to `study`. Trials already in the
/// study are history for the sampler only when `warm` selects them. With
/// jobs > 1 suggestions use snapshots of the completed trials, so the study
/// is only reproducible with jobs == 1. Failed objectives are recorded.
void optimize(Study& study, const SearchSpace& space, const Objective& objective, int n_trials, std::uint64_t seed,
              const StudyOptions& options, const std::function<bool(const Trial&)>& warm = {});

/// Each numeric bound becomes a window of relative width `narrow` (in log
/// space for log-uniform) centred on `best` and clipped to the original range.
SearchSpace narrow_space(const SearchSpace& space, const Params& best, double narrow);

struct CoarseToFineResult {
    Study study;
    SearchSpace phase2_space;
    int phase1_trials = 0;
    double phase1_best = 0.0;
    Params best;
    double best_value = 0.0;
};

/// Phase 1 over the full space, phase 2 over the narrowed space warm-started
/// with phase-1 trials inside it. Throws ObjectiveFailure when no trial of a
/// phase completes.
CoarseToFineResult coarse_to_fine(const SearchSpace& space, const Objective& objective, int n1, int n2, double narrow,
                                  std::uint64_t seed, const StudyOptions& options = {});

/// `trial,state,metric,step_metrics,params_json_blob` with `#` header notes.
void write_study_csv(const Study& study, const SearchSpace& space, const std::filesystem::path& path);

/// Parameter value as text (choice name for categoricals).
std::string render_value(const ParamSpec& spec, double v);
std::string params_json(const SearchSpace& space, const Params& params);

/// Default space: learning_rate log [0.01, 0.3], max_depth int [3, 10],
/// lambda log [0.1, 10], gamma [0, 5], subsample and colsample [0.5, 1].
SearchSpace default_gbt_space();

/// Overwrites the fields named in `params`. Throws InvalidConfig for unknown names.
TrainParams apply_params(TrainParams base, const Params& params);

/// `[train]` TOML fragment.
std::string params_toml(const SearchSpace& space, const Params& params);

}  // namespace modeboost::tune
