#include "modeboost/tune.hpp"

#include "modeboost/csv.hpp"
#include "modeboost/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace modeboost::tune {

ParamSpec ParamSpec::uniform(std::string name, double lo, double hi) {
    return {std::move(name), Kind::Uniform, lo, hi, {}};
}
ParamSpec ParamSpec::log_uniform(std::string name, double lo, double hi) {
    return {std::move(name), Kind::LogUniform, lo, hi, {}};
}
ParamSpec ParamSpec::int_uniform(std::string name, long long lo, long long hi) {
    return {std::move(name), Kind::IntUniform, static_cast<double>(lo), static_cast<double>(hi), {}};
}
ParamSpec ParamSpec::categorical(std::string name, std::vector<std::string> choices) {
    return {std::move(name), Kind::Categorical, 0.0, 0.0, std::move(choices)};
}

bool ParamSpec::contains(double v) const {
    if (!std::isfinite(v)) return false;
    switch (kind) {
        case Kind::Uniform:
        case Kind::LogUniform: return lo <= v && v <= hi;
        case Kind::IntUniform: return lo <= v && v <= hi && v == std::round(v);
        case Kind::Categorical: return v >= 0 && v < static_cast<double>(choices.size()) && v == std::round(v);
    }
    return false;
}

void validate(const SearchSpace& space) {
    if (space.empty()) throw Error(ErrorCode::EmptySpace, "search space has no parameters");
    for (const auto& p : space) {
        if (p.kind == ParamSpec::Kind::Categorical) {
            if (p.choices.empty()) throw Error(ErrorCode::InvalidConfig, p.name + ": no categorical choices");
            continue;
        }
        if (!(p.lo < p.hi)) throw Error(ErrorCode::InvalidConfig, p.name + ": lower bound must be below upper");
        if (p.kind == ParamSpec::Kind::LogUniform && !(p.lo > 0.0))
            throw Error(ErrorCode::InvalidConfig, p.name + ": log bounds must be positive");
    }
}

std::string_view to_string(TrialState s) {
    switch (s) {
        case TrialState::Running: return "running";
        case TrialState::Pruned: return "pruned";
        case TrialState::Complete: return "complete";
        case TrialState::Failed: return "failed";
    }
    return "?";
}

namespace {

// Numeric parameters are modelled on an internal axis: log for log-uniform,
// widened by half a step each side for integers.
struct Axis {
    double a = 0.0;
    double b = 1.0;
};

Axis axis_of(const ParamSpec& p) {
    switch (p.kind) {
        case ParamSpec::Kind::LogUniform: return {std::log(p.lo), std::log(p.hi)};
        case ParamSpec::Kind::IntUniform: return {p.lo - 0.5, p.hi + 0.5};
        default: return {p.lo, p.hi};
    }
}

double to_axis(const ParamSpec& p, double v) { return p.kind == ParamSpec::Kind::LogUniform ? std::log(v) : v; }

double from_axis(const ParamSpec& p, double x) {
    double v = x;
    if (p.kind == ParamSpec::Kind::LogUniform) v = std::exp(x);
    if (p.kind == ParamSpec::Kind::IntUniform) v = std::round(x);
    return std::clamp(v, p.lo, p.hi);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Truncated Gaussian mixture on one axis. Each kernel's bandwidth is the wider
// gap to its sorted neighbours (bounds count as neighbours), clipped to
// [range / min(100, n + 1), range] with `min_bandwidth * range` as a floor.
class Parzen {
public:
    Parzen(std::vector<double> obs, Axis axis, const TpeOptions& o) : obs_(std::move(obs)), ax_(axis), prior_(o.prior_weight) {
        const double range = ax_.b - ax_.a;
        const double n = static_cast<double>(obs_.size());
        const double floor = std::max(o.min_bandwidth * range, range / std::min(100.0, n + 1.0));
        std::vector<std::size_t> order(obs_.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return obs_[i] < obs_[j]; });
        sigma_.assign(obs_.size(), range);
        for (std::size_t k = 0; k < order.size(); ++k) {
            const double x = obs_[order[k]];
            const double left = k == 0 ? ax_.a : obs_[order[k - 1]];
            const double right = k + 1 == order.size() ? ax_.b : obs_[order[k + 1]];
            sigma_[order[k]] = std::clamp(std::max(x - left, right - x), floor, range);
        }
        for (std::size_t i = 0; i < obs_.size(); ++i) {
            mass_.push_back(normal_cdf((ax_.b - obs_[i]) / sigma_[i]) - normal_cdf((ax_.a - obs_[i]) / sigma_[i]));
        }
    }

    double density(double x) const {
        double d = prior_ / (ax_.b - ax_.a);
        for (std::size_t i = 0; i < obs_.size(); ++i) {
            const double z = (x - obs_[i]) / sigma_[i];
            d += std::exp(-0.5 * z * z) / (sigma_[i] * std::sqrt(2.0 * std::numbers::pi) * mass_[i]);
        }
        return d / (prior_ + static_cast<double>(obs_.size()));
    }

    double sample(Xoshiro256& rng) const {
        const double u = rng.uniform() * (prior_ + static_cast<double>(obs_.size()));
        if (u < prior_ || obs_.empty()) return ax_.a + rng.uniform() * (ax_.b - ax_.a);
        const auto i = std::min(obs_.size() - 1, static_cast<std::size_t>(u - prior_));
        std::normal_distribution<double> n(obs_[i], sigma_[i]);
        for (int tries = 0; tries < 64; ++tries) {
            const double x = n(rng);
            if (x >= ax_.a && x <= ax_.b) return x;
        }
        return std::clamp(obs_[i], ax_.a, ax_.b);
    }

private:
    std::vector<double> obs_;
    Axis ax_;
    double prior_;
    std::vector<double> sigma_;
    std::vector<double> mass_;
};

std::vector<double> category_probs(const ParamSpec& p, const std::vector<const Trial*>& trials) {
    std::vector<double> probs(p.choices.size(), 1.0);
    for (const Trial* t : trials) probs[static_cast<std::size_t>(t->params.at(p.name))] += 1.0;
    const double total = static_cast<double>(trials.size() + p.choices.size());
    for (double& v : probs) v /= total;
    return probs;
}

double draw_uniform(const ParamSpec& p, Xoshiro256& rng) {
    if (p.kind == ParamSpec::Kind::Categorical) return static_cast<double>(rng.below(p.choices.size()));
    const Axis ax = axis_of(p);
    return from_axis(p, ax.a + rng.uniform() * (ax.b - ax.a));
}

Xoshiro256 trial_rng(std::uint64_t seed, int id) {
    return Xoshiro256(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(id + 1)));
}

}  // namespace

Params random_suggest(const SearchSpace& space, Xoshiro256& rng) {
    validate(space);
    Params out;
    for (const auto& p : space) out[p.name] = draw_uniform(p, rng);
    return out;
}

Params tpe_suggest(std::span<const Trial> history, const SearchSpace& space, const TpeOptions& options,
                   Xoshiro256& rng) {
    validate(space);
    std::vector<const Trial*> done;
    for (const auto& t : history) {
        if (t.state != TrialState::Complete || !t.value) continue;
        const bool usable = std::all_of(space.begin(), space.end(), [&](const ParamSpec& p) {
            const auto it = t.params.find(p.name);
            return it != t.params.end() && p.contains(it->second);
        });
        if (usable) done.push_back(&t);
    }
    if (static_cast<int>(done.size()) < std::max(1, options.n_startup)) return random_suggest(space, rng);

    std::stable_sort(done.begin(), done.end(), [](const Trial* a, const Trial* b) { return *a->value < *b->value; });
    std::vector<const Trial*> good, bad;
    if (*done.front()->value == *done.back()->value) {
        good = bad = done;
    } else {
        const auto n_good = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::ceil(options.gamma * static_cast<double>(done.size()))), 1, done.size() - 1);
        good.assign(done.begin(), done.begin() + static_cast<std::ptrdiff_t>(n_good));
        bad.assign(done.begin() + static_cast<std::ptrdiff_t>(n_good), done.end());
    }

    Params out;
    const int candidates = std::max(1, options.n_candidates);
    for (const auto& p : space) {
        if (p.kind == ParamSpec::Kind::Categorical) {
            const auto l = category_probs(p, good);
            const auto g = category_probs(p, bad);
            std::discrete_distribution<std::size_t> pick(l.begin(), l.end());
            std::size_t best = 0;
            double best_score = -std::numeric_limits<double>::infinity();
            for (int c = 0; c < candidates; ++c) {
                const std::size_t k = pick(rng);
                const double s = std::log(l[k]) - std::log(g[k]);
                if (s > best_score) {
                    best_score = s;
                    best = k;
                }
            }
            out[p.name] = static_cast<double>(best);
            continue;
        }
        const Axis ax = axis_of(p);
        std::vector<double> lo, hi;
        for (const Trial* t : good) lo.push_back(to_axis(p, t->params.at(p.name)));
        for (const Trial* t : bad) hi.push_back(to_axis(p, t->params.at(p.name)));
        const Parzen l(std::move(lo), ax, options), g(std::move(hi), ax, options);
        double best = 0.0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < candidates; ++c) {
            const double x = l.sample(rng);
            const double s = std::log(l.density(x)) - std::log(g.density(x));
            if (s > best_score) {
                best_score = s;
                best = x;
            }
        }
        out[p.name] = from_axis(p, best);
    }
    return out;
}

bool median_prune(double value, int step, std::span<const Trial> history, int min_trials) {
    std::vector<double> at_step;
    for (const auto& t : history) {
        if (t.state != TrialState::Complete) continue;
        if (auto it = t.intermediate.find(step); it != t.intermediate.end()) at_step.push_back(it->second);
    }
    if (static_cast<int>(at_step.size()) < min_trials || at_step.empty()) return false;
    std::sort(at_step.begin(), at_step.end());
    const std::size_t n = at_step.size();
    const double median = n % 2 ? at_step[n / 2] : 0.5 * (at_step[n / 2 - 1] + at_step[n / 2]);
    return value > median;
}

bool TrialContext::report(int step, double value) {
    intermediate_[step] = value;
    if (!pruned_ && report_ && report_(step, value)) pruned_ = true;
    return pruned_;
}

const Trial* Study::best() const {
    const Trial* best = nullptr;
    for (const auto& t : trials) {
        if (t.state == TrialState::Complete && t.value && (!best || *t.value < *best->value)) best = &t;
    }
    return best;
}

void optimize(Study& study, const SearchSpace& space, const Objective& objective, int n_trials, std::uint64_t seed,
              const StudyOptions& options, const std::function<bool(const Trial&)>& warm) {
    validate(space);
    const std::size_t start = study.trials.size();
    std::vector<Trial> prior;
    for (const auto& t : study.trials) {
        if (!warm || warm(t)) prior.push_back(t);
    }
    std::mutex mu;
    std::vector<Trial> finished;
    int next = 0;

    const auto completed_snapshot = [&] {
        std::vector<Trial> snap = prior;
        for (const auto& t : finished) snap.push_back(t);
        std::sort(snap.begin(), snap.end(), [](const Trial& a, const Trial& b) { return a.id < b.id; });
        return snap;
    };

    const auto worker = [&] {
        while (true) {
            Trial trial;
            std::vector<Trial> snap;
            {
                std::lock_guard lock(mu);
                if (next >= n_trials) return;
                trial.id = static_cast<int>(start) + next++;
                snap = completed_snapshot();
            }
            Xoshiro256 rng = trial_rng(seed, trial.id);
            trial.params = options.sampler == Sampler::Tpe ? tpe_suggest(snap, space, options.tpe, rng)
                                                           : random_suggest(space, rng);
            TrialContext ctx(trial.id, [&](int step, double value) {
                if (!options.prune) return false;
                std::lock_guard lock(mu);
                return median_prune(value, step, completed_snapshot(), options.prune_min_trials);
            });
            try {
                const double v = objective(trial.params, ctx);
                trial.intermediate = ctx.intermediate();
                if (ctx.pruned()) {
                    trial.state = TrialState::Pruned;
                } else if (!std::isfinite(v)) {
                    trial.state = TrialState::Failed;
                    trial.error = "objective returned a non-finite value";
                } else {
                    trial.state = TrialState::Complete;
                    trial.value = v;
                }
            } catch (const std::exception& ex) {
                trial.intermediate = ctx.intermediate();
                trial.state = TrialState::Failed;
                trial.error = ex.what();
            }
            std::lock_guard lock(mu);
            finished.push_back(std::move(trial));
        }
    };

    const std::size_t jobs = std::max<std::size_t>(1, std::min<std::size_t>(options.jobs, static_cast<std::size_t>(std::max(0, n_trials))));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t j = 0; j < jobs; ++j) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    std::sort(finished.begin(), finished.end(), [](const Trial& a, const Trial& b) { return a.id < b.id; });
    for (auto& t : finished) study.trials.push_back(std::move(t));
}

SearchSpace narrow_space(const SearchSpace& space, const Params& best, double narrow) {
    if (!(narrow > 0.0 && narrow <= 1.0)) throw Error(ErrorCode::InvalidConfig, "narrow must lie in (0, 1]");
    SearchSpace out = space;
    for (auto& p : out) {
        if (!p.numeric()) continue;
        const double b = best.at(p.name);
        if (p.kind == ParamSpec::Kind::LogUniform) {
            const double la = std::log(p.lo), lb = std::log(p.hi), c = std::log(b);
            const double half = 0.5 * narrow * (lb - la);
            const double lo = std::max(p.lo, std::exp(std::max(la, c - half)));
            const double hi = std::min(p.hi, std::exp(std::min(lb, c + half)));
            p.lo = lo;
            p.hi = hi;
        } else if (p.kind == ParamSpec::Kind::IntUniform) {
            const double half = 0.5 * narrow * (p.hi - p.lo);
            double lo = std::max(p.lo, std::floor(b - half));
            double hi = std::min(p.hi, std::ceil(b + half));
            if (lo == hi) {
                if (hi < p.hi) {
                    hi += 1;
                } else {
                    lo -= 1;
                }
            }
            p.lo = lo;
            p.hi = hi;
        } else {
            const double half = 0.5 * narrow * (p.hi - p.lo);
            const double lo = std::max(p.lo, b - half);
            const double hi = std::min(p.hi, b + half);
            p.lo = lo;
            p.hi = hi;
        }
    }
    return out;
}

CoarseToFineResult coarse_to_fine(const SearchSpace& space, const Objective& objective, int n1, int n2, double narrow,
                                  std::uint64_t seed, const StudyOptions& options) {
    if (n1 < 1 || n2 < 1) throw Error(ErrorCode::InvalidConfig, "both phase budgets must be >= 1");
    CoarseToFineResult res;
    std::ostringstream note;
    note << "phase1_trials=" << n1 << " phase2_trials=" << n2 << " narrow=" << narrow << " gamma=" << options.tpe.gamma
         << " candidates=" << options.tpe.n_candidates << " startup=" << options.tpe.n_startup << " seed=" << seed;
    res.study.notes.push_back(note.str());

    optimize(res.study, space, objective, n1, seed, options);
    const Trial* best1 = res.study.best();
    if (!best1) throw Error(ErrorCode::ObjectiveFailure, "no phase-1 trial completed");
    res.phase1_trials = n1;
    res.phase1_best = *best1->value;
    res.phase2_space = narrow_space(space, best1->params, narrow);

    const SearchSpace& inner = res.phase2_space;
    optimize(res.study, inner, objective, n2, seed, options, [&inner](const Trial& t) {
        return std::all_of(inner.begin(), inner.end(), [&](const ParamSpec& p) {
            const auto it = t.params.find(p.name);
            return it != t.params.end() && p.contains(it->second);
        });
    });
    const Trial* best = res.study.best();
    res.best = best->params;
    res.best_value = *best->value;
    return res;
}

std::string render_value(const ParamSpec& spec, double v) {
    if (spec.kind == ParamSpec::Kind::Categorical) return spec.choices.at(static_cast<std::size_t>(v));
    if (spec.kind == ParamSpec::Kind::IntUniform) return std::to_string(std::llround(v));
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

std::string params_json(const SearchSpace& space, const Params& params) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& p : space) {
        const auto it = params.find(p.name);
        if (it == params.end()) continue;
        if (p.kind == ParamSpec::Kind::Categorical) {
            j[p.name] = p.choices.at(static_cast<std::size_t>(it->second));
        } else if (p.kind == ParamSpec::Kind::IntUniform) {
            j[p.name] = std::llround(it->second);
        } else {
            j[p.name] = it->second;
        }
    }
    return j.dump();
}

void write_study_csv(const Study& study, const SearchSpace& space, const std::filesystem::path& path) {
    std::ostringstream out;
    for (const auto& n : study.notes) out << "# " << n << '\n';
    out << "trial,state,metric,step_metrics,params_json_blob\n";
    for (const auto& t : study.trials) {
        std::string steps;
        for (const auto& [step, v] : t.intermediate) {
            if (!steps.empty()) steps += ';';
            std::ostringstream s;
            s.precision(17);
            s << step << ':' << v;
            steps += s.str();
        }
        std::ostringstream metric;
        metric.precision(17);
        if (t.value) metric << *t.value;
        out << t.id << ',' << to_string(t.state) << ',' << metric.str() << ',' << csv::escape(steps) << ','
            << csv::escape(params_json(space, t.params)) << '\n';
    }
    csv::write_file_atomic(path, out.str());
}

SearchSpace default_gbt_space() {
    return {ParamSpec::log_uniform("learning_rate", 0.01, 0.3), ParamSpec::int_uniform("max_depth", 3, 10),
            ParamSpec::log_uniform("lambda", 0.1, 10.0),        ParamSpec::uniform("gamma", 0.0, 5.0),
            ParamSpec::uniform("subsample", 0.5, 1.0),          ParamSpec::uniform("colsample", 0.5, 1.0)};
}

TrainParams apply_params(TrainParams base, const Params& params) {
    for (const auto& [name, v] : params) {
        if (name == "learning_rate") {
            base.learning_rate = v;
        } else if (name == "max_depth") {
            base.max_depth = static_cast<int>(std::llround(v));
        } else if (name == "lambda") {
            base.lambda = v;
        } else if (name == "gamma") {
            base.gamma = v;
        } else if (name == "subsample") {
            base.subsample = v;
        } else if (name == "colsample") {
            base.colsample = v;
        } else if (name == "min_child_weight") {
            base.min_child_weight = v;
        } else if (name == "num_rounds") {
            base.num_rounds = static_cast<int>(std::llround(v));
        } else if (name == "num_bins") {
            base.num_bins = static_cast<int>(std::llround(v));
        } else {
            throw Error(ErrorCode::InvalidConfig, "unknown training parameter '" + name + "'");
        }
    }
    return base;
}

std::string params_toml(const SearchSpace& space, const Params& params) {
    std::ostringstream out;
    out << "[train]\n";
    for (const auto& p : space) {
        const auto it = params.find(p.name);
        if (it == params.end()) continue;
        if (p.kind == ParamSpec::Kind::Categorical) {
            out << p.name << " = \"" << render_value(p, it->second) << "\"\n";
        } else if (p.kind == ParamSpec::Kind::IntUniform) {
            out << p.name << " = " << render_value(p, it->second) << '\n';
        } else {
            std::string v = render_value(p, it->second);
            if (v.find_first_of(".eE") == std::string::npos && v.find("inf") == std::string::npos) v += ".0";
            out << p.name << " = " << v << '\n';
        }
    }
    return out.str();
}

}  // namespace modeboost::tune
