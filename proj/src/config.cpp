#include "modeboost/config.hpp"

#include "modeboost/csv.hpp"
#include "modeboost/error.hpp"

#include <toml.hpp>

#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>

namespace modeboost {

std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
    return fnv1a64(label, fnv1a64(std::to_string(master)));
}

std::size_t resolve_jobs(std::optional<std::size_t> flag) {
    if (flag) return std::max<std::size_t>(1, *flag);
    if (const char* env = std::getenv("MODEBOOST_JOBS"); env && *env) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1) throw Error(ErrorCode::UsageError, "MODEBOOST_JOBS must be a positive integer");
        return static_cast<std::size_t>(v);
    }
    return 1;
}

namespace {

std::string_view direction_name(features::AdjustDirection d) {
    return d == features::AdjustDirection::Monotone ? "monotone" : "compress";
}

features::AdjustDirection parse_direction(std::string_view s) {
    if (s == "monotone") return features::AdjustDirection::Monotone;
    if (s == "compress") return features::AdjustDirection::Compress;
    throw Error(ErrorCode::InvalidConfig, "unknown adjusted direction '" + std::string(s) + "'");
}

template <typename T>
std::string join(const std::vector<T>& xs) {
    std::ostringstream out;
    for (std::size_t i = 0; i < xs.size(); ++i) out << (i ? "," : "") << xs[i];
    return out.str();
}

// Typed access to one TOML table that rejects keys nobody asked for.
class Section {
public:
    Section(const toml::table* t, std::string name) : table_(t), name_(std::move(name)) {}

    template <typename T>
    void get(std::string_view key, T& out) {
        const toml::node* n = find(key);
        if (!n) return;
        if constexpr (std::is_same_v<T, bool>) {
            out = require(n->value<bool>(), key);
        } else if constexpr (std::is_integral_v<T>) {
            const auto v = require(n->value<std::int64_t>(), key);
            if (v < 0 && std::is_unsigned_v<T>) fail(key, "must be non-negative");
            out = static_cast<T>(v);
        } else if constexpr (std::is_floating_point_v<T>) {
            out = require(n->value<double>(), key);
        } else if constexpr (std::is_same_v<T, std::string>) {
            out = require(n->value<std::string>(), key);
        }
    }

    void get_ints(std::string_view key, std::vector<int>& out) {
        const toml::node* n = find(key);
        if (!n) return;
        const auto* arr = n->as_array();
        if (!arr) fail(key, "must be an array of integers");
        out.clear();
        for (const auto& item : *arr) out.push_back(static_cast<int>(require(item.value<std::int64_t>(), key)));
    }

    std::optional<std::string> text(std::string_view key) {
        std::string s;
        if (!find(key)) return std::nullopt;
        get(key, s);
        return s;
    }

    void finish() const {
        if (!table_) return;
        for (const auto& [k, v] : *table_) {
            if (!seen_.count(std::string(k.str()))) {
                throw Error(ErrorCode::InvalidConfig, "unknown key [" + name_ + "] " + std::string(k.str()));
            }
        }
    }

private:
    const toml::node* find(std::string_view key) {
        seen_.insert(std::string(key));
        return table_ ? table_->get(key) : nullptr;
    }

    template <typename T>
    T require(std::optional<T> v, std::string_view key) const {
        if (!v) fail(key, "has the wrong type");
        return *v;
    }

    [[noreturn]] void fail(std::string_view key, const char* what) const {
        throw Error(ErrorCode::InvalidConfig, "[" + name_ + "] " + std::string(key) + " " + what);
    }

    const toml::table* table_;
    std::string name_;
    std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) return {};
    const std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

void RunConfig::validate() const {
    features.validate();
    labeling.validate();
    train.validate();
    baselines.validate();
    if (horizons.empty()) throw Error(ErrorCode::InvalidConfig, "at least one horizon is required");
    for (int h : horizons) {
        if (h < 1) throw Error(ErrorCode::InvalidConfig, "horizons must be >= 1");
    }
    if (tasks.empty()) throw Error(ErrorCode::InvalidConfig, "at least one task is required");
    if (tune.phase1_trials < 1 || tune.phase2_trials < 1) throw Error(ErrorCode::InvalidConfig, "tune budgets must be >= 1");
    if (!(tune.narrow > 0.0 && tune.narrow <= 1.0)) throw Error(ErrorCode::InvalidConfig, "tune narrow must lie in (0, 1]");
    if (!(tune.tpe.gamma > 0.0 && tune.tpe.gamma < 1.0)) throw Error(ErrorCode::InvalidConfig, "tune gamma must lie in (0, 1)");
}

std::string RunConfig::canonical() const {
    std::ostringstream out;
    out.precision(17);
    const auto& f = features;
    out << "features.lags=" << join(f.lag_offsets) << '\n'
        << "features.rolling=" << join(f.rolling_windows) << '\n'
        << "features.ewma=" << join(f.ewma_spans) << '\n'
        << "features.cv=" << join(f.cv_windows) << '\n'
        << "features.fourier_period=" << f.fourier.period << '\n'
        << "features.fourier_harmonics=" << f.fourier.harmonics << '\n'
        << "features.fourier_static=" << f.fourier.static_fit << '\n'
        << "features.adjusted_levels=" << f.adjusted.levels << '\n'
        << "features.adjusted_scale=" << f.adjusted.scale << '\n'
        << "features.adjusted_direction=" << direction_name(f.adjusted.direction) << '\n'
        << "features.timezone_offset_minutes=" << f.timezone_offset_minutes << '\n'
        << "features.include=" << f.include_lags << f.include_rolling << f.include_ewma << f.include_adjusted
        << f.include_cv << f.include_fourier << '\n'
        << "features.drop_warmup=" << f.drop_warmup << '\n';
    out << "labeling.d=" << labeling.d << '\n'
        << "labeling.peak_scope=" << labeling::to_string(labeling.peak_scope) << '\n'
        << "labeling.peak_kind=" << labeling::to_string(labeling.peak_kind) << '\n'
        << "labeling.mode=" << labeling::to_string(labeling.mode) << '\n';
    const auto& t = train;
    out << "train.rounds=" << t.num_rounds << '\n'
        << "train.learning_rate=" << t.learning_rate << '\n'
        << "train.max_depth=" << t.max_depth << '\n'
        << "train.min_child_weight=" << t.min_child_weight << '\n'
        << "train.lambda=" << t.lambda << '\n'
        << "train.gamma=" << t.gamma << '\n'
        << "train.subsample=" << t.subsample << '\n'
        << "train.colsample=" << t.colsample << '\n'
        << "train.num_bins=" << t.num_bins << '\n'
        << "train.exact_greedy=" << t.exact_greedy << '\n'
        << "train.early_stopping_rounds=" << t.early_stopping_rounds << '\n'
        << "train.num_classes=" << t.num_classes << '\n'
        << "train.scale_mode=" << to_string(scale_mode) << '\n'
        << "train.horizons=" << join(horizons) << '\n';
    out << "train.tasks=";
    for (std::size_t i = 0; i < tasks.size(); ++i) out << (i ? "," : "") << to_string(tasks[i]);
    out << '\n'
        << "train.split=" << split.train << ',' << split.valid << ',' << split.test << '\n'
        << "train.seed=" << seed << '\n'
        << "baselines=" << baselines.describe() << '\n';
    out << "tune.phase1=" << tune.phase1_trials << '\n'
        << "tune.phase2=" << tune.phase2_trials << '\n'
        << "tune.narrow=" << tune.narrow << '\n'
        << "tune.gamma=" << tune.tpe.gamma << '\n'
        << "tune.candidates=" << tune.tpe.n_candidates << '\n'
        << "tune.startup=" << tune.tpe.n_startup << '\n'
        << "tune.prune=" << tune.prune << '\n'
        << "tune.horizon=" << tune.horizon << '\n'
        << "tune.task=" << to_string(tune.task) << '\n';
    return out.str();
}

std::string RunConfig::hash() const { return hex64(fnv1a64(canonical())); }

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    toml::table root;
    try {
        root = toml::parse(text);
    } catch (const toml::parse_error& err) {
        std::ostringstream msg;
        msg << "TOML parse error at line " << err.source().begin.line << ": " << err.description();
        throw Error(ErrorCode::InvalidConfig, msg.str());
    }
    static const std::set<std::string> known{"paths", "features", "labeling", "train", "tune"};
    for (const auto& [k, v] : root) {
        if (!known.count(std::string(k.str())) || !v.is_table()) {
            throw Error(ErrorCode::InvalidConfig, "unknown section '" + std::string(k.str()) + "'");
        }
    }
    RunConfig c;

    Section paths(root["paths"].as_table(), "paths");
    if (auto s = paths.text("input")) c.paths.input = resolve(base_dir, *s);
    if (auto s = paths.text("holidays")) c.paths.holidays = resolve(base_dir, *s);
    if (auto s = paths.text("regions")) c.paths.regions = resolve(base_dir, *s);
    if (auto s = paths.text("out_dir")) c.paths.out_dir = resolve(base_dir, *s);
    paths.finish();

    Section f(root["features"].as_table(), "features");
    auto& fc = c.features;
    f.get_ints("lags", fc.lag_offsets);
    f.get_ints("rolling_windows", fc.rolling_windows);
    f.get_ints("ewma_spans", fc.ewma_spans);
    f.get_ints("cv_windows", fc.cv_windows);
    f.get("fourier_period", fc.fourier.period);
    f.get("fourier_harmonics", fc.fourier.harmonics);
    f.get("fourier_static", fc.fourier.static_fit);
    f.get("adjusted_levels", fc.adjusted.levels);
    f.get("adjusted_scale", fc.adjusted.scale);
    if (auto s = f.text("adjusted_direction")) fc.adjusted.direction = parse_direction(*s);
    f.get("timezone_offset_minutes", fc.timezone_offset_minutes);
    f.get("include_lags", fc.include_lags);
    f.get("include_rolling", fc.include_rolling);
    f.get("include_ewma", fc.include_ewma);
    f.get("include_adjusted", fc.include_adjusted);
    f.get("include_cv", fc.include_cv);
    f.get("include_fourier", fc.include_fourier);
    f.get("drop_warmup", fc.drop_warmup);
    f.finish();
    c.baselines.timezone_offset_minutes = fc.timezone_offset_minutes;

    Section l(root["labeling"].as_table(), "labeling");
    l.get("d", c.labeling.d);
    if (auto s = l.text("peak_scope")) c.labeling.peak_scope = labeling::parse_peak_scope(*s);
    if (auto s = l.text("peak_kind")) c.labeling.peak_kind = labeling::parse_peak_kind(*s);
    if (auto s = l.text("mode")) c.labeling.mode = labeling::parse_label_mode(*s);
    l.finish();

    Section t(root["train"].as_table(), "train");
    auto& tp = c.train;
    t.get("rounds", tp.num_rounds);
    t.get("learning_rate", tp.learning_rate);
    t.get("max_depth", tp.max_depth);
    t.get("min_child_weight", tp.min_child_weight);
    t.get("lambda", tp.lambda);
    t.get("gamma", tp.gamma);
    t.get("subsample", tp.subsample);
    t.get("colsample", tp.colsample);
    t.get("num_bins", tp.num_bins);
    t.get("exact_greedy", tp.exact_greedy);
    t.get("early_stopping_rounds", tp.early_stopping_rounds);
    t.get("num_classes", tp.num_classes);
    if (auto s = t.text("scale_mode")) c.scale_mode = parse_scale_mode(*s);
    t.get_ints("horizons", c.horizons);
    {
        if (auto s = t.text("tasks")) {
            std::stringstream ss(*s);
            std::string item;
            c.tasks.clear();
            while (std::getline(ss, item, ',')) c.tasks.push_back(parse_task(item));
        }
    }
    t.get("train_ratio", c.split.train);
    t.get("valid_ratio", c.split.valid);
    t.get("test_ratio", c.split.test);
    t.get("seed", c.seed);
    t.get("jobs", c.jobs);
    {
        double ses_alpha = 0.0;
        t.get("ses_alpha", ses_alpha);
        if (ses_alpha > 0.0) c.baselines.ses_alpha = ses_alpha;
    }
    t.get("croston_alpha", c.baselines.croston_alpha);
    t.get("ha_global_mean", c.baselines.ha_global_mean);
    t.finish();

    Section u(root["tune"].as_table(), "tune");
    u.get("phase1_trials", c.tune.phase1_trials);
    u.get("phase2_trials", c.tune.phase2_trials);
    u.get("narrow", c.tune.narrow);
    u.get("gamma", c.tune.tpe.gamma);
    u.get("candidates", c.tune.tpe.n_candidates);
    u.get("startup", c.tune.tpe.n_startup);
    u.get("prune", c.tune.prune);
    u.get("horizon", c.tune.horizon);
    if (auto s = u.text("task")) c.tune.task = parse_task(*s);
    u.finish();

    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    return parse_config(csv::read_file(path), path.parent_path());
}

}  // namespace modeboost
