#include "modeboost/cli.hpp"

#include "modeboost/bench.hpp"
#include "modeboost/config.hpp"
#include "modeboost/csv.hpp"
#include "modeboost/error.hpp"
#include "modeboost/evaluate.hpp"
#include "modeboost/features.hpp"
#include "modeboost/gbtree.hpp"
#include "modeboost/ingest.hpp"
#include "modeboost/pipeline.hpp"
#include "modeboost/training.hpp"
#include "modeboost/tune.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

namespace modeboost {

namespace {

namespace fs = std::filesystem;

struct Common {
    std::string config;
    std::size_t jobs = 0;
    CLI::Option* jobs_opt = nullptr;

    void add_config(CLI::App* app) { app->add_option("--config", config, "TOML run configuration")->check(CLI::ExistingFile); }
    void add_jobs(CLI::App* app) { jobs_opt = app->add_option("--jobs", jobs, "Worker threads (default $MODEBOOST_JOBS or 1)"); }

    RunConfig load() const {
        RunConfig cfg = config.empty() ? RunConfig{} : load_config(config);
        cfg.jobs = resolve_jobs(jobs_opt && jobs_opt->count() ? std::optional<std::size_t>(jobs) : std::nullopt);
        return cfg;
    }
};

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

int cmd_synth(std::size_t entities, std::size_t days, std::uint64_t seed, double noise, double weekly,
              double holiday_factor, const std::string& holidays, const std::string& start, const fs::path& out_path,
              std::ostream& out) {
    ingest::SyntheticSpec spec;
    spec.entities = entities;
    spec.days = days;
    spec.seed = seed;
    spec.noise = noise;
    spec.weekly_factor = weekly;
    spec.holiday_factor = holiday_factor;
    if (!start.empty()) {
        const auto d = parse_date(start);
        if (!d) throw Error(ErrorCode::UsageError, "--start expects YYYY-MM-DD, got '" + start + "'");
        spec.start = *d;
    }
    if (!holidays.empty()) {
        const auto cal = ingest::load_holidays(holidays);
        spec.holiday_dates.assign(cal.dates().begin(), cal.dates().end());
    }
    const DemandPanel panel = ingest::generate_synthetic(spec);
    ensure_parent(out_path);
    write_panel_csv(panel, out_path);
    out << "wrote " << out_path.string() << " (" << panel.entity_count() << " entities, " << panel.length()
        << " minutes)\n";
    return kExitOk;
}

std::vector<const Ensemble*> pointers(const std::vector<std::unique_ptr<Ensemble>>& models) {
    std::vector<const Ensemble*> out;
    for (const auto& m : models) out.push_back(m.get());
    return out;
}

void write_predictions(const Ensemble& model, const features::FeatureMatrix& m, bool proba, const fs::path& path,
                       std::size_t jobs) {
    const auto pred = model.predict(m, jobs);
    std::vector<double> probs;
    if (proba && model.task == Task::Classification) probs = model.predict_proba(m, jobs);
    std::ostringstream out;
    out << std::setprecision(17);
    out << "# config_hash=" << model.config_hash << '\n';
    out << "# horizon=" << model.horizon << " task=" << to_string(model.task) << '\n';
    out << "entity,step,timestamp,prediction";
    if (!probs.empty()) {
        for (int k = 0; k < model.num_classes; ++k) out << ",p" << k;
    }
    out << '\n';
    for (std::size_t r = 0; r < m.rows; ++r) {
        const MinuteStamp ts = m.grid_start + std::chrono::minutes(m.step[r] + static_cast<std::uint32_t>(model.horizon));
        out << csv::escape(m.entity_names.at(m.entity[r])) << ',' << m.step[r] << ',' << format_minute(ts) << ','
            << pred[r];
        if (!probs.empty()) {
            for (int k = 0; k < model.num_classes; ++k) out << ',' << probs[r * static_cast<std::size_t>(model.num_classes) + static_cast<std::size_t>(k)];
        }
        out << '\n';
    }
    ensure_parent(path);
    csv::write_file_atomic(path, out.str());
}

std::vector<double> rows_for(const Ensemble& model, const features::FeatureMatrix& m) {
    if (m.scaled) throw Error(ErrorCode::AlreadyTransformed, "benchmark rows must be unscaled");
    model.check_features(m.feature_names);
    return m.values;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Micro-mobility demand forecasting engine", "modeboost"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "modeboost 1.0");
    std::function<int()> action;

    // synth
    std::size_t s_entities = 5, s_days = 28;
    std::uint64_t s_seed = 0;
    double s_noise = 1.0, s_weekly = 1.0, s_holiday = 0.5;
    std::string s_holidays, s_start, s_out;
    auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic demand panel");
    synth->add_option("--entities", s_entities, "Number of entities")->check(CLI::PositiveNumber);
    synth->add_option("--days", s_days, "Number of days")->check(CLI::PositiveNumber);
    synth->add_option("--seed", s_seed, "Random seed");
    synth->add_option("--noise", s_noise, "0 noiseless, 1 Poisson")->check(CLI::Range(0.0, 1.0));
    synth->add_option("--weekly-factor", s_weekly, "Weekend multiplier");
    synth->add_option("--holiday-factor", s_holiday, "Holiday multiplier");
    synth->add_option("--holidays", s_holidays, "Holiday calendar file")->check(CLI::ExistingFile);
    synth->add_option("--start", s_start, "First date (YYYY-MM-DD)");
    synth->add_option("--out", s_out, "Panel CSV to write")->required();
    synth->callback([&] {
        action = [&] {
            return cmd_synth(s_entities, s_days, s_seed, s_noise, s_weekly, s_holiday, s_holidays, s_start, s_out, out);
        };
    });

    // ingest snapshots|trips
    auto* ingest_cmd = app.add_subcommand("ingest", "Convert raw feeds into a demand panel");
    ingest_cmd->require_subcommand(1);
    std::string i_input, i_regions, i_out, i_report;
    bool i_strict = false, i_ffill = false;
    auto* snaps = ingest_cmd->add_subcommand("snapshots", "Vehicle snapshots to per-region counts");
    snaps->add_option("--input", i_input, "Snapshot CSV")->required()->check(CLI::ExistingFile);
    snaps->add_option("--regions", i_regions, "GeoJSON regions")->check(CLI::ExistingFile);
    snaps->add_option("--out", i_out, "Panel CSV to write")->required();
    snaps->add_flag("--strict", i_strict, "Fail on the first malformed row");
    snaps->add_flag("--forward-fill", i_ffill, "Fill gaps with the last observation");
    snaps->callback([&] {
        action = [&] {
            const auto parsed = ingest::parse_snapshots(i_input, i_strict);
            const ingest::RegionSet regions = i_regions.empty() ? ingest::RegionSet{} : ingest::load_regions(i_regions);
            const auto assigned = ingest::assign_regions(parsed.records, regions);
            const DemandPanel panel = floor_and_aggregate(assigned.counts, AggregationOptions{i_ffill});
            ensure_parent(i_out);
            write_panel_csv(panel, i_out);
            out << "records=" << parsed.records.size() << " skipped=" << parsed.skipped
                << " outside_regions=" << assigned.dropped << " entities=" << panel.entity_count() << '\n';
            return int{kExitOk};
        };
    });
    auto* trips = ingest_cmd->add_subcommand("trips", "Trip archive to per-station start counts");
    trips->add_option("--input", i_input, "Trip CSV")->required()->check(CLI::ExistingFile);
    trips->add_option("--out", i_out, "Panel CSV to write")->required();
    trips->add_option("--report", i_report, "Cleaning report CSV");
    trips->callback([&] {
        action = [&] {
            const auto raw = ingest::parse_trips(i_input);
            const auto cleaned = ingest::clean_trips(raw);
            if (!i_report.empty()) {
                ensure_parent(i_report);
                ingest::write_cleaning_report(cleaned.report, i_report);
            }
            const DemandPanel panel = ingest::trips_to_panel(cleaned.kept);
            ensure_parent(i_out);
            write_panel_csv(panel, i_out);
            out << "trips=" << cleaned.report.input << " kept=" << cleaned.report.kept
                << " stations=" << panel.entity_count() << '\n';
            return int{kExitOk};
        };
    });

    // featurize
    Common f_common;
    std::string f_input, f_out, f_holidays;
    std::vector<int> f_horizons;
    auto* featurize = app.add_subcommand("featurize", "Build the feature matrix from a panel");
    featurize->add_option("--input", f_input, "Panel CSV")->required()->check(CLI::ExistingFile);
    featurize->add_option("--out", f_out, "Matrix file (.csv or binary)")->required();
    featurize->add_option("--horizons", f_horizons, "Forecast horizons in minutes")->delimiter(',');
    featurize->add_option("--holidays", f_holidays, "Holiday calendar file")->check(CLI::ExistingFile);
    f_common.add_config(featurize);
    f_common.add_jobs(featurize);
    featurize->callback([&] {
        action = [&] {
            RunConfig cfg = f_common.load();
            if (!f_horizons.empty()) cfg.horizons = f_horizons;
            const fs::path hol = f_holidays.empty() ? cfg.paths.holidays : fs::path(f_holidays);
            cfg.validate();
            const DemandPanel panel = read_panel_csv(f_input);
            const auto holidays = hol.empty() ? ingest::HolidayCalendar{} : ingest::load_holidays(hol);
            const SplitIndices split = chronological_split(panel, cfg.split);
            features::AssembleOptions opts;
            opts.jobs = cfg.jobs;
            const auto m = features::assemble_matrix(panel, cfg.features, cfg.horizons, cfg.labeling, split, holidays, opts);
            ensure_parent(f_out);
            features::write_matrix(m, f_out);
            out << "rows=" << m.rows << " features=" << m.feature_count() << " config_hash=" << cfg.hash() << '\n';
            return int{kExitOk};
        };
    });

    // train
    Common t_common;
    std::string t_matrix, t_task = "regression", t_out = "model.mbgb", t_json, t_panel;
    int t_horizon = 60;
    std::uint64_t t_seed = 0;
    auto* train = app.add_subcommand("train", "Train one forecaster");
    auto* t_seed_opt = train->add_option("--seed", t_seed, "Random seed");
    train->add_option("--matrix", t_matrix, "Feature matrix")->required()->check(CLI::ExistingFile);
    train->add_option("--horizon", t_horizon, "Forecast horizon in minutes");
    train->add_option("--task", t_task, "regression or classification");
    train->add_option("--out", t_out, "Model file to write");
    train->add_option("--json", t_json, "Also write the model as JSON");
    train->add_option("--panel", t_panel, "Panel CSV used to embed the class thresholds")->check(CLI::ExistingFile);
    t_common.add_config(train);
    t_common.add_jobs(train);
    train->callback([&] {
        action = [&] {
            RunConfig cfg = t_common.load();
            if (*t_seed_opt) cfg.seed = t_seed;
            cfg.validate();
            const auto m = features::read_matrix(t_matrix);
            ModelSpec spec;
            spec.horizon = t_horizon;
            spec.params = cfg.train;
            spec.params.task = parse_task(t_task);
            spec.params.jobs = cfg.jobs;
            spec.params.seed = derive_seed(cfg.seed, "train/" + std::string(to_string(spec.params.task)) + "/h" +
                                                         std::to_string(t_horizon));
            spec.scale_mode = cfg.scale_mode;
            spec.config_hash = cfg.hash();
            if (!t_panel.empty()) spec.labels = labeling::fit_labels(read_panel_csv(t_panel), m.split, cfg.labeling);
            const auto result = train_model(m, spec);
            ensure_parent(t_out);
            save(result.model, t_out);
            if (!t_json.empty()) {
                ensure_parent(t_json);
                csv::write_file_atomic(t_json, to_json(result.model));
            }
            out << "trees=" << result.model.trees.size() << " best_round=" << result.best_round
                << " config_hash=" << spec.config_hash << '\n';
            return int{kExitOk};
        };
    });

    // predict
    std::string p_model, p_matrix, p_out;
    bool p_proba = false;
    Common p_common;
    auto* predict = app.add_subcommand("predict", "Score a feature matrix");
    predict->add_option("--model", p_model, "Model file")->required()->check(CLI::ExistingFile);
    predict->add_option("--matrix", p_matrix, "Feature matrix")->required()->check(CLI::ExistingFile);
    predict->add_option("--out", p_out, "Predictions CSV")->required();
    predict->add_flag("--proba", p_proba, "Add class probabilities");
    p_common.add_jobs(predict);
    predict->callback([&] {
        action = [&] {
            const std::size_t jobs = resolve_jobs(p_common.jobs_opt->count() ? std::optional(p_common.jobs) : std::nullopt);
            const Ensemble model = load(p_model);
            const auto m = features::read_matrix(p_matrix);
            write_predictions(model, m, p_proba, p_out, jobs);
            return int{kExitOk};
        };
    });

    // evaluate
    std::string e_input, e_matrix, e_out, e_sig, e_plot, e_f1 = "macro";
    std::vector<std::string> e_models, e_baselines;
    std::vector<int> e_horizons;
    Common e_common;
    auto* evaluate = app.add_subcommand("evaluate", "Compare forecasters and baselines on the test span");
    evaluate->add_option("--input", e_input, "Panel CSV")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--matrix", e_matrix, "Feature matrix")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--model", e_models, "Model files, or baseline names ha|snaive|ses|croston");
    evaluate->add_option("--baselines", e_baselines, "Baselines to include (default all)")->delimiter(',');
    evaluate->add_option("--horizons", e_horizons, "Horizons (default: those of the models)")->delimiter(',');
    evaluate->add_option("--out", e_out, "Metrics CSV")->required();
    evaluate->add_option("--significance", e_sig, "Significance CSV");
    evaluate->add_option("--plot-data", e_plot, "Daily totals CSV for plotting");
    evaluate->add_option("--f1", e_f1, "macro or weighted");
    e_common.add_config(evaluate);
    e_common.add_jobs(evaluate);
    evaluate->callback([&] {
        action = [&] {
            const RunConfig cfg = e_common.load();
            const DemandPanel panel = read_panel_csv(e_input);
            const auto m = features::read_matrix(e_matrix);
            std::vector<std::unique_ptr<Ensemble>> models;
            ForecastModels fm;
            EvalOptions opts;
            opts.baseline_config = cfg.baselines;
            opts.seed = cfg.seed;
            opts.jobs = cfg.jobs;
            opts.f1_average = parse_f1_average(e_f1);
            std::vector<baselines::Kind> kinds;
            for (const auto& b : e_baselines) kinds.push_back(baselines::parse_kind(b));
            std::set<int> horizons(e_horizons.begin(), e_horizons.end());
            std::set<std::string> hashes;
            for (const auto& spec : e_models) {
                if (!fs::exists(spec)) {
                    kinds.push_back(baselines::parse_kind(spec));
                    continue;
                }
                auto model = std::make_unique<Ensemble>(load(spec));
                model->check_features(m.feature_names);
                if (e_horizons.empty()) horizons.insert(model->horizon);
                hashes.insert(model->config_hash);
                (model->task == Task::Regression ? fm.regression : fm.classification)[model->horizon] = model.get();
                models.push_back(std::move(model));
            }
            if (!kinds.empty() || !e_baselines.empty()) {
                std::sort(kinds.begin(), kinds.end());
                kinds.erase(std::unique(kinds.begin(), kinds.end()), kinds.end());
                opts.baselines = kinds;
            }
            if (horizons.empty()) horizons.insert(m.horizons.begin(), m.horizons.end());
            if (hashes.size() == 1) opts.config_hash = *hashes.begin();
            else opts.config_hash = cfg.hash();
            const std::vector<int> hs(horizons.begin(), horizons.end());
            const EvalReport report = run_evaluation(panel, m, fm, hs, opts);
            ensure_parent(e_out);
            write_report_csv(report, e_out);
            if (!e_sig.empty()) {
                ensure_parent(e_sig);
                write_significance_csv(report, e_sig);
            }
            if (!e_plot.empty()) {
                ensure_parent(e_plot);
                write_plot_data(panel, e_plot, report.config_hash);
            }
            out << "rows=" << report.rows.size() << " tests=" << report.tests.size() << '\n';
            return int{kExitOk};
        };
    });

    // tune
    std::string u_matrix, u_task, u_log, u_out;
    int u_horizon = 0, u_trials1 = -1, u_trials2 = -1;
    double u_narrow = -1.0;
    std::uint64_t u_seed = 0;
    bool u_no_prune = false, u_random = false;
    Common u_common;
    auto* tune_cmd = app.add_subcommand("tune", "Two-phase hyperparameter search");
    tune_cmd->add_option("--matrix", u_matrix, "Feature matrix")->required()->check(CLI::ExistingFile);
    tune_cmd->add_option("--horizon", u_horizon, "Forecast horizon (default from config)");
    tune_cmd->add_option("--task", u_task, "regression or classification");
    tune_cmd->add_option("--trials1", u_trials1, "Phase-1 budget");
    tune_cmd->add_option("--trials2", u_trials2, "Phase-2 budget");
    tune_cmd->add_option("--narrow", u_narrow, "Relative width of the phase-2 window");
    auto* u_seed_opt = tune_cmd->add_option("--seed", u_seed, "Random seed");
    tune_cmd->add_option("--log", u_log, "Study CSV");
    tune_cmd->add_option("--out", u_out, "Best parameters as a TOML fragment");
    tune_cmd->add_flag("--no-prune", u_no_prune, "Disable median pruning");
    tune_cmd->add_flag("--random", u_random, "Uniform random sampler instead of TPE");
    u_common.add_config(tune_cmd);
    u_common.add_jobs(tune_cmd);
    tune_cmd->callback([&] {
        action = [&] {
            RunConfig cfg = u_common.load();
            if (*u_seed_opt) cfg.seed = u_seed;
            if (u_horizon > 0) cfg.tune.horizon = u_horizon;
            if (!u_task.empty()) cfg.tune.task = parse_task(u_task);
            if (u_trials1 >= 0) cfg.tune.phase1_trials = u_trials1;
            if (u_trials2 >= 0) cfg.tune.phase2_trials = u_trials2;
            if (u_narrow >= 0.0) cfg.tune.narrow = u_narrow;
            if (u_no_prune) cfg.tune.prune = false;
            cfg.validate();
            const auto m = features::read_matrix(u_matrix);
            ModelSpec base;
            base.horizon = cfg.tune.horizon;
            base.params = cfg.train;
            base.params.task = cfg.tune.task;
            base.params.jobs = cfg.jobs;
            base.params.seed = derive_seed(cfg.seed, "tune/train");
            base.scale_mode = cfg.scale_mode;
            base.config_hash = cfg.hash();
            tune::StudyOptions so;
            so.tpe = cfg.tune.tpe;
            so.prune = cfg.tune.prune;
            so.sampler = u_random ? tune::Sampler::Random : tune::Sampler::Tpe;
            const auto space = tune::default_gbt_space();
            const auto res = tune::coarse_to_fine(space, gbt_objective(m, base), cfg.tune.phase1_trials,
                                                  cfg.tune.phase2_trials, cfg.tune.narrow, derive_seed(cfg.seed, "tune"), so);
            if (!u_log.empty()) {
                ensure_parent(u_log);
                tune::write_study_csv(res.study, space, u_log);
            }
            const std::string toml = tune::params_toml(space, res.best);
            if (!u_out.empty()) {
                ensure_parent(u_out);
                csv::write_file_atomic(u_out, toml);
            }
            out << "# best objective " << res.best_value << " (phase 1 " << res.phase1_best << ")\n" << toml;
            return int{kExitOk};
        };
    });

    // bench
    std::vector<std::string> b_models;
    std::string b_rows, b_out, b_panel;
    BenchOptions b_opts;
    Common b_common;
    auto* bench = app.add_subcommand("bench", "Inference latency and footprint");
    bench->add_option("--model", b_models, "Model files")->required()->check(CLI::ExistingFile);
    bench->add_option("--rows", b_rows, "Feature matrix supplying input rows")->required()->check(CLI::ExistingFile);
    bench->add_option("--batch", b_opts.batch_size, "Rows per batch")->check(CLI::PositiveNumber);
    bench->add_option("--repeats", b_opts.repeats, "Timed repetitions")->check(CLI::PositiveNumber);
    bench->add_option("--warmup", b_opts.warmup, "Untimed repetitions")->check(CLI::NonNegativeNumber);
    bench->add_option("--threads", b_opts.threads, "Threads for the batch call")->check(CLI::PositiveNumber);
    bench->add_option("--out", b_out, "Benchmark CSV")->required();
    bench->add_option("--panel", b_panel, "Panel CSV; also time featurization")->check(CLI::ExistingFile);
    b_common.add_config(bench);
    bench->callback([&] {
        action = [&] {
            const auto m = features::read_matrix(b_rows);
            std::vector<std::unique_ptr<Ensemble>> models;
            std::vector<BenchReport> reports;
            for (const auto& path : b_models) {
                models.push_back(std::make_unique<Ensemble>(load(path)));
                reports.push_back(bench_inference(*models.back(), rows_for(*models.back(), m), b_opts));
            }
            std::vector<std::string> notes;
            if (!models.empty()) notes.push_back("config_hash=" + models.front()->config_hash);
            if (!b_panel.empty()) {
                const RunConfig cfg = b_common.load();
                const DemandPanel panel = read_panel_csv(b_panel);
                const auto f = bench_featurize(panel, cfg.features, cfg.horizons, cfg.labeling,
                                               chronological_split(panel, cfg.split), b_opts.repeats);
                std::ostringstream note;
                note << "featurize_ms=" << f.total_ms << " featurize_rows=" << f.rows
                     << " featurize_per_record_ms=" << f.per_record_ms;
                notes.push_back(note.str());
                out << note.str() << '\n';
            }
            ensure_parent(b_out);
            write_bench_csv(reports, b_out, notes);
            for (const auto& r : reports) {
                out << "h=" << r.horizon << ' ' << to_string(r.task) << " batch_ms=" << r.total_ms
                    << " per_record_ms=" << r.per_record_mean_ms << " model_bytes=" << r.model_bytes << '\n';
            }
            return int{kExitOk};
        };
    });

    // pipeline
    Common r_common;
    std::string r_out_dir;
    std::uint64_t r_seed = 0;
    auto* pipeline = app.add_subcommand("pipeline", "Preprocess, train every horizon and task, evaluate");
    r_common.add_config(pipeline);
    r_common.add_jobs(pipeline);
    pipeline->add_option("--out-dir", r_out_dir, "Output directory");
    auto* r_seed_opt = pipeline->add_option("--seed", r_seed, "Random seed");
    pipeline->callback([&] {
        action = [&] {
            RunConfig cfg = r_common.load();
            if (!r_out_dir.empty()) cfg.paths.out_dir = r_out_dir;
            if (*r_seed_opt) cfg.seed = r_seed;
            const auto res = run_pipeline(cfg);
            out << "config_hash=" << res.config_hash << " artifacts=" << res.artifacts.size() << '\n';
            return int{kExitOk};
        };
    });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    try {
        return action ? action() : kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.code() == ErrorCode::UsageError ? kExitUsage : kExitDomain;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitDomain;
    }
}

}  // namespace modeboost
