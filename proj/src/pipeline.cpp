#include "modeboost/pipeline.hpp"

#include "modeboost/csv.hpp"
#include "modeboost/error.hpp"
#include "modeboost/training.hpp"

#include <map>
#include <memory>
#include <sstream>

namespace modeboost {

ingest::SyntheticSpec default_synthetic_spec(std::uint64_t seed) {
    ingest::SyntheticSpec spec;
    spec.weekly_factor = 0.6;
    spec.seed = seed;
    return spec;
}

std::string file_hash(const std::filesystem::path& path) { return hex64(fnv1a64(csv::read_file(path))); }

std::string model_file_name(Task task, int horizon) {
    return std::string(task == Task::Regression ? "regression" : "classification") + "_h" + std::to_string(horizon) +
           ".mbgb";
}

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        std::string msg = e.what();
        const std::string prefix = std::string(to_string(e.code())) + ": ";
        if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
        throw Error(e.code(), std::string(name) + ": " + msg);
    }
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& config) {
    config.validate();
    PipelineResult result;
    result.config_hash = config.hash();
    const auto& out = config.paths.out_dir;
    std::filesystem::create_directories(out / "models");
    std::filesystem::create_directories(out / "reports");

    const DemandPanel panel = stage("preprocess", [&] {
        if (config.paths.input.empty()) {
            return ingest::generate_synthetic(default_synthetic_spec(derive_seed(config.seed, "synth")));
        }
        return read_panel_csv(config.paths.input);
    });
    const ingest::HolidayCalendar holidays = stage("preprocess", [&] {
        return config.paths.holidays.empty() ? ingest::HolidayCalendar{} : ingest::load_holidays(config.paths.holidays);
    });
    const SplitIndices split = stage("preprocess", [&] { return chronological_split(panel, config.split); });
    const features::FeatureMatrix matrix = stage("preprocess", [&] {
        features::AssembleOptions opts;
        opts.jobs = config.jobs;
        return features::assemble_matrix(panel, config.features, config.horizons, config.labeling, split, holidays,
                                         opts);
    });
    const labeling::LabelModel labels =
        stage("preprocess", [&] { return labeling::fit_labels(panel, split, config.labeling); });

    std::vector<std::filesystem::path> written;
    stage("preprocess", [&] {
        features::write_matrix_binary(matrix, out / "matrix.mbfm");
        written.emplace_back("matrix.mbfm");
        return 0;
    });

    std::vector<std::unique_ptr<Ensemble>> models;
    ForecastModels fm;
    for (Task task : config.tasks) {
        for (int H : config.horizons) {
            auto model = stage("forecast", [&] {
                ModelSpec spec;
                spec.horizon = H;
                spec.params = config.train;
                spec.params.task = task;
                spec.params.jobs = config.jobs;
                spec.params.seed =
                    derive_seed(config.seed, "train/" + std::string(to_string(task)) + "/h" + std::to_string(H));
                spec.scale_mode = config.scale_mode;
                spec.labels = labels;
                spec.config_hash = result.config_hash;
                return std::make_unique<Ensemble>(train_model(matrix, spec).model);
            });
            const auto rel = std::filesystem::path("models") / model_file_name(task, H);
            stage("forecast", [&] {
                save(*model, out / rel);
                return 0;
            });
            written.push_back(rel);
            (task == Task::Regression ? fm.regression : fm.classification)[H] = model.get();
            models.push_back(std::move(model));
        }
    }

    result.report = stage("evaluate", [&] {
        EvalOptions opts;
        opts.baseline_config = config.baselines;
        opts.config_hash = result.config_hash;
        opts.seed = config.seed;
        opts.jobs = config.jobs;
        return run_evaluation(panel, matrix, fm, config.horizons, opts);
    });
    stage("evaluate", [&] {
        write_report_csv(result.report, out / "reports" / "eval.csv");
        write_significance_csv(result.report, out / "reports" / "significance.csv");
        return 0;
    });
    written.emplace_back("reports/eval.csv");
    written.emplace_back("reports/significance.csv");

    for (const auto& rel : written) {
        result.artifacts.push_back({rel, std::filesystem::file_size(out / rel), file_hash(out / rel)});
    }
    write_manifest(result, out / "manifest.csv");
    return result;
}

void write_manifest(const PipelineResult& result, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "# config_hash=" << result.config_hash << '\n';
    out << "artifact,bytes,fnv1a64\n";
    for (const auto& a : result.artifacts) {
        out << csv::escape(a.path.generic_string()) << ',' << a.bytes << ',' << a.hash << '\n';
    }
    csv::write_file_atomic(path, out.str());
}

}  // namespace modeboost
