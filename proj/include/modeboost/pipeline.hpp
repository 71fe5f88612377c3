#pragma once

#include "modeboost/config.hpp"
#include "modeboost/evaluate.hpp"
#include "modeboost/gbtree.hpp"
#include "modeboost/ingest.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace modeboost {

struct Artifact {
    std::filesystem::path path;  // relative to the output directory
    std::size_t bytes = 0;
    std::string hash;            // FNV-1a 64 of the file contents
};

struct PipelineResult {
    std::string config_hash;
    std::vector<Artifact> artifacts;
    EvalReport report;
};

/// Default synthetic panel used when no input path is configured.
ingest::SyntheticSpec default_synthetic_spec(std::uint64_t seed);

/// Preprocess (load or synthesise the panel, assemble features), postprocess
/// (scaler per model) and forecast (one model per horizon and task), then
/// evaluate against the baselines and write a manifest of artifact hashes.
/// Stage failures are rethrown with the stage name prefixed.
PipelineResult run_pipeline(const RunConfig& config);

/// `artifact,bytes,fnv1a64` with the config hash in a `#` line.
void write_manifest(const PipelineResult& result, const std::filesystem::path& path);

/// Hash of a file's bytes.
std::string file_hash(const std::filesystem::path& path);

std::string model_file_name(Task task, int horizon);

}  // namespace modeboost
