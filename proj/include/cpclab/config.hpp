#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cpclab/io.hpp"
#include "cpclab/sampler.hpp"

namespace cpclab {

// Run configuration. Strict parsing: unknown keys anywhere are rejected so
// experiments cannot silently drift on a typo.
struct ExperimentConfig {
    // world
    int height = 32;
    int width = 32;
    int cell = 4;
    double sigma = 0.05;
    // training
    int count_min = 1;
    int count_max = 3;
    int n_items = 256;
    // sampling
    Schedule schedule{3.0, 0.01, 200, Spacing::Geometric};
    SamplerKind sampler = SamplerKind::ProbabilityFlowOde;
    int patch_radius = 2;
    double count_threshold = 0.5;
    // evaluation
    std::vector<int> k_list{1, 2, 3, 4, 5, 6, 7, 8};
    int n_samples = 16;
    int extra_allowance = 2;
    std::vector<double> probe_times{0.05, 0.3, 1.0, 3.0};
    int locality_probes = 20;
    int gradient_batch = 16;
    // run
    std::uint64_t seed = 20240817;
    std::filesystem::path out_dir = "out";

    GridShape shape() const { return make_shape(height, width); }
    void validate() const;
    json to_json() const;

    static ExperimentConfig from_json(const json& j);
    static ExperimentConfig load(const std::filesystem::path& path);
};

}  // namespace cpclab
