#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpclab/distributions.hpp"
#include "cpclab/sampler.hpp"

namespace cpclab {

using json = nlohmann::ordered_json;

// %.17g formatting: round-trip exact and byte-stable across runs.
std::string format_double(double v);

// FNV-1a 64-bit over raw bytes.
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t fnv1a64_file(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path,
                     const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

// Binary 8-bit PGM with the affine [min,max] -> [0,255] mapping recorded in
// a JSON sidecar at <path>.json.
struct PgmMapping {
    double min = 0.0;
    double max = 0.0;
};
PgmMapping write_pgm(const std::filesystem::path& path, const Image& image);
PgmMapping write_pgm(const std::filesystem::path& path, const Image& image,
                     const json& extra_sidecar);

// Training-set container: one JSON header line, then row-major float32
// image payloads; labels go to a JSON-lines sidecar at <path>.labels.jsonl.
void save_training_set(const std::filesystem::path& path,
                       const TrainingSet& ts);
TrainingSet load_training_set(const std::filesystem::path& path);

// CSV with a fixed header; all doubles through format_double.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path,
              const std::vector<std::string>& columns);
    void row(const std::vector<std::string>& cells);
    void close();
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::size_t n_columns_;
    std::string buffer_;
    bool closed_ = false;
};

json generation_report_json(const GenerationReport& rep, int k,
                            std::uint64_t seed);

}  // namespace cpclab
