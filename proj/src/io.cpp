#include "cpclab/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace cpclab {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= bytes[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
    const std::string content = read_text_file(path);
    return fnv1a64(content.data(), content.size());
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open for reading: " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    return content;
}

PgmMapping write_pgm(const std::filesystem::path& path, const Image& image) {
    return write_pgm(path, image, json::object());
}

PgmMapping write_pgm(const std::filesystem::path& path, const Image& image,
                     const json& extra_sidecar) {
    check_finite(image);
    PgmMapping mapping;
    mapping.min = *std::min_element(image.values.begin(), image.values.end());
    mapping.max = *std::max_element(image.values.begin(), image.values.end());
    const double span =
        mapping.max > mapping.min ? mapping.max - mapping.min : 1.0;

    std::string content = "P5\n" + std::to_string(image.shape.width) + " " +
                          std::to_string(image.shape.height) + "\n255\n";
    content.reserve(content.size() + image.values.size());
    for (double v : image.values) {
        const double scaled = (v - mapping.min) / span * 255.0;
        const int byte = std::clamp(static_cast<int>(std::lround(scaled)), 0, 255);
        content.push_back(static_cast<char>(byte));
    }
    write_text_file(path, content);

    json sidecar = extra_sidecar;
    sidecar["width"] = image.shape.width;
    sidecar["height"] = image.shape.height;
    sidecar["min"] = mapping.min;
    sidecar["max"] = mapping.max;
    write_text_file(path.string() + ".json", sidecar.dump(2) + "\n");
    return mapping;
}

void save_training_set(const std::filesystem::path& path,
                       const TrainingSet& ts) {
    if (ts.items.empty()) throw DomainError("refusing to save an empty set");
    json header;
    header["format"] = "cpclab-training-set-v1";
    header["height"] = ts.shape.height;
    header["width"] = ts.shape.width;
    header["policy"] = to_string(ts.policy);
    header["seed"] = ts.seed;
    header["count_min"] = ts.count_min;
    header["count_max"] = ts.count_max;
    header["n_items"] = ts.size();

    std::string content = header.dump() + "\n";
    const std::size_t payload = static_cast<std::size_t>(ts.size()) *
                                ts.shape.pixels() * sizeof(float);
    content.reserve(content.size() + payload);
    for (const auto& item : ts.items) {
        for (double v : item.image.values) {
            const float f = static_cast<float>(v);
            const char* raw = reinterpret_cast<const char*>(&f);
            content.append(raw, sizeof(float));
        }
    }
    write_text_file(path, content);

    std::string labels;
    for (int i = 0; i < ts.size(); ++i) {
        json line;
        line["item"] = i;
        line["true_conditions"] = ts.items[i].true_conditions.ids();
        line["labeled_conditions"] = ts.items[i].labeled_conditions.ids();
        labels += line.dump() + "\n";
    }
    write_text_file(path.string() + ".labels.jsonl", labels);
}

TrainingSet load_training_set(const std::filesystem::path& path) {
    const std::string content = read_text_file(path);
    const std::size_t newline = content.find('\n');
    if (newline == std::string::npos)
        throw Error("training set missing header line");
    const json header = json::parse(content.substr(0, newline));
    if (header.value("format", "") != "cpclab-training-set-v1")
        throw Error("unknown training set format");

    TrainingSet ts;
    ts.shape = make_shape(header.at("height").get<int>(),
                          header.at("width").get<int>());
    ts.policy = labeling_policy_from_string(header.at("policy").get<std::string>());
    ts.seed = header.at("seed").get<std::uint64_t>();
    ts.count_min = header.at("count_min").get<int>();
    ts.count_max = header.at("count_max").get<int>();
    const int n_items = header.at("n_items").get<int>();

    const std::size_t expected = static_cast<std::size_t>(n_items) *
                                 ts.shape.pixels() * sizeof(float);
    if (content.size() - newline - 1 != expected)
        throw Error("training set payload size mismatch");

    const char* raw = content.data() + newline + 1;
    ts.items.reserve(n_items);
    for (int i = 0; i < n_items; ++i) {
        Image img(ts.shape);
        for (int p = 0; p < ts.shape.pixels(); ++p) {
            float f;
            std::memcpy(&f, raw, sizeof(float));
            raw += sizeof(float);
            img.values[p] = static_cast<double>(f);
        }
        ts.items.push_back({std::move(img), {}, {}});
    }

    const std::string labels =
        read_text_file(path.string() + ".labels.jsonl");
    std::size_t pos = 0;
    int seen = 0;
    while (pos < labels.size()) {
        const std::size_t end = labels.find('\n', pos);
        if (end == std::string::npos) break;
        const json line = json::parse(labels.substr(pos, end - pos));
        const int idx = line.at("item").get<int>();
        if (idx < 0 || idx >= n_items) throw Error("label sidecar item out of range");
        ts.items[idx].true_conditions =
            ConditionSet(line.at("true_conditions").get<std::vector<int>>());
        ts.items[idx].labeled_conditions =
            ConditionSet(line.at("labeled_conditions").get<std::vector<int>>());
        ++seen;
        pos = end + 1;
    }
    if (seen != n_items) throw Error("label sidecar incomplete");
    return ts;
}

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     const std::vector<std::string>& columns)
    : path_(path), n_columns_(columns.size()) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) buffer_ += ',';
        buffer_ += columns[i];
    }
    buffer_ += '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (closed_) throw Error("csv writer already closed");
    if (cells.size() != n_columns_)
        throw ShapeError("csv row width does not match the header");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) buffer_ += ',';
        buffer_ += cells[i];
    }
    buffer_ += '\n';
}

void CsvWriter::close() {
    if (closed_) return;
    write_text_file(path_, buffer_);
    closed_ = true;
}

json generation_report_json(const GenerationReport& rep, int k,
                            std::uint64_t seed) {
    json out;
    out["k"] = k;
    out["seed"] = seed;
    out["object_count"] = rep.object_count;
    json peaks = json::array();
    for (const auto& p : rep.peak_positions) peaks.push_back({p.x, p.y});
    out["peak_positions"] = peaks;
    out["final_norm"] =
        rep.step_norms.empty() ? 0.0 : rep.step_norms.back();
    return out;
}

}  // namespace cpclab
