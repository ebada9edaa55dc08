#include "cpclab/config.hpp"

#include <algorithm>
#include <set>

namespace cpclab {

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& context) {
    if (!j.is_object())
        throw ConfigError("expected an object at " + context);
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw ConfigError("unknown key '" + key + "' in " + context);
}

Spacing spacing_from_string(const std::string& s) {
    if (s == "geometric") return Spacing::Geometric;
    if (s == "linear") return Spacing::Linear;
    throw ConfigError("unknown spacing: " + s);
}

SamplerKind sampler_from_string(const std::string& s) {
    if (s == "ode") return SamplerKind::ProbabilityFlowOde;
    if (s == "sde") return SamplerKind::EulerMaruyamaSde;
    throw ConfigError("unknown sampler kind: " + s);
}

}  // namespace

void ExperimentConfig::validate() const {
    const GridShape s = shape();  // throws on degenerate dimensions
    if (cell < 1 || s.height % cell != 0 || s.width % cell != 0)
        throw ConfigError("cell size must divide the grid dimensions");
    if (!(sigma > 0.0)) throw ConfigError("sigma must be > 0");

    const int n_conditions = (s.height / cell) * (s.width / cell);
    if (count_min < 1 || count_min > count_max || count_max > n_conditions)
        throw ConfigError("need 1 <= count_min <= count_max <= #cells");
    if (n_items < 1) throw ConfigError("n_items must be >= 1");

    try {
        schedule.validate();
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
    if (patch_radius < 0) throw ConfigError("patch_radius must be >= 0");
    if (!(count_threshold > 0.0) || !(count_threshold < 1.0))
        throw ConfigError("count_threshold must lie in (0, 1)");

    if (k_list.empty() || !std::is_sorted(k_list.begin(), k_list.end()))
        throw ConfigError("k_list must be nonempty and sorted ascending");
    if (k_list.front() < 0) throw ConfigError("k_list entries must be >= 0");
    // conditioned cells are drawn from the spread lattice (stride 3)
    const int spread = ((s.height / cell + 2) / 3) * ((s.width / cell + 2) / 3);
    if (k_list.back() > spread)
        throw ConfigError("k_list exceeds the spread-cell capacity " +
                          std::to_string(spread));
    if (n_samples < 8) throw ConfigError("n_samples must be >= 8");
    if (extra_allowance < 0) throw ConfigError("extra_allowance must be >= 0");

    if (probe_times.empty()) throw ConfigError("probe_times must be nonempty");
    for (double t : probe_times)
        if (!(t > 0.0)) throw ConfigError("probe times must be > 0");
    if (locality_probes < 1) throw ConfigError("locality_probes must be >= 1");
    if (gradient_batch < 1) throw ConfigError("gradient_batch must be >= 1");
    if (out_dir.empty()) throw ConfigError("out_dir must be set");
}

json ExperimentConfig::to_json() const {
    json j;
    j["world"] = {{"height", height},
                  {"width", width},
                  {"cell", cell},
                  {"sigma", sigma}};
    j["training"] = {{"count_min", count_min},
                     {"count_max", count_max},
                     {"n_items", n_items}};
    j["schedule"] = {
        {"t_max", schedule.t_max},
        {"t_min", schedule.t_min},
        {"steps", schedule.steps},
        {"spacing",
         schedule.spacing == Spacing::Geometric ? "geometric" : "linear"}};
    j["sampler"] = sampler == SamplerKind::ProbabilityFlowOde ? "ode" : "sde";
    j["patch_radius"] = patch_radius;
    j["count_threshold"] = count_threshold;
    j["k_list"] = k_list;
    j["n_samples"] = n_samples;
    j["extra_allowance"] = extra_allowance;
    j["probe_times"] = probe_times;
    j["locality_probes"] = locality_probes;
    j["gradient_batch"] = gradient_batch;
    j["seed"] = seed;
    j["out_dir"] = out_dir.string();
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    check_keys(j, {"world", "training", "schedule", "sampler", "patch_radius",
                   "count_threshold", "k_list", "n_samples", "extra_allowance",
                   "probe_times", "locality_probes", "gradient_batch", "seed",
                   "out_dir"},
               "config");
    ExperimentConfig c;
    if (j.contains("world")) {
        const auto& w = j["world"];
        check_keys(w, {"height", "width", "cell", "sigma"}, "world");
        c.height = w.value("height", c.height);
        c.width = w.value("width", c.width);
        c.cell = w.value("cell", c.cell);
        c.sigma = w.value("sigma", c.sigma);
    }
    if (j.contains("training")) {
        const auto& t = j["training"];
        check_keys(t, {"count_min", "count_max", "n_items"}, "training");
        c.count_min = t.value("count_min", c.count_min);
        c.count_max = t.value("count_max", c.count_max);
        c.n_items = t.value("n_items", c.n_items);
    }
    if (j.contains("schedule")) {
        const auto& s = j["schedule"];
        check_keys(s, {"t_max", "t_min", "steps", "spacing"}, "schedule");
        c.schedule.t_max = s.value("t_max", c.schedule.t_max);
        c.schedule.t_min = s.value("t_min", c.schedule.t_min);
        c.schedule.steps = s.value("steps", c.schedule.steps);
        if (s.contains("spacing"))
            c.schedule.spacing =
                spacing_from_string(s["spacing"].get<std::string>());
    }
    if (j.contains("sampler"))
        c.sampler = sampler_from_string(j["sampler"].get<std::string>());
    c.patch_radius = j.value("patch_radius", c.patch_radius);
    c.count_threshold = j.value("count_threshold", c.count_threshold);
    if (j.contains("k_list")) c.k_list = j["k_list"].get<std::vector<int>>();
    c.n_samples = j.value("n_samples", c.n_samples);
    c.extra_allowance = j.value("extra_allowance", c.extra_allowance);
    if (j.contains("probe_times"))
        c.probe_times = j["probe_times"].get<std::vector<double>>();
    c.locality_probes = j.value("locality_probes", c.locality_probes);
    c.gradient_batch = j.value("gradient_batch", c.gradient_batch);
    c.seed = j.value("seed", c.seed);
    if (j.contains("out_dir"))
        c.out_dir = j["out_dir"].get<std::string>();
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error: " + std::string(e.what()));
    }
    return from_json(j);
}

}  // namespace cpclab
