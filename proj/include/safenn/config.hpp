#pragma once

// JSON run/campaign/sweep configuration. Every field has a default; the
// whole default set is printable for audit. Parsing is strict: wrong types
// or unknown enum strings raise ConfigError before any simulation starts.

#include <string>

#include <json.hpp>

#include "safenn/analysis.hpp"
#include "safenn/cycle_model.hpp"
#include "safenn/fault.hpp"
#include "safenn/report.hpp"
#include "safenn/types.hpp"

namespace safenn::io {

inline Kernel kernel_from_string(const std::string& s) {
    if (s == "pointwise") return Kernel::Pointwise1x1;
    if (s == "dense") return Kernel::Dense3x3;
    if (s == "depthwise") return Kernel::Depthwise3x3;
    throw ConfigError("unknown kernel: " + s);
}

inline Mode mode_from_string(const std::string& s) {
    if (s == "baseline") return Mode::Baseline4x4;
    if (s == "performance") return Mode::Performance;
    if (s == "redundancy") return Mode::Redundancy;
    throw ConfigError("unknown mode: " + s);
}

struct RunConfig {
    LayerJob job;
    Mode mode = Mode::Redundancy;
    bool all_modes = false;
    uint64_t seed = 1;
    perf::CycleModel model;

    // input source: file paths, or generated from the seed when empty
    std::string acts_path, weights_path;

    // output paths (empty = skip)
    std::string out_tensor, out_report, out_csv, trace_path;

    // campaign settings
    uint64_t campaign_n = 100000;
    flt::Filter filter = flt::Filter::Full;

    // sweep settings
    std::vector<double> rates;  // faults/second for the degradation curve
    int trials = 1000;
    int spatial_min = 8, spatial_max = 28;  // overhead curve over h_o = w_o

    // explicit fault injections for `run` (demo / reproduction)
    std::vector<flt::FaultSpec> faults;
};

inline flt::SiteKind site_from_string(const std::string& s) {
    using flt::SiteKind;
    for (int i = 0; i < flt::kNumSiteKinds; ++i) {
        auto k = static_cast<SiteKind>(i);
        if (s == flt::to_string(k)) return k;
    }
    throw ConfigError("unknown fault site: " + s);
}

namespace detail {

template <typename T>
void get_to(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        j.at(key).get_to(out);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

inline void get_model(const nlohmann::json& j, perf::CycleModel& m) {
    get_to(j, "load_pw", m.load_pw);
    get_to(j, "load_dense", m.load_dense);
    get_to(j, "load_dw", m.load_dw);
    get_to(j, "mm_per_qw_pw", m.mm_per_qw_pw);
    get_to(j, "mm_per_qw_dense", m.mm_per_qw_dense);
    get_to(j, "mm_per_qw_dw", m.mm_per_qw_dw);
    get_to(j, "streamout", m.streamout);
    get_to(j, "timeshift", m.timeshift);
    get_to(j, "reconfig", m.reconfig);
    get_to(j, "rollback_residual", m.rollback_residual);
    get_to(j, "prologue", m.prologue);
    get_to(j, "load_base_pw", m.load_base_pw);
    get_to(j, "load_base_dense", m.load_base_dense);
    get_to(j, "load_base_dw", m.load_base_dw);
    get_to(j, "streamout_base", m.streamout_base);
    get_to(j, "f_clk_hz", m.f_clk_hz);
    get_to(j, "watchdog_factor", m.watchdog_factor);
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    RunConfig c;
    if (j.contains("job")) {
        const auto& job = j.at("job");
        if (!job.is_object()) throw ConfigError("config field 'job' must be an object");
        std::string kernel = "pointwise";
        detail::get_to(job, "kernel", kernel);
        c.job.kernel = kernel_from_string(kernel);
        detail::get_to(job, "k_i", c.job.k_i);
        detail::get_to(job, "k_o", c.job.k_o);
        detail::get_to(job, "h_o", c.job.h_o);
        detail::get_to(job, "w_o", c.job.w_o);
        detail::get_to(job, "qw", c.job.qw);
        if (job.contains("quant")) {
            const auto& q = job.at("quant");
            detail::get_to(q, "scale", c.job.quant.scale);
            detail::get_to(q, "bias", c.job.quant.bias);
            detail::get_to(q, "shift", c.job.quant.shift);
        }
    }
    if (j.contains("mode")) {
        std::string mode;
        detail::get_to(j, "mode", mode);
        if (mode == "all")
            c.all_modes = true;
        else
            c.mode = mode_from_string(mode);
    }
    detail::get_to(j, "seed", c.seed);
    if (j.contains("model")) detail::get_model(j.at("model"), c.model);
    if (j.contains("input")) {
        detail::get_to(j.at("input"), "acts", c.acts_path);
        detail::get_to(j.at("input"), "weights", c.weights_path);
    }
    if (j.contains("output")) {
        detail::get_to(j.at("output"), "tensor", c.out_tensor);
        detail::get_to(j.at("output"), "report", c.out_report);
        detail::get_to(j.at("output"), "csv", c.out_csv);
        detail::get_to(j.at("output"), "trace", c.trace_path);
    }
    if (j.contains("campaign")) {
        detail::get_to(j.at("campaign"), "n", c.campaign_n);
        std::string f = "full";
        detail::get_to(j.at("campaign"), "filter", f);
        c.filter = flt::filter_from_string(f);
    }
    if (j.contains("faults")) {
        const auto& arr = j.at("faults");
        if (!arr.is_array()) throw ConfigError("config field 'faults' must be an array");
        for (const auto& f : arr) {
            flt::FaultSpec spec;
            std::string site = "tcdm_cell";
            detail::get_to(f, "site", site);
            spec.site = site_from_string(site);
            detail::get_to(f, "elem", spec.elem);
            detail::get_to(f, "bit", spec.bit);
            detail::get_to(f, "cycle", spec.cycle);
            c.faults.push_back(spec);
        }
    }
    if (j.contains("sweep")) {
        detail::get_to(j.at("sweep"), "rates", c.rates);
        detail::get_to(j.at("sweep"), "trials", c.trials);
        detail::get_to(j.at("sweep"), "spatial_min", c.spatial_min);
        detail::get_to(j.at("sweep"), "spatial_max", c.spatial_max);
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config(j);
}

// Fill in generated inputs and quantization for a config (deterministic in
// the seed) and return the triple used by runs and the golden model.
struct ResolvedInputs {
    TensorBuf acts, weights;
};

inline ResolvedInputs resolve_inputs(RunConfig& c) {
    ResolvedInputs in;
    Rng rng(mix64(c.seed, 0x64617461ull));
    in.acts = c.acts_path.empty() ? random_acts(c.job, rng) : read_tensor(c.acts_path);
    in.weights = c.weights_path.empty() ? random_weights(c.job, rng) : read_tensor(c.weights_path);
    if (c.job.quant.scale.empty()) c.job.quant = random_quant(c.job.k_o, rng);
    c.job.validate();
    return in;
}

inline nlohmann::json defaults_json() {
    RunConfig c;
    return nlohmann::json{
        {"job", io::job_json(c.job)},
        {"mode", "redundancy"},
        {"seed", c.seed},
        {"model", io::model_json(c.model)},
        {"campaign", {{"n", c.campaign_n}, {"filter", to_string(c.filter)}}},
        {"sweep",
         {{"trials", c.trials}, {"spatial_min", c.spatial_min}, {"spatial_max", c.spatial_max}}}};
}

}  // namespace safenn::io
