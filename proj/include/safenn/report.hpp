#pragma once

// Report and artifact serialization: SNNT tensor files, JSON run/campaign
// reports (including the software-visible status registers) and the
// plot-ready `label,state_or_rate,value` CSV form.

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "safenn/analysis.hpp"
#include "safenn/cycle_model.hpp"
#include "safenn/fault.hpp"
#include "safenn/sim.hpp"
#include "safenn/types.hpp"

namespace safenn::io {

using nlohmann::json;

// ---- SNNT tensor files ------------------------------------------------------
// Little-endian raw binary: magic "SNNT", then h,w,c as unsigned 32-bit,
// then h*w*c signed bytes.

inline void write_tensor(const std::string& path, const TensorBuf& t) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open for write: " + path);
    f.write("SNNT", 4);
    uint32_t dims[3] = {static_cast<uint32_t>(t.h), static_cast<uint32_t>(t.w),
                        static_cast<uint32_t>(t.c)};
    f.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    f.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.size()));
    if (!f) throw ConfigError("write failed: " + path);
}

inline TensorBuf read_tensor(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open tensor file: " + path);
    char magic[4];
    uint32_t dims[3];
    f.read(magic, 4);
    f.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!f || std::string(magic, 4) != "SNNT") throw ConfigError("bad tensor header: " + path);
    if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0 ||
        static_cast<uint64_t>(dims[0]) * dims[1] * dims[2] > (1ull << 31))
        throw ConfigError("bad tensor dims: " + path);
    TensorBuf t(static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2]));
    f.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.size()));
    if (!f) throw ConfigError("truncated tensor file: " + path);
    return t;
}

// ---- JSON -------------------------------------------------------------------

inline json model_json(const perf::CycleModel& m) {
    return json{{"load_pw", m.load_pw},
                {"load_dense", m.load_dense},
                {"load_dw", m.load_dw},
                {"mm_per_qw_pw", m.mm_per_qw_pw},
                {"mm_per_qw_dense", m.mm_per_qw_dense},
                {"mm_per_qw_dw", m.mm_per_qw_dw},
                {"streamout", m.streamout},
                {"timeshift", m.timeshift},
                {"reconfig", m.reconfig},
                {"rollback_residual", m.rollback_residual},
                {"prologue", m.prologue},
                {"load_base_pw", m.load_base_pw},
                {"load_base_dense", m.load_base_dense},
                {"load_base_dw", m.load_base_dw},
                {"streamout_base", m.streamout_base},
                {"f_clk_hz", m.f_clk_hz},
                {"watchdog_factor", m.watchdog_factor}};
}

inline json job_json(const LayerJob& j) {
    return json{{"kernel", to_string(j.kernel)}, {"k_i", j.k_i}, {"k_o", j.k_o},
                {"h_o", j.h_o},                  {"w_o", j.w_o}, {"qw", j.qw},
                {"qa", j.qa}};
}

inline json report_json(const perf::CycleReport& r) {
    return json{{"input_load", r.input_load},
                {"mm", r.mm},
                {"streamout", r.streamout},
                {"error_check", r.error_check},
                {"recovery", r.recovery},
                {"prologue", r.prologue},
                {"fsm_total", r.fsm_total()},
                {"total", r.total()},
                {"streamouts", r.streamouts},
                {"tiles", r.tiles}};
}

// Software-visible status registers after a run.
inline json registers_json(Mode mode, const sim::RunResult& r) {
    return json{{"hmr_mode", static_cast<uint32_t>(mode)},
                {"error_status", r.error_status ? 1 : 0},
                {"ecc_corrected", r.ecc.corrected_payload + r.ecc.corrected_metadata},
                {"ecc_uncorrectable", r.ecc.uncorrectable_payload + r.ecc.uncorrectable_metadata},
                {"tmr_divergence", r.tmr_divergence}};
}

inline json run_json(const LayerJob& job, Mode mode, const sim::RunResult& r,
                     const perf::CycleModel& m) {
    return json{{"job", job_json(job)},
                {"mode", to_string(mode)},
                {"cycles", report_json(r.report)},
                {"rollbacks", r.rollbacks},
                {"hang", r.hang},
                {"aborted", r.aborted},
                {"registers", registers_json(mode, r)},
                {"wall_seconds", static_cast<double>(r.cycles) / m.f_clk_hz}};
}

inline json histogram_json(const flt::Histogram& h) {
    json counts, percentages;
    uint64_t total = h.total();
    for (int i = 0; i < 4; ++i) {
        const char* name = sim::to_string(static_cast<sim::Outcome>(i));
        counts[name] = h.counts[static_cast<size_t>(i)];
        percentages[name] =
            total ? 100.0 * static_cast<double>(h.counts[static_cast<size_t>(i)]) / total : 0.0;
    }
    return json{{"counts", counts}, {"percentages", percentages}};
}

inline json campaign_json(const flt::CampaignResult& r) {
    json j = histogram_json(r.overall);
    j["n"] = r.overall.total();
    j["requested"] = r.requested;
    j["universe_bits"] = r.universe_bits;
    j["cycle_window"] = r.cycle_window;
    json sites = json::array();
    for (const auto& [site, h] : r.per_site) {
        json s = histogram_json(h);
        s["site"] = site;
        sites.push_back(s);
    }
    j["per_site"] = sites;
    return j;
}

inline void write_json(const std::string& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open for write: " + path);
    f << j.dump(2) << "\n";
}

// ---- CSV (`label,state_or_rate,value`) -------------------------------------

inline void csv_header(std::ostream& os) { os << "label,state_or_rate,value\n"; }

inline void breakdown_csv(std::ostream& os, const std::string& label, const perf::CycleReport& r) {
    os << label << ",input_load," << r.input_load << "\n";
    os << label << ",mm," << r.mm << "\n";
    os << label << ",streamout," << r.streamout << "\n";
    os << label << ",error_check," << r.error_check << "\n";
    os << label << ",recovery," << r.recovery << "\n";
    os << label << ",prologue," << r.prologue << "\n";
    os << label << ",total," << r.total() << "\n";
}

inline void histogram_csv(std::ostream& os, const std::string& label, const flt::Histogram& h) {
    for (int i = 0; i < 4; ++i)
        os << label << "," << sim::to_string(static_cast<sim::Outcome>(i)) << ","
           << h.counts[static_cast<size_t>(i)] << "\n";
}

inline void degradation_csv(std::ostream& os, const std::string& label,
                            const std::vector<perf::DegradationPoint>& pts) {
    for (const auto& p : pts) os << label << "," << p.rate << "," << p.perf << "\n";
}

inline void overhead_csv(std::ostream& os, const std::string& label,
                         const std::vector<std::pair<int, double>>& pts) {
    for (const auto& [dim, pct] : pts) os << label << "," << dim << "," << pct << "\n";
}

}  // namespace safenn::io
