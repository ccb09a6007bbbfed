#pragma once

#include "spawncphd/cardinality.hpp"
#include "spawncphd/config.hpp"
#include "spawncphd/errors.hpp"
#include "spawncphd/filter.hpp"
#include "spawncphd/metrics.hpp"
#include "spawncphd/sim.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace spawncphd {

inline constexpr const char* kRunCsvHeader =
    "run,scan,model,true_n,map_n,ospa_pos,ospa_vel,hellinger_pred,hellinger_upd";
inline constexpr const char* kSummaryCsvHeader =
    "model,scan,runs,true_n,mean_map_n,mean_ospa_pos,mean_ospa_vel,mean_hellinger_pred,mean_hellinger_upd";

/// One filter's metrics at one scan of one run.
struct ScanRecord {
    std::size_t run = 0;
    std::size_t scan = 0;
    std::string model;
    std::size_t true_n = 0;
    std::size_t map_n = 0;
    double ospa_pos = 0.0;
    double ospa_vel = 0.0;
    double hellinger_pred = 0.0;
    double hellinger_upd = 0.0;
};

/// Filter recursion for one configured model.
class ModelFilter {
public:
    ModelFilter(const ExperimentConfig& cfg, ModelKind kind)
        : kind_(kind),
          motion_(cfg.scenario.motion()),
          sensor_(cfg.sensor()),
          reduction_(cfg.filter.reduction),
          n_max_(cfg.filter.n_max),
          birth_(cfg.birth_model()) {
        if (kind != ModelKind::Birth) spawn_.emplace(cfg.spawn_model(kind));
        const InitialState init =
            kind == ModelKind::Birth ? cfg.filter.initialize_birth : cfg.filter.initialize_spawn;
        if (init == InitialState::Truth) {
            for (const auto& x : cfg.scenario.initial_targets) {
                GaussianComponent c;
                c.weight = 1.0;
                c.mean = x;
                const double p = cfg.filter.init_sigma_pos * cfg.filter.init_sigma_pos;
                const double v = cfg.filter.init_sigma_vel * cfg.filter.init_sigma_vel;
                c.cov.diagonal() << p, p, v, v;
                initial_.intensity.components.push_back(c);
            }
        }
        initial_.cardinality = CardinalityDistribution::delta(initial_.intensity.size(), n_max_);
    }

    [[nodiscard]] ModelKind kind() const { return kind_; }
    [[nodiscard]] const FilterState& initial_state() const { return initial_; }
    [[nodiscard]] std::size_t n_max() const { return n_max_; }

    [[nodiscard]] FilterState predict(const FilterState& state, Diagnostics* diag = nullptr) const {
        if (spawn_) return predict_spawning(state, motion_, *spawn_, diag);
        return predict_birth(state, motion_, birth_, diag);
    }

    [[nodiscard]] FilterState update(const FilterState& predicted, const MeasurementScan& scan,
                                     Diagnostics* diag = nullptr) const {
        return spawncphd::update(predicted, scan.points, sensor_, reduction_, diag);
    }

private:
    ModelKind kind_;
    MotionModel motion_;
    SensorModel sensor_;
    ReductionParams reduction_;
    std::size_t n_max_;
    BirthModel birth_;
    std::optional<SpawnModel> spawn_;
    FilterState initial_;
};

/// Truth and measurements of one Monte-Carlo run; shared by every model of the run.
struct RunData {
    GroundTruth truth;
    std::vector<MeasurementScan> scans;
};

inline RunData simulate_data(const ExperimentConfig& cfg, std::size_t run, Diagnostics* diag = nullptr) {
    const std::uint64_t seed = cfg.seed + run;
    Rng truth_rng = make_rng(seed, 0);
    Rng meas_rng = make_rng(seed, 1);
    RunData data;
    data.truth = generate_truth(cfg.scenario, truth_rng, diag);
    data.scans = generate_measurements(data.truth, cfg.sensor(), meas_rng);
    return data;
}

namespace detail {

inline PointSet sub_state(const std::vector<StateVector>& states, int offset) {
    PointSet out;
    out.reserve(states.size());
    for (const auto& s : states) out.push_back(s.segment<2>(offset));
    return out;
}

}  // namespace detail

/// Runs every configured model over `data`, appending one record per (model, scan).
inline std::vector<ScanRecord> filter_run(const ExperimentConfig& cfg, std::size_t run, const RunData& data,
                                          Diagnostics* diag = nullptr) {
    std::vector<ScanRecord> records;
    const std::size_t n_max = cfg.filter.n_max;
    for (ModelKind kind : cfg.models) {
        const ModelFilter filter(cfg, kind);
        FilterState posterior = filter.initial_state();
        for (std::size_t k = 0; k < data.scans.size(); ++k) {
            std::vector<StateVector> truth_states;
            for (const auto& t : data.truth.scans[k]) truth_states.push_back(t.state);
            const std::size_t true_n = truth_states.size();
            if (true_n > n_max) throw ConfigError("true target count exceeds filter.n_max");
            const auto ideal = ideal_cardinality(true_n, n_max);

            const FilterState predicted = k == 0 ? posterior : filter.predict(posterior, diag);
            posterior = filter.update(predicted, data.scans[k], diag);
            const auto estimates = extract_estimates(posterior);

            ScanRecord r;
            r.run = run;
            r.scan = k;
            r.model = to_string(kind);
            r.true_n = true_n;
            r.map_n = map_estimate(posterior.cardinality);
            r.ospa_pos = ospa(detail::sub_state(estimates, 0), detail::sub_state(truth_states, 0), cfg.metrics.cutoff_pos);
            r.ospa_vel = ospa(detail::sub_state(estimates, 2), detail::sub_state(truth_states, 2), cfg.metrics.cutoff_vel);
            r.hellinger_pred = hellinger(predicted.cardinality, ideal);
            r.hellinger_upd = hellinger(posterior.cardinality, ideal);
            records.push_back(std::move(r));
        }
    }
    return records;
}

inline std::vector<ScanRecord> simulate_run(const ExperimentConfig& cfg, std::size_t run,
                                            Diagnostics* diag = nullptr) {
    return filter_run(cfg, run, simulate_data(cfg, run, diag), diag);
}

inline std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

inline std::string format_records(const std::vector<ScanRecord>& records, bool header = true) {
    std::string out;
    if (header) out += std::string(kRunCsvHeader) + "\n";
    for (const auto& r : records) {
        out += std::to_string(r.run) + "," + std::to_string(r.scan) + "," + r.model + "," +
               std::to_string(r.true_n) + "," + std::to_string(r.map_n) + "," + format_real(r.ospa_pos) + "," +
               format_real(r.ospa_vel) + "," + format_real(r.hellinger_pred) + "," +
               format_real(r.hellinger_upd) + "\n";
    }
    return out;
}

inline std::filesystem::path run_csv_path(const std::filesystem::path& dir, std::size_t run) {
    char name[32];
    std::snprintf(name, sizeof(name), "run_%04zu.csv", run);
    return dir / name;
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << contents;
    if (!out) throw ConfigError("failed writing " + path.string());
}

inline void prepare_output_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw ConfigError("cannot create output directory " + dir.string());
    const auto probe = dir / ".write_probe";
    {
        std::ofstream out(probe);
        if (!out) throw ConfigError("output directory " + dir.string() + " is not writable");
    }
    std::filesystem::remove(probe, ec);
}

}  // namespace detail

/// Result of a completed experiment.
struct ExperimentResult {
    std::vector<ScanRecord> records;  ///< all runs, in run order
    std::filesystem::path merged_csv;
};

/// Seeded Monte-Carlo comparison. Writes `run_NNNN.csv` per run and `results.csv` with
/// every run merged in run order. Runs execute on up to `jobs` threads.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::filesystem::path dir = cfg.out_dir;
    detail::prepare_output_dir(dir);

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned jobs = std::max(1u, std::min<unsigned>(cfg.jobs == 0 ? hw : cfg.jobs,
                                                          static_cast<unsigned>(cfg.runs)));
    std::vector<std::vector<ScanRecord>> per_run(cfg.runs);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t run = next.fetch_add(1);
            if (run >= cfg.runs) return;
            {
                std::lock_guard lock(failure_mutex);
                if (failure) return;
            }
            try {
                per_run[run] = simulate_run(cfg, run);
                detail::write_file(run_csv_path(dir, run), format_records(per_run[run]));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    for (unsigned t = 1; t < jobs; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);

    ExperimentResult result;
    std::string merged = std::string(kRunCsvHeader) + "\n";
    for (auto& recs : per_run) {
        merged += format_records(recs, false);
        result.records.insert(result.records.end(), std::make_move_iterator(recs.begin()),
                              std::make_move_iterator(recs.end()));
    }
    result.merged_csv = dir / "results.csv";
    detail::write_file(result.merged_csv, merged);
    return result;
}

/// Mean metrics across runs for one (model, scan).
struct SummaryRow {
    std::string model;
    std::size_t scan = 0;
    std::size_t runs = 0;
    double true_n = 0.0;
    double map_n = 0.0;
    double ospa_pos = 0.0;
    double ospa_vel = 0.0;
    double hellinger_pred = 0.0;
    double hellinger_upd = 0.0;
};

/// Averages records per (model, scan); models keep first-seen order, scans ascend.
inline std::vector<SummaryRow> summarize_records(const std::vector<ScanRecord>& records) {
    std::vector<std::string> model_order;
    std::map<std::pair<std::string, std::size_t>, SummaryRow> acc;
    for (const auto& r : records) {
        if (std::find(model_order.begin(), model_order.end(), r.model) == model_order.end())
            model_order.push_back(r.model);
        auto& row = acc[{r.model, r.scan}];
        row.model = r.model;
        row.scan = r.scan;
        row.runs += 1;
        row.true_n += static_cast<double>(r.true_n);
        row.map_n += static_cast<double>(r.map_n);
        row.ospa_pos += r.ospa_pos;
        row.ospa_vel += r.ospa_vel;
        row.hellinger_pred += r.hellinger_pred;
        row.hellinger_upd += r.hellinger_upd;
    }
    std::vector<SummaryRow> out;
    for (const auto& model : model_order) {
        for (auto it = acc.lower_bound({model, 0}); it != acc.end() && it->first.first == model; ++it) {
            SummaryRow row = it->second;
            const double n = static_cast<double>(row.runs);
            row.true_n /= n;
            row.map_n /= n;
            row.ospa_pos /= n;
            row.ospa_vel /= n;
            row.hellinger_pred /= n;
            row.hellinger_upd /= n;
            out.push_back(row);
        }
    }
    return out;
}

inline std::string format_summary(const std::vector<SummaryRow>& rows) {
    std::string out = std::string(kSummaryCsvHeader) + "\n";
    for (const auto& r : rows) {
        out += r.model + "," + std::to_string(r.scan) + "," + std::to_string(r.runs) + "," + format_real(r.true_n) +
               "," + format_real(r.map_n) + "," + format_real(r.ospa_pos) + "," + format_real(r.ospa_vel) + "," +
               format_real(r.hellinger_pred) + "," + format_real(r.hellinger_upd) + "\n";
    }
    return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace detail

/// Parses a per-run CSV; schema problems name the file, line and column.
inline std::vector<ScanRecord> read_run_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kRunCsvHeader)
        throw ConfigError(path.string() + ": header does not match '" + std::string(kRunCsvHeader) + "'");
    static const char* columns[] = {"run", "scan", "model", "true_n", "map_n",
                                    "ospa_pos", "ospa_vel", "hellinger_pred", "hellinger_upd"};
    std::vector<ScanRecord> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 9)
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected 9 columns, found " +
                              std::to_string(f.size()));
        std::size_t col = 0;
        try {
            ScanRecord r;
            std::size_t used = 0;
            auto integer = [&](const std::string& s) {
                const unsigned long long v = std::stoull(s, &used);
                if (used != s.size()) throw std::invalid_argument(s);
                return static_cast<std::size_t>(v);
            };
            auto real = [&](const std::string& s) {
                const double v = std::stod(s, &used);
                if (used != s.size()) throw std::invalid_argument(s);
                return v;
            };
            col = 0; r.run = integer(f[0]);
            col = 1; r.scan = integer(f[1]);
            col = 2; r.model = f[2];
            if (r.model.empty()) throw std::invalid_argument("empty model");
            col = 3; r.true_n = integer(f[3]);
            col = 4; r.map_n = integer(f[4]);
            col = 5; r.ospa_pos = real(f[5]);
            col = 6; r.ospa_vel = real(f[6]);
            col = 7; r.hellinger_pred = real(f[7]);
            col = 8; r.hellinger_upd = real(f[8]);
            out.push_back(std::move(r));
        } catch (const std::exception&) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": bad value in column '" +
                              columns[col] + "'");
        }
    }
    return out;
}

/// Summarizes every `run_*.csv` in `dir` (sorted by name) into `out_file`.
inline std::vector<SummaryRow> summarize(const std::filesystem::path& dir, const std::filesystem::path& out_file) {
    if (!std::filesystem::is_directory(dir)) throw ConfigError("input directory " + dir.string() + " not found");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (entry.is_regular_file() && name.rfind("run_", 0) == 0 && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    }
    if (files.empty()) throw ConfigError("no run_*.csv files in " + dir.string());
    std::sort(files.begin(), files.end());
    std::vector<ScanRecord> records;
    for (const auto& f : files) {
        auto r = read_run_csv(f);
        records.insert(records.end(), r.begin(), r.end());
    }
    auto rows = summarize_records(records);
    detail::write_file(out_file, format_summary(rows));
    return rows;
}

}  // namespace spawncphd
