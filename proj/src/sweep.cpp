#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

#include "ipae/errors.hpp"
#include "ipae/eval.hpp"
#include "ipae/io.hpp"

namespace ipae {

namespace {

SweepRow run_one(const TrainConfig& cfg, std::size_t repeat, const LabeledDataset& train_data,
                 const LabeledDataset& eval_data, const SweepOptions& opts) {
    SweepRow row;
    row.kind = cfg.reg.kind;
    row.beta = cfg.reg.beta;
    row.nj = cfg.reg.partners;
    row.repeat = repeat;
    row.seed = cfg.seed;
    try {
        TrainResult result = train(cfg, train_data);
        EvalOptions eo;
        if (opts.probe) eo.probe_train = &train_data;
        const EvalReport rep = evaluate(result.params, eval_data, cfg, eo);
        if (opts.run_dir) {
            const auto dir = *opts.run_dir /
                             (std::string(to_string(cfg.reg.kind)) + "_beta" + format_double(cfg.reg.beta) + "_nj" +
                              std::to_string(cfg.reg.partners)) /
                             ("rep" + std::to_string(repeat));
            write_run_outputs(dir, cfg, result, rep, eval_data);
        }
        row.ok = true;
        if (rep.mean_distance) row.mean_distance = *rep.mean_distance;
        if (rep.probe_error) row.probe_error = *rep.probe_error;
        if (!result.metrics.empty()) {
            row.final_distortion = result.metrics.back().distortion;
            row.final_mi_bound = result.metrics.back().mi_bound;
        }
    } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
    }
    return row;
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (v.empty()) return {nan, nan};
    double s = 0.0;
    for (double x : v) s += x;
    const double mean = s / static_cast<double>(v.size());
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

}  // namespace

std::vector<SweepRow> sweep(const TrainConfig& base, const LabeledDataset& train_data,
                            const LabeledDataset& eval_data, const SweepOptions& opts) {
    if (opts.betas.empty() || opts.njs.empty() || opts.repeats == 0) {
        throw ContractError("sweep: betas, njs and repeats must be non-empty");
    }
    std::vector<std::pair<TrainConfig, std::size_t>> plan;
    for (double beta : opts.betas) {
        for (std::size_t nj : opts.njs) {
            for (std::size_t r = 0; r < opts.repeats; ++r) {
                TrainConfig cfg = base;
                cfg.reg.beta = beta;
                cfg.reg.partners = nj;
                cfg.seed = base.seed + r;
                plan.emplace_back(cfg, r);
            }
        }
    }

    std::vector<SweepRow> rows(plan.size());
    std::atomic<std::size_t> next{0};
    std::mutex report_mu;
    auto worker = [&] {
        for (std::size_t i = next++; i < plan.size(); i = next++) {
            rows[i] = run_one(plan[i].first, plan[i].second, train_data, eval_data, opts);
            if (opts.on_run) {
                std::lock_guard lock(report_mu);
                opts.on_run(rows[i]);
            }
        }
    };
    const std::size_t jobs = std::clamp<std::size_t>(opts.jobs, 1, plan.size());
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }
    return rows;
}

std::vector<SweepCell> aggregate(const std::vector<SweepRow>& rows) {
    using Key = std::tuple<int, double, std::size_t>;
    std::map<Key, std::vector<const SweepRow*>> groups;
    for (const auto& r : rows) groups[{static_cast<int>(r.kind), r.beta, r.nj}].push_back(&r);

    std::vector<SweepCell> cells;
    for (auto& [key, members] : groups) {
        // Sorting by repeat makes the reduction independent of completion order.
        std::sort(members.begin(), members.end(), [](auto* a, auto* b) { return a->repeat < b->repeat; });
        SweepCell cell{static_cast<RegularizerKind>(std::get<0>(key)), std::get<1>(key), std::get<2>(key)};
        std::vector<double> e, p;
        for (const SweepRow* r : members) {
            ++cell.runs;
            if (!r->ok) continue;
            ++cell.completed;
            if (!std::isnan(r->mean_distance)) e.push_back(r->mean_distance);
            if (!std::isnan(r->probe_error)) p.push_back(r->probe_error);
        }
        std::tie(cell.mean_distance_mean, cell.mean_distance_std) = mean_std(e);
        std::tie(cell.probe_error_mean, cell.probe_error_std) = mean_std(p);
        cells.push_back(cell);
    }
    return cells;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::string out = "kind,beta,nj,repeat,seed,E,probe_err,final_distortion,final_mi_bound\n";
    for (const auto& r : rows) {
        out += std::string(to_string(r.kind)) + "," + format_double(r.beta) + "," + std::to_string(r.nj) + "," +
               std::to_string(r.repeat) + "," + std::to_string(r.seed) + "," + format_double(r.mean_distance) + "," +
               format_double(r.probe_error) + "," + format_double(r.final_distortion) + "," +
               format_double(r.final_mi_bound) + "\n";
    }
    return out;
}

std::string sweep_summary_to_csv(const std::vector<SweepCell>& cells) {
    std::string out = "kind,beta,nj,runs,completed,E_mean,E_std,probe_err_mean,probe_err_std\n";
    for (const auto& c : cells) {
        out += std::string(to_string(c.kind)) + "," + format_double(c.beta) + "," + std::to_string(c.nj) + "," +
               std::to_string(c.runs) + "," + std::to_string(c.completed) + "," +
               format_double(c.mean_distance_mean) + "," + format_double(c.mean_distance_std) + "," +
               format_double(c.probe_error_mean) + "," + format_double(c.probe_error_std) + "\n";
    }
    return out;
}

}  // namespace ipae
