#include "vagn/sweeps.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <thread>

#include "vagn/errors.hpp"

namespace vagn::train {

std::vector<SweepRow> run_sweep(const std::vector<SweepCell>& cells,
                                const std::vector<sim::Scene>& train_scenes,
                                const std::vector<sim::Scene>& val_scenes, int jobs) {
    std::vector<SweepRow> rows(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) {
                return;
            }
            const SweepCell& cell = cells[i];
            ctrl::Policy policy(cell.model, cell.training.seed);
            const TrainResult tr = fit(policy, train_scenes, cell.training);
            const EvalResult ev = evaluate(policy, val_scenes, {cell.training.seed}, 1);
            SweepRow row;
            row.label = cell.label;
            row.seed = cell.training.seed;
            row.param_count = policy.param_count();
            row.close_encounter_pct = ev.summary.close_encounter_mean;
            row.max_accel = ev.summary.max_accel_mean;
            row.ade = ev.summary.ade_mean;
            row.goal_distance = ev.summary.goal_distance_mean;
            row.final_loss = tr.final_loss;
            rows[i] = std::move(row);
        }
    };
    const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nthreads; ++i) {
            pool.emplace_back(worker);
        }
        for (std::thread& th : pool) {
            th.join();
        }
    }
    return rows;
}

std::vector<SweepCell> sample_efficiency_cells(const ctrl::ControllerConfig& base,
                                               const TrainConfig& training,
                                               const std::vector<double>& fractions,
                                               const std::vector<std::uint64_t>& seeds) {
    std::vector<SweepCell> cells;
    for (const ctrl::PolicyKind kind : {ctrl::PolicyKind::full, ctrl::PolicyKind::baseline}) {
        for (double fraction : fractions) {
            for (std::uint64_t seed : seeds) {
                SweepCell cell;
                cell.model = base;
                cell.model.kind = kind;
                cell.training = training;
                cell.training.fraction = fraction;
                cell.training.seed = seed;
                char label[96];
                std::snprintf(label, sizeof(label), "%s@%g", ctrl::kind_name(kind), fraction);
                cell.label = label;
                cells.push_back(std::move(cell));
            }
        }
    }
    return cells;
}

std::vector<SweepCell> qstate_cells(const ctrl::ControllerConfig& base,
                                    const TrainConfig& training, const std::vector<int>& qstates,
                                    const std::vector<std::uint64_t>& seeds) {
    std::vector<SweepCell> cells;
    for (int n : qstates) {
        for (std::uint64_t seed : seeds) {
            SweepCell cell;
            cell.model = base;
            cell.model.kind = ctrl::PolicyKind::full;
            cell.model.qstates = n;
            cell.training = training;
            cell.training.seed = seed;
            char label[64];
            std::snprintf(label, sizeof(label), "q%d", n);
            cell.label = label;
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

std::vector<SweepCell> ablation_cells(const ctrl::ControllerConfig& base,
                                      const TrainConfig& training,
                                      const std::vector<std::uint64_t>& seeds) {
    std::vector<SweepCell> cells;
    for (const ctrl::PolicyKind kind :
         {ctrl::PolicyKind::full, ctrl::PolicyKind::vagn_only, ctrl::PolicyKind::dmp_only}) {
        for (std::uint64_t seed : seeds) {
            SweepCell cell;
            cell.model = base;
            cell.model.kind = kind;
            cell.training = training;
            cell.training.seed = seed;
            cell.label = ctrl::kind_name(kind);
            cells.push_back(std::move(cell));
        }
    }
    return cells;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << "label,seed,param_count,close_encounter_pct,max_accel,ade,goal_distance,final_loss\n";
    char buf[320];
    for (const SweepRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%llu,%lld,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      r.label.c_str(), static_cast<unsigned long long>(r.seed),
                      static_cast<long long>(r.param_count), r.close_encounter_pct, r.max_accel,
                      r.ade, r.goal_distance, r.final_loss);
        out << buf;
    }
}

}  // namespace vagn::train
