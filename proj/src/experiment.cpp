#include "sparsefield/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>

#include "sparsefield/error.hpp"
#include "sparsefield/linear_recon.hpp"
#include "sparsefield/placement.hpp"

namespace sparsefield {

std::size_t evaluation_threads(std::size_t tasks) {
    std::size_t cap = std::thread::hardware_concurrency();
    if (cap == 0) cap = 1;
    if (const char* env = std::getenv("SPARSEFIELD_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1) {
            throw ArgumentError("SPARSEFIELD_THREADS must be a positive integer");
        }
        cap = static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, std::min(cap, tasks));
}

std::vector<MetricsRow> evaluate_strategies(const SnapshotSeries& series,
                                            const ExperimentConfig& config) {
    const auto [train_series, test_series] = split_series(series, {config.train_fraction});

    const Placement qr_placement = select_sampling_locations(train_series, config.r);
    const Placement rand_pl = random_placement(series.height(), series.width(), config.r,
                                               config.placement_seed, series.mask());

    const Matrix truth = test_series.to_matrix();
    const std::vector<std::uint8_t>& mask = series.mask();

    auto linear_row = [&](const Placement& placement) {
        const PrincipalBasis basis = fit_principal_basis(train_series, config.r);
        const Matrix y = measure_series(placement, test_series);
        return reconstruct_linear(basis, placement, y);
    };
    auto neural_row = [&](const Placement& placement) {
        NeuralReconstructor model =
            make_model(train_series, placement, config.hidden_layers, config.train.seed);
        train(model, train_series, config.train);
        return predict_series(model, test_series);
    };

    struct Task {
        const char* name;
        std::function<Matrix()> run;
    };
    const Task tasks[] = {
        {"qr+linear", [&] { return linear_row(qr_placement); }},
        {"rand+linear", [&] { return linear_row(rand_pl); }},
        {"qr+neural", [&] { return neural_row(qr_placement); }},
        {"rand+neural", [&] { return neural_row(rand_pl); }},
    };
    constexpr std::size_t kTasks = 4;

    std::vector<MetricsRow> rows(kTasks);
    std::vector<std::exception_ptr> errors(kTasks);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= kTasks) return;
            try {
                const Matrix recon = config.debug_identity ? truth : tasks[i].run();
                const EvalReport report = evaluate(truth, recon, config.r, mask);
                rows[i] = {tasks[i].name, config.r, report.mse, report.var};
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    const std::size_t n_threads = evaluation_threads(kTasks);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    for (const std::exception_ptr& err : errors) {
        if (err) std::rethrow_exception(err);
    }
    return rows;
}

}  // namespace sparsefield
