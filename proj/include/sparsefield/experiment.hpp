#pragma once

#include <cstdint>
#include <vector>

#include "sparsefield/data_io.hpp"
#include "sparsefield/metrics.hpp"
#include "sparsefield/neural_recon.hpp"

namespace sparsefield {

struct ExperimentConfig {
    std::size_t r = 10;
    double train_fraction = 0.7;
    std::size_t hidden_layers = 2;
    TrainConfig train;               // seed doubles as the trial seed
    std::uint64_t placement_seed = 0;
    bool debug_identity = false;     // report truth-vs-truth metrics
};

// Benchmarks the four strategy combinations on one series with a
// temporal train/test split. Row order is fixed: qr+linear,
// rand+linear, qr+neural, rand+neural. The two trainings may run in
// parallel (capped by SPARSEFIELD_THREADS); output is identical either
// way.
std::vector<MetricsRow> evaluate_strategies(const SnapshotSeries& series,
                                            const ExperimentConfig& config);

// Thread cap from SPARSEFIELD_THREADS; falls back to the hardware
// count, never more than `tasks`.
std::size_t evaluation_threads(std::size_t tasks);

}  // namespace sparsefield
