#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sparsefield/data_io.hpp"
#include "sparsefield/matrix.hpp"
#include "sparsefield/placement.hpp"

namespace sparsefield {

// Gate weights act on the stacked vector [h_{t-1}, y_t] of length 2r.
// Biases are r x 1 column matrices so every trainable tensor shares
// one representation.
struct LstmCellParams {
    Matrix w_f, w_i, w_c, w_o;  // r x 2r
    Matrix b_f, b_i, b_c, b_o;  // r x 1
};

struct LstmState {
    std::vector<double> c, h;
};

struct MlpLayer {
    Matrix w;  // out x in
    Matrix b;  // out x 1
};

// Hidden layers alternate r->m, m->r, ... (even count), then the
// output layer maps r->m. ReLU follows every layer, output included.
struct ReconstructorParams {
    std::vector<MlpLayer> layers;  // hidden layers then output layer
    std::size_t hidden_count() const { return layers.empty() ? 0 : layers.size() - 1; }
};

struct Normalization {
    double lo = 0.0;
    double hi = 1.0;
    bool zero_range = false;
    double normalize(double v) const { return zero_range ? 0.0 : (v - lo) / (hi - lo); }
    double denormalize(double u) const { return zero_range ? lo : lo + u * (hi - lo); }
};

struct NeuralReconstructor {
    Placement placement;
    std::vector<std::size_t> output_cells;  // flat grid cells the output maps onto
    LstmCellParams lstm;
    ReconstructorParams mlp;
    LstmState state;
    Normalization norm;

    std::size_t rank() const { return placement.size(); }
    std::size_t output_size() const { return output_cells.size(); }
};

// Gradient of the loss with respect to every trainable tensor, in the
// same shapes as the model parameters.
struct Gradients {
    LstmCellParams lstm;
    ReconstructorParams mlp;
};

struct TrainConfig {
    std::size_t epochs = 2000;      // optimizer steps (Adam updates)
    std::size_t batch_size = 20;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    bool cosine_decay = true;
    std::uint64_t seed = 0;
};

struct AdamState {
    std::vector<Matrix> m, v;  // first/second moments, parameter visit order
};

struct GradCheckReport {
    double max_rel_dev = 0.0;
    std::string worst_path;  // e.g. "lstm.w_f[0,3]"
    bool pass = false;
};

// Architecture + normalization from the training series; weights drawn
// uniform zero-mean with half-width 1/sqrt(fan-in), biases included.
NeuralReconstructor make_model(const SnapshotSeries& train, const Placement& placement,
                               std::size_t hidden_layers, std::uint64_t seed);

Normalization compute_normalization(const SnapshotSeries& train);
void initialize_parameters(NeuralReconstructor& model, std::uint64_t seed);

LstmState lstm_step(const LstmCellParams& params, const LstmState& state,
                    const std::vector<double>& y);

std::vector<double> mlp_forward(const ReconstructorParams& params, const std::vector<double>& h);

// One stateful inference step: measure, advance the LSTM, reconstruct.
std::pair<FieldSnapshot, LstmState> forward(const NeuralReconstructor& model,
                                            const FieldSnapshot& snapshot);

// Stateful inference over a whole series: state reset once at the
// start, carried across snapshots. Returns the full-grid matrix
// (masked cells 0), one column per snapshot.
Matrix predict_series(const NeuralReconstructor& model, const SnapshotSeries& series);

// Mean over the batch of squared l2 residuals in normalized space,
// starting from the model's stored state.
double loss_mse(const NeuralReconstructor& model, const SnapshotSeries& batch);

// Backpropagation through time across the batch window.
Gradients backward(const NeuralReconstructor& model, const SnapshotSeries& batch);

void adam_step(NeuralReconstructor& model, const Gradients& grads, AdamState& moments,
               std::size_t step_index, const TrainConfig& config);

// Algorithm: draw fresh parameters from config.seed, normalize the
// training series, then run config.epochs Adam steps over cyclic
// batches of consecutive snapshots. LSTM state carries across batches
// (gradients truncated at batch boundaries) and resets whenever the
// batch cursor wraps to the start of the series.
std::vector<double> train(NeuralReconstructor& model, const SnapshotSeries& train_series,
                          const TrainConfig& config);

Gradients numeric_gradients(const NeuralReconstructor& model, const SnapshotSeries& batch,
                            double step = 1e-5);
GradCheckReport compare_gradients(const Gradients& analytic, const Gradients& numeric,
                                  double tolerance);
GradCheckReport gradient_check(const NeuralReconstructor& model, const SnapshotSeries& batch,
                               double tolerance);

void save_model(const NeuralReconstructor& model, const std::string& path);
NeuralReconstructor load_model(const std::string& path);

void write_loss_csv(const std::vector<double>& history, const std::string& path);

}  // namespace sparsefield
