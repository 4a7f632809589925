#include "sparsefield/neural_recon.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "sparsefield/detail/bytes.hpp"
#include "sparsefield/error.hpp"
#include "sparsefield/rng.hpp"

namespace sparsefield {

namespace {

constexpr char kMagic[4] = {'S', 'F', 'N', 'R'};
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr double kPi = 3.14159265358979323846;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Every trainable tensor in declaration order; checkpoint layout,
// Adam moments and gradient paths all follow this one sequence.
template <typename Lstm, typename Mlp, typename F>
void visit_params(Lstm& lstm, Mlp& mlp, F&& f) {
    f("lstm.w_f", lstm.w_f);
    f("lstm.b_f", lstm.b_f);
    f("lstm.w_i", lstm.w_i);
    f("lstm.b_i", lstm.b_i);
    f("lstm.w_c", lstm.w_c);
    f("lstm.b_c", lstm.b_c);
    f("lstm.w_o", lstm.w_o);
    f("lstm.b_o", lstm.b_o);
    for (std::size_t i = 0; i < mlp.layers.size(); ++i) {
        const std::string tag = "mlp.layer" + std::to_string(i);
        f(tag + ".w", mlp.layers[i].w);
        f(tag + ".b", mlp.layers[i].b);
    }
}

void check_lstm_shapes(const LstmCellParams& p, std::size_t r) {
    for (const Matrix* w : {&p.w_f, &p.w_i, &p.w_c, &p.w_o}) {
        if (w->rows() != r || w->cols() != 2 * r) throw ArgumentError("gate weight shape mismatch");
    }
    for (const Matrix* b : {&p.b_f, &p.b_i, &p.b_c, &p.b_o}) {
        if (b->rows() != r || b->cols() != 1) throw ArgumentError("gate bias shape mismatch");
    }
}

std::vector<double> gate_preact(const Matrix& w, const Matrix& b, const std::vector<double>& h,
                                const std::vector<double>& y) {
    const std::size_t r = w.rows();
    std::vector<double> z(r);
    for (std::size_t k = 0; k < r; ++k) {
        double acc = b(k, 0);
        for (std::size_t j = 0; j < r; ++j) acc += w(k, j) * h[j];
        for (std::size_t j = 0; j < r; ++j) acc += w(k, r + j) * y[j];
        z[k] = acc;
    }
    return z;
}

struct StepCache {
    std::vector<double> y;
    std::vector<double> f, i, cbar, o;
    std::vector<double> c_prev, h_prev, c, tanh_c, h;
    std::vector<std::vector<double>> pre;  // per MLP layer pre-activation
    std::vector<std::vector<double>> act;  // per MLP layer output (back = prediction)
    std::vector<double> target;
};

// Normalized sensor inputs and targets for a batch, in series order.
struct BatchData {
    std::vector<std::vector<double>> inputs;   // each length r
    std::vector<std::vector<double>> targets;  // each length m
};

BatchData prepare_batch(const NeuralReconstructor& model, const SnapshotSeries& series,
                        const std::vector<std::size_t>& order) {
    if (series.height() != model.placement.grid_height ||
        series.width() != model.placement.grid_width) {
        throw ArgumentError("series grid does not match model grid");
    }
    if (series.valid_cells() != model.output_cells) {
        throw ArgumentError("series validity mask does not match the model's output cells");
    }
    BatchData data;
    data.inputs.reserve(order.size());
    data.targets.reserve(order.size());
    for (std::size_t t : order) {
        const FieldSnapshot& snap = series.snapshots()[t];
        std::vector<double> y(model.rank());
        for (std::size_t i = 0; i < model.rank(); ++i)
            y[i] = model.norm.normalize(snap.values[model.placement.gamma[i]]);
        std::vector<double> target(model.output_size());
        for (std::size_t j = 0; j < model.output_size(); ++j)
            target[j] = model.norm.normalize(snap.values[model.output_cells[j]]);
        data.inputs.push_back(std::move(y));
        data.targets.push_back(std::move(target));
    }
    return data;
}

std::vector<std::size_t> full_order(const SnapshotSeries& series) {
    std::vector<std::size_t> order(series.snapshot_count());
    for (std::size_t t = 0; t < order.size(); ++t) order[t] = t;
    return order;
}

// Forward over the batch window with everything the backward pass
// needs. Returns the mean of squared residual norms.
double run_forward(const NeuralReconstructor& model, const BatchData& data,
                   const LstmState& initial, std::vector<StepCache>* caches,
                   LstmState* final_state) {
    const std::size_t r = model.rank();
    check_lstm_shapes(model.lstm, r);
    LstmState state = initial;
    double loss = 0.0;
    for (std::size_t t = 0; t < data.inputs.size(); ++t) {
        StepCache cache;
        cache.y = data.inputs[t];
        cache.c_prev = state.c;
        cache.h_prev = state.h;
        cache.f = gate_preact(model.lstm.w_f, model.lstm.b_f, state.h, cache.y);
        cache.i = gate_preact(model.lstm.w_i, model.lstm.b_i, state.h, cache.y);
        cache.cbar = gate_preact(model.lstm.w_c, model.lstm.b_c, state.h, cache.y);
        cache.o = gate_preact(model.lstm.w_o, model.lstm.b_o, state.h, cache.y);
        cache.c.resize(r);
        cache.tanh_c.resize(r);
        cache.h.resize(r);
        for (std::size_t k = 0; k < r; ++k) {
            cache.f[k] = sigmoid(cache.f[k]);
            cache.i[k] = sigmoid(cache.i[k]);
            cache.cbar[k] = std::tanh(cache.cbar[k]);
            cache.o[k] = sigmoid(cache.o[k]);
            cache.c[k] = cache.f[k] * state.c[k] + cache.i[k] * cache.cbar[k];
            cache.tanh_c[k] = std::tanh(cache.c[k]);
            cache.h[k] = cache.o[k] * cache.tanh_c[k];
        }
        state.c = cache.c;
        state.h = cache.h;

        std::vector<double> x = cache.h;
        for (const MlpLayer& layer : model.mlp.layers) {
            if (layer.w.cols() != x.size()) throw ArgumentError("reconstructor shape mismatch");
            std::vector<double> z(layer.w.rows());
            for (std::size_t k = 0; k < layer.w.rows(); ++k) {
                double acc = layer.b(k, 0);
                for (std::size_t j = 0; j < x.size(); ++j) acc += layer.w(k, j) * x[j];
                z[k] = acc;
            }
            cache.pre.push_back(z);
            for (double& v : z) v = v > 0.0 ? v : 0.0;
            cache.act.push_back(z);
            x = cache.act.back();
        }

        cache.target = data.targets[t];
        double step_loss = 0.0;
        for (std::size_t j = 0; j < cache.target.size(); ++j) {
            const double d = cache.act.back()[j] - cache.target[j];
            step_loss += d * d;
        }
        loss += step_loss;
        if (caches) caches->push_back(std::move(cache));
    }
    if (final_state) *final_state = state;
    return loss / static_cast<double>(data.inputs.size());
}

Gradients zero_gradients(const NeuralReconstructor& model) {
    Gradients g;
    g.lstm.w_f = Matrix(model.rank(), 2 * model.rank());
    g.lstm.w_i = g.lstm.w_f;
    g.lstm.w_c = g.lstm.w_f;
    g.lstm.w_o = g.lstm.w_f;
    g.lstm.b_f = Matrix(model.rank(), 1);
    g.lstm.b_i = g.lstm.b_f;
    g.lstm.b_c = g.lstm.b_f;
    g.lstm.b_o = g.lstm.b_f;
    for (const MlpLayer& layer : model.mlp.layers) {
        g.mlp.layers.push_back({Matrix(layer.w.rows(), layer.w.cols()),
                                Matrix(layer.b.rows(), 1)});
    }
    return g;
}

Gradients run_backward(const NeuralReconstructor& model, const std::vector<StepCache>& caches) {
    const std::size_t r = model.rank();
    const double batch = static_cast<double>(caches.size());
    Gradients g = zero_gradients(model);

    std::vector<double> dh_next(r, 0.0), dc_next(r, 0.0);
    for (std::size_t tt = caches.size(); tt-- > 0;) {
        const StepCache& cache = caches[tt];

        // Loss and reconstructor.
        std::vector<double> da(cache.target.size());
        for (std::size_t j = 0; j < da.size(); ++j)
            da[j] = 2.0 * (cache.act.back()[j] - cache.target[j]) / batch;
        for (std::size_t l = model.mlp.layers.size(); l-- > 0;) {
            const MlpLayer& layer = model.mlp.layers[l];
            MlpLayer& grad = g.mlp.layers[l];
            const std::vector<double>& x = (l == 0) ? cache.h : cache.act[l - 1];
            std::vector<double> dx(x.size(), 0.0);
            for (std::size_t k = 0; k < layer.w.rows(); ++k) {
                const double dz = cache.pre[l][k] > 0.0 ? da[k] : 0.0;
                if (dz == 0.0) continue;
                grad.b(k, 0) += dz;
                for (std::size_t j = 0; j < x.size(); ++j) {
                    grad.w(k, j) += dz * x[j];
                    dx[j] += layer.w(k, j) * dz;
                }
            }
            da = std::move(dx);
        }

        // Cell backward; da now holds dL/dh from the reconstructor.
        std::vector<double> dh(r), dc(r);
        for (std::size_t k = 0; k < r; ++k) {
            dh[k] = da[k] + dh_next[k];
            const double tc = cache.tanh_c[k];
            dc[k] = dc_next[k] + dh[k] * cache.o[k] * (1.0 - tc * tc);
        }
        std::vector<double> dzf(r), dzi(r), dzc(r), dzo(r);
        for (std::size_t k = 0; k < r; ++k) {
            const double df = dc[k] * cache.c_prev[k];
            const double di = dc[k] * cache.cbar[k];
            const double dcb = dc[k] * cache.i[k];
            const double do_ = dh[k] * cache.tanh_c[k];
            dzf[k] = df * cache.f[k] * (1.0 - cache.f[k]);
            dzi[k] = di * cache.i[k] * (1.0 - cache.i[k]);
            dzc[k] = dcb * (1.0 - cache.cbar[k] * cache.cbar[k]);
            dzo[k] = do_ * cache.o[k] * (1.0 - cache.o[k]);
        }

        struct GateRef {
            const std::vector<double>& dz;
            const Matrix& w;
            Matrix& gw;
            Matrix& gb;
        };
        const GateRef gates[] = {{dzf, model.lstm.w_f, g.lstm.w_f, g.lstm.b_f},
                                 {dzi, model.lstm.w_i, g.lstm.w_i, g.lstm.b_i},
                                 {dzc, model.lstm.w_c, g.lstm.w_c, g.lstm.b_c},
                                 {dzo, model.lstm.w_o, g.lstm.w_o, g.lstm.b_o}};
        std::vector<double> dh_prev(r, 0.0);
        for (const GateRef& gate : gates) {
            for (std::size_t k = 0; k < r; ++k) {
                const double dz = gate.dz[k];
                if (dz == 0.0) continue;
                gate.gb(k, 0) += dz;
                for (std::size_t j = 0; j < r; ++j) {
                    gate.gw(k, j) += dz * cache.h_prev[j];
                    gate.gw(k, r + j) += dz * cache.y[j];
                    dh_prev[j] += gate.w(k, j) * dz;
                }
            }
        }
        for (std::size_t k = 0; k < r; ++k) dc_next[k] = dc[k] * cache.f[k];
        dh_next = std::move(dh_prev);
    }
    return g;
}

LstmState zero_state(std::size_t r) { return {std::vector<double>(r, 0.0), std::vector<double>(r, 0.0)}; }

void check_model_finite(const NeuralReconstructor& model) {
    bool ok = true;
    visit_params(model.lstm, model.mlp, [&](const std::string&, const Matrix& m) {
        if (!m.all_finite()) ok = false;
    });
    for (double v : model.state.c) ok = ok && std::isfinite(v);
    for (double v : model.state.h) ok = ok && std::isfinite(v);
    if (!ok) throw NumericalError("training produced non-finite parameters");
}

}  // namespace

Normalization compute_normalization(const SnapshotSeries& train) {
    if (train.snapshot_count() == 0) throw ArgumentError("cannot normalize an empty series");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    const std::vector<std::size_t> cells = train.valid_cells();
    for (const FieldSnapshot& f : train.snapshots()) {
        for (std::size_t idx : cells) {
            lo = std::min(lo, f.values[idx]);
            hi = std::max(hi, f.values[idx]);
        }
    }
    Normalization norm;
    norm.lo = lo;
    norm.hi = hi;
    norm.zero_range = !(hi > lo);
    if (norm.zero_range) norm.hi = lo;  // keep constants well-defined
    return norm;
}

void initialize_parameters(NeuralReconstructor& model, std::uint64_t seed) {
    Rng rng(seed);
    auto fill = [&rng](Matrix& m, double half) {
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rng.uniform(-half, half);
    };
    // Zero-mean uniform draws, half-width 1/sqrt(fan-in); the bias of a
    // layer uses its weight's width so one knob controls both.
    const double gate_half = 1.0 / std::sqrt(static_cast<double>(2 * model.rank()));
    fill(model.lstm.w_f, gate_half);
    fill(model.lstm.b_f, gate_half);
    fill(model.lstm.w_i, gate_half);
    fill(model.lstm.b_i, gate_half);
    fill(model.lstm.w_c, gate_half);
    fill(model.lstm.b_c, gate_half);
    fill(model.lstm.w_o, gate_half);
    fill(model.lstm.b_o, gate_half);
    for (MlpLayer& layer : model.mlp.layers) {
        const double half = 1.0 / std::sqrt(static_cast<double>(layer.w.cols()));
        fill(layer.w, half);
        fill(layer.b, half);
    }
    model.state = zero_state(model.rank());
}

NeuralReconstructor make_model(const SnapshotSeries& train, const Placement& placement,
                               std::size_t hidden_layers, std::uint64_t seed) {
    if (hidden_layers % 2 != 0) throw ArgumentError("hidden layer count must be even");
    if (train.height() != placement.grid_height || train.width() != placement.grid_width) {
        throw ArgumentError("placement grid does not match series grid");
    }
    for (std::size_t idx : placement.gamma) {
        if (!train.cell_valid(idx)) {
            throw ArgumentError("sensor at flat index " + std::to_string(idx) +
                                " sits on a masked cell");
        }
    }
    NeuralReconstructor model;
    model.placement = placement;
    model.output_cells = train.valid_cells();
    const std::size_t r = placement.size();
    const std::size_t m = model.output_cells.size();

    model.lstm.w_f = Matrix(r, 2 * r);
    model.lstm.w_i = model.lstm.w_f;
    model.lstm.w_c = model.lstm.w_f;
    model.lstm.w_o = model.lstm.w_f;
    model.lstm.b_f = Matrix(r, 1);
    model.lstm.b_i = model.lstm.b_f;
    model.lstm.b_c = model.lstm.b_f;
    model.lstm.b_o = model.lstm.b_f;
    for (std::size_t l = 0; l < hidden_layers; ++l) {
        const std::size_t in = (l % 2 == 0) ? r : m;
        const std::size_t out = (l % 2 == 0) ? m : r;
        model.mlp.layers.push_back({Matrix(out, in), Matrix(out, 1)});
    }
    model.mlp.layers.push_back({Matrix(m, r), Matrix(m, 1)});

    model.norm = compute_normalization(train);
    initialize_parameters(model, seed);
    return model;
}

LstmState lstm_step(const LstmCellParams& params, const LstmState& state,
                    const std::vector<double>& y) {
    const std::size_t r = params.w_f.rows();
    check_lstm_shapes(params, r);
    if (state.c.size() != r || state.h.size() != r || y.size() != r) {
        throw ArgumentError("state/input length does not match cell size");
    }
    std::vector<double> zf = gate_preact(params.w_f, params.b_f, state.h, y);
    std::vector<double> zi = gate_preact(params.w_i, params.b_i, state.h, y);
    std::vector<double> zc = gate_preact(params.w_c, params.b_c, state.h, y);
    std::vector<double> zo = gate_preact(params.w_o, params.b_o, state.h, y);
    LstmState next = zero_state(r);
    for (std::size_t k = 0; k < r; ++k) {
        const double f = sigmoid(zf[k]);
        const double i = sigmoid(zi[k]);
        const double cbar = std::tanh(zc[k]);
        const double o = sigmoid(zo[k]);
        next.c[k] = f * state.c[k] + i * cbar;
        next.h[k] = o * std::tanh(next.c[k]);
    }
    return next;
}

std::vector<double> mlp_forward(const ReconstructorParams& params, const std::vector<double>& h) {
    std::vector<double> x = h;
    for (const MlpLayer& layer : params.layers) {
        if (layer.w.cols() != x.size()) throw ArgumentError("reconstructor shape mismatch");
        std::vector<double> z(layer.w.rows());
        for (std::size_t k = 0; k < layer.w.rows(); ++k) {
            double acc = layer.b(k, 0);
            for (std::size_t j = 0; j < x.size(); ++j) acc += layer.w(k, j) * x[j];
            z[k] = acc > 0.0 ? acc : 0.0;
        }
        x = std::move(z);
    }
    return x;
}

std::pair<FieldSnapshot, LstmState> forward(const NeuralReconstructor& model,
                                            const FieldSnapshot& snapshot) {
    if (snapshot.height != model.placement.grid_height ||
        snapshot.width != model.placement.grid_width) {
        throw ArgumentError("snapshot grid does not match model grid");
    }
    std::vector<double> y(model.rank());
    for (std::size_t i = 0; i < model.rank(); ++i)
        y[i] = model.norm.normalize(snapshot.values[model.placement.gamma[i]]);
    LstmState next = lstm_step(model.lstm, model.state, y);
    const std::vector<double> out = mlp_forward(model.mlp, next.h);

    FieldSnapshot recon;
    recon.height = snapshot.height;
    recon.width = snapshot.width;
    recon.timestamp = snapshot.timestamp;
    recon.values.assign(snapshot.values.size(), 0.0);
    for (std::size_t j = 0; j < model.output_cells.size(); ++j)
        recon.values[model.output_cells[j]] = model.norm.denormalize(out[j]);
    return {std::move(recon), std::move(next)};
}

Matrix predict_series(const NeuralReconstructor& model, const SnapshotSeries& series) {
    if (series.height() != model.placement.grid_height ||
        series.width() != model.placement.grid_width) {
        throw ArgumentError("series grid does not match model grid");
    }
    NeuralReconstructor scratch = model;
    scratch.state = zero_state(model.rank());
    Matrix out(series.cell_count(), series.snapshot_count());
    for (std::size_t t = 0; t < series.snapshot_count(); ++t) {
        auto [recon, next] = forward(scratch, series.snapshots()[t]);
        scratch.state = std::move(next);
        for (std::size_t i = 0; i < recon.values.size(); ++i) out(i, t) = recon.values[i];
    }
    return out;
}

double loss_mse(const NeuralReconstructor& model, const SnapshotSeries& batch) {
    if (batch.snapshot_count() == 0) throw ArgumentError("loss over an empty batch");
    const BatchData data = prepare_batch(model, batch, full_order(batch));
    return run_forward(model, data, model.state, nullptr, nullptr);
}

Gradients backward(const NeuralReconstructor& model, const SnapshotSeries& batch) {
    if (batch.snapshot_count() == 0) throw ArgumentError("backward over an empty batch");
    const BatchData data = prepare_batch(model, batch, full_order(batch));
    std::vector<StepCache> caches;
    run_forward(model, data, model.state, &caches, nullptr);
    return run_backward(model, caches);
}

void adam_step(NeuralReconstructor& model, const Gradients& grads, AdamState& moments,
               std::size_t step_index, const TrainConfig& config) {
    if (step_index < 1) throw ArgumentError("adam step index starts at 1");
    std::vector<Matrix*> params;
    visit_params(model.lstm, model.mlp, [&](const std::string&, Matrix& m) { params.push_back(&m); });
    std::vector<const Matrix*> grad_list;
    visit_params(grads.lstm, grads.mlp,
                 [&](const std::string&, const Matrix& m) { grad_list.push_back(&m); });
    if (params.size() != grad_list.size()) throw ArgumentError("gradient set shape mismatch");

    if (moments.m.empty()) {
        for (Matrix* p : params) {
            moments.m.emplace_back(p->rows(), p->cols());
            moments.v.emplace_back(p->rows(), p->cols());
        }
    }
    if (moments.m.size() != params.size()) throw ArgumentError("moment set shape mismatch");

    double rate = config.learning_rate;
    if (config.cosine_decay) {
        const double total = static_cast<double>(std::max<std::size_t>(config.epochs, 1));
        const double t = std::min(static_cast<double>(step_index), total);
        rate *= 0.5 * (1.0 + std::cos(kPi * t / total));
    }
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step_index));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step_index));

    for (std::size_t p = 0; p < params.size(); ++p) {
        Matrix& theta = *params[p];
        const Matrix& g = *grad_list[p];
        if (g.rows() != theta.rows() || g.cols() != theta.cols()) {
            throw ArgumentError("gradient shape mismatch");
        }
        Matrix& m1 = moments.m[p];
        Matrix& m2 = moments.v[p];
        for (std::size_t i = 0; i < theta.rows(); ++i) {
            for (std::size_t j = 0; j < theta.cols(); ++j) {
                m1(i, j) = config.beta1 * m1(i, j) + (1.0 - config.beta1) * g(i, j);
                m2(i, j) = config.beta2 * m2(i, j) + (1.0 - config.beta2) * g(i, j) * g(i, j);
                const double mhat = m1(i, j) / bc1;
                const double vhat = m2(i, j) / bc2;
                theta(i, j) -= rate * mhat / (std::sqrt(vhat) + config.epsilon);
            }
        }
    }
}

std::vector<double> train(NeuralReconstructor& model, const SnapshotSeries& train_series,
                          const TrainConfig& config) {
    const std::size_t total = train_series.snapshot_count();
    if (config.batch_size < 1) throw ArgumentError("batch_size must be at least 1");
    if (config.batch_size > total) {
        throw ArgumentError("batch_size " + std::to_string(config.batch_size) +
                            " exceeds training snapshot count " + std::to_string(total));
    }
    if (!(config.learning_rate > 0.0)) throw ArgumentError("learning_rate must be positive");
    if (config.epochs < 1) throw ArgumentError("epochs must be at least 1");

    model.norm = compute_normalization(train_series);
    initialize_parameters(model, config.seed);
    const BatchData all = prepare_batch(model, train_series, full_order(train_series));

    AdamState moments;
    std::vector<double> history;
    history.reserve(config.epochs);
    LstmState state = zero_state(model.rank());

    for (std::size_t step = 1; step <= config.epochs; ++step) {
        const std::size_t start = ((step - 1) * config.batch_size) % total;
        if (start == 0) state = zero_state(model.rank());

        BatchData batch;
        batch.inputs.reserve(config.batch_size);
        batch.targets.reserve(config.batch_size);
        for (std::size_t k = 0; k < config.batch_size; ++k) {
            const std::size_t t = (start + k) % total;
            batch.inputs.push_back(all.inputs[t]);
            batch.targets.push_back(all.targets[t]);
        }

        std::vector<StepCache> caches;
        LstmState final_state = state;
        const double loss = run_forward(model, batch, state, &caches, &final_state);
        history.push_back(loss);
        const Gradients grads = run_backward(model, caches);
        adam_step(model, grads, moments, step, config);
        check_model_finite(model);
        state = std::move(final_state);  // carried, gradients already truncated
    }
    model.state = std::move(state);
    return history;
}

Gradients numeric_gradients(const NeuralReconstructor& model, const SnapshotSeries& batch,
                            double step) {
    NeuralReconstructor scratch = model;
    const BatchData data = prepare_batch(scratch, batch, full_order(batch));
    Gradients grads = zero_gradients(model);
    std::vector<Matrix*> params;
    visit_params(scratch.lstm, scratch.mlp,
                 [&](const std::string&, Matrix& m) { params.push_back(&m); });
    std::vector<Matrix*> grad_list;
    visit_params(grads.lstm, grads.mlp,
                 [&](const std::string&, Matrix& m) { grad_list.push_back(&m); });

    for (std::size_t p = 0; p < params.size(); ++p) {
        Matrix& theta = *params[p];
        for (std::size_t i = 0; i < theta.rows(); ++i) {
            for (std::size_t j = 0; j < theta.cols(); ++j) {
                const double saved = theta(i, j);
                theta(i, j) = saved + step;
                const double up = run_forward(scratch, data, scratch.state, nullptr, nullptr);
                theta(i, j) = saved - step;
                const double down = run_forward(scratch, data, scratch.state, nullptr, nullptr);
                theta(i, j) = saved;
                (*grad_list[p])(i, j) = (up - down) / (2.0 * step);
            }
        }
    }
    return grads;
}

GradCheckReport compare_gradients(const Gradients& analytic, const Gradients& numeric,
                                  double tolerance) {
    std::vector<std::pair<std::string, const Matrix*>> a, n;
    visit_params(analytic.lstm, analytic.mlp,
                 [&](const std::string& name, const Matrix& m) { a.emplace_back(name, &m); });
    visit_params(numeric.lstm, numeric.mlp,
                 [&](const std::string& name, const Matrix& m) { n.emplace_back(name, &m); });
    if (a.size() != n.size()) throw ArgumentError("gradient sets differ in structure");

    GradCheckReport report;
    for (std::size_t p = 0; p < a.size(); ++p) {
        const Matrix& ma = *a[p].second;
        const Matrix& mn = *n[p].second;
        if (ma.rows() != mn.rows() || ma.cols() != mn.cols()) {
            throw ArgumentError("gradient sets differ in shape at " + a[p].first);
        }
        for (std::size_t i = 0; i < ma.rows(); ++i) {
            for (std::size_t j = 0; j < ma.cols(); ++j) {
                const double av = ma(i, j);
                const double nv = mn(i, j);
                const double scale = std::max({1e-4, std::abs(av), std::abs(nv)});
                const double rel = std::abs(av - nv) / scale;
                if (rel > report.max_rel_dev) {
                    report.max_rel_dev = rel;
                    report.worst_path = a[p].first + "[" + std::to_string(i) + "," +
                                        std::to_string(j) + "]";
                }
            }
        }
    }
    report.pass = report.max_rel_dev <= tolerance;
    return report;
}

GradCheckReport gradient_check(const NeuralReconstructor& model, const SnapshotSeries& batch,
                               double tolerance) {
    return compare_gradients(backward(model, batch), numeric_gradients(model, batch), tolerance);
}

void save_model(const NeuralReconstructor& model, const std::string& path) {
    std::string out;
    out.append(kMagic, 4);
    detail::put_u32(out, kCheckpointVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(model.rank()));
    detail::put_u32(out, static_cast<std::uint32_t>(model.output_size()));
    detail::put_u32(out, static_cast<std::uint32_t>(model.mlp.hidden_count()));
    detail::put_u32(out, static_cast<std::uint32_t>(model.placement.grid_height));
    detail::put_u32(out, static_cast<std::uint32_t>(model.placement.grid_width));
    for (std::size_t idx : model.placement.gamma)
        detail::put_u32(out, static_cast<std::uint32_t>(idx));
    for (std::size_t idx : model.output_cells) detail::put_u32(out, static_cast<std::uint32_t>(idx));
    detail::put_f64(out, model.norm.lo);
    detail::put_f64(out, model.norm.hi);
    out.push_back(model.norm.zero_range ? 1 : 0);
    visit_params(model.lstm, model.mlp, [&](const std::string&, const Matrix& m) {
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j) detail::put_f64(out, m(i, j));
    });
    for (double v : model.state.c) detail::put_f64(out, v);
    for (double v : model.state.h) detail::put_f64(out, v);
    detail::write_file(path, out);
}

NeuralReconstructor load_model(const std::string& path) {
    const std::string buf = detail::read_file(path);
    auto need = [&](std::size_t n) {
        if (buf.size() < n) {
            throw ParseError(path + ": truncated checkpoint, expected at least " +
                             std::to_string(n) + " bytes, found " + std::to_string(buf.size()));
        }
    };
    need(8);
    if (std::memcmp(buf.data(), kMagic, 4) != 0) {
        throw ParseError(path + ": bad magic, not a model checkpoint");
    }
    if (detail::get_u32(buf, 4) != kCheckpointVersion) {
        throw ParseError(path + ": unsupported checkpoint version");
    }
    need(28);
    const std::size_t r = detail::get_u32(buf, 8);
    const std::size_t m = detail::get_u32(buf, 12);
    const std::size_t hidden = detail::get_u32(buf, 16);
    const std::size_t grid_h = detail::get_u32(buf, 20);
    const std::size_t grid_w = detail::get_u32(buf, 24);
    if (r == 0 || m == 0 || grid_h == 0 || grid_w == 0 || hidden % 2 != 0) {
        throw ParseError(path + ": malformed checkpoint header");
    }
    std::size_t off = 28;

    need(off + 4 * (r + m));
    std::vector<std::size_t> gamma(r), cells(m);
    for (std::size_t i = 0; i < r; ++i, off += 4) gamma[i] = detail::get_u32(buf, off);
    for (std::size_t i = 0; i < m; ++i, off += 4) cells[i] = detail::get_u32(buf, off);

    need(off + 17);
    NeuralReconstructor model;
    model.norm.lo = detail::get_f64(buf, off);
    model.norm.hi = detail::get_f64(buf, off + 8);
    model.norm.zero_range = buf[off + 16] != 0;
    off += 17;

    try {
        model.placement = Placement(grid_h, grid_w, std::move(gamma));
    } catch (const ArgumentError& e) {
        throw ParseError(path + ": " + e.what());
    }
    model.output_cells = std::move(cells);
    for (std::size_t idx : model.output_cells) {
        if (idx >= grid_h * grid_w) throw ParseError(path + ": output cell outside grid");
    }

    model.lstm.w_f = Matrix(r, 2 * r);
    model.lstm.w_i = model.lstm.w_f;
    model.lstm.w_c = model.lstm.w_f;
    model.lstm.w_o = model.lstm.w_f;
    model.lstm.b_f = Matrix(r, 1);
    model.lstm.b_i = model.lstm.b_f;
    model.lstm.b_c = model.lstm.b_f;
    model.lstm.b_o = model.lstm.b_f;
    for (std::size_t l = 0; l < hidden; ++l) {
        const std::size_t in = (l % 2 == 0) ? r : m;
        const std::size_t outd = (l % 2 == 0) ? m : r;
        model.mlp.layers.push_back({Matrix(outd, in), Matrix(outd, 1)});
    }
    model.mlp.layers.push_back({Matrix(m, r), Matrix(m, 1)});

    visit_params(model.lstm, model.mlp, [&](const std::string&, Matrix& mat) {
        need(off + 8 * mat.rows() * mat.cols());
        for (std::size_t i = 0; i < mat.rows(); ++i)
            for (std::size_t j = 0; j < mat.cols(); ++j, off += 8) mat(i, j) = detail::get_f64(buf, off);
    });
    need(off + 16 * r);
    model.state = zero_state(r);
    for (std::size_t k = 0; k < r; ++k, off += 8) model.state.c[k] = detail::get_f64(buf, off);
    for (std::size_t k = 0; k < r; ++k, off += 8) model.state.h[k] = detail::get_f64(buf, off);
    if (off != buf.size()) {
        throw ParseError(path + ": trailing bytes, expected " + std::to_string(off) +
                         " bytes, found " + std::to_string(buf.size()));
    }
    check_model_finite(model);
    return model;
}

void write_loss_csv(const std::vector<double>& history, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ParseError("cannot write " + path);
    out << "step,loss\n";
    char buf[64];
    for (std::size_t i = 0; i < history.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", history[i]);
        out << (i + 1) << ',' << buf << '\n';
    }
    if (!out) throw ParseError("short write to " + path);
}

}  // namespace sparsefield
