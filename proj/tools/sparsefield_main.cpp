// Command-line pipeline: synth -> place -> train -> evaluate -> render.
// All randomness flows from explicit --seed flags; identical inputs
// give identical output bytes.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sparsefield/data_io.hpp"
#include "sparsefield/error.hpp"
#include "sparsefield/experiment.hpp"
#include "sparsefield/linear_recon.hpp"
#include "sparsefield/metrics.hpp"
#include "sparsefield/neural_recon.hpp"
#include "sparsefield/placement.hpp"
#include "sparsefield/render.hpp"

namespace {

using namespace sparsefield;

struct SynthArgs {
    std::string kind = "traveling_gaussians";
    std::size_t height = 12, width = 12, snapshots = 200;
    std::uint64_t seed = 0;
    double noise = 0.0;
    std::size_t components = 0;
    std::string out;
    bool csv = false;
};

struct PlaceArgs {
    std::string in, out;
    std::size_t r = 10;
    std::string strategy = "qr";
    std::uint64_t seed = 0;
    long long tau = -1;
    bool bridge = false;
};

struct TrainArgs {
    std::string series, placement, out, loss_csv;
    double train_fraction = 1.0;
    std::size_t hidden = 2;
    TrainConfig config;
};

struct EvaluateArgs {
    std::string series, out;
    ExperimentConfig config;
};

struct RenderArgs {
    std::string series, placement, out;
    std::size_t index = 0;
    bool mark_sensors = false;
};

void run_synth(const SynthArgs& a) {
    const SnapshotSeries series = synth_series(synth_kind_from_string(a.kind), a.height, a.width,
                                               a.snapshots, a.seed, a.noise, a.components);
    save_series(series, a.out, a.csv ? SeriesFormat::csv : SeriesFormat::binary);
    std::cout << "wrote " << a.out << " (" << series.height() << "x" << series.width() << ", "
              << series.snapshot_count() << " snapshots)\n";
}

void run_place(const PlaceArgs& a) {
    const SnapshotSeries series = load_series(a.in);
    Placement placement = [&] {
        if (a.strategy == "qr") return select_sampling_locations(series, a.r);
        if (a.strategy == "rand")
            return random_placement(series.height(), series.width(), a.r, a.seed, series.mask());
        throw ArgumentError("unknown strategy '" + a.strategy + "' (expected qr or rand)");
    }();

    if (a.tau >= 0) {
        const std::size_t tau = static_cast<std::size_t>(a.tau);
        ConnectivityReport report = analyze_connectivity(placement, tau);
        if (a.bridge) {
            auto bridged = insert_bridges(placement, tau);
            placement = std::move(bridged.first);
            report = std::move(bridged.second);
            std::cout << "bridges_added=" << report.bridges_added.size() << "\n";
        }
        std::cout << "connected=" << (report.connected ? "true" : "false") << " omega=";
        if (report.omega_defined) {
            std::cout << report.omega;
        } else {
            std::cout << "undefined";
        }
        std::cout << " single_component=" << (report.single_component ? "true" : "false") << "\n";
    } else if (a.bridge) {
        throw ArgumentError("--bridge requires --tau");
    }

    save_placement(placement, a.out);
    std::cout << "wrote " << a.out << " (" << placement.size() << " nodes)\n";
}

void run_train(const TrainArgs& a) {
    const SnapshotSeries full = load_series(a.series);
    const SnapshotSeries series =
        a.train_fraction < 1.0 ? split_series(full, {a.train_fraction}).first : full;
    const Placement placement = load_placement(a.placement);

    NeuralReconstructor model = make_model(series, placement, a.hidden, a.config.seed);
    const std::vector<double> history = train(model, series, a.config);
    save_model(model, a.out);
    if (!a.loss_csv.empty()) write_loss_csv(history, a.loss_csv);
    std::cout << "trained " << a.config.epochs << " steps, final loss " << history.back() << "\n";
    std::cout << "wrote " << a.out << "\n";
}

void run_evaluate(const EvaluateArgs& a) {
    const SnapshotSeries series = load_series(a.series);
    const std::vector<MetricsRow> rows = evaluate_strategies(series, a.config);
    write_metrics_csv(rows, a.out);
    for (const MetricsRow& row : rows) {
        std::printf("%-12s n=%zu mse=%.6g var=%.6g\n", row.strategy.c_str(), row.n_sensors,
                    row.mse, row.var);
    }
    std::cout << "wrote " << a.out << "\n";
}

void run_render(const RenderArgs& a) {
    const SnapshotSeries series = load_series(a.series);
    Placement placement;
    const Placement* mark = nullptr;
    if (a.mark_sensors) {
        if (a.placement.empty()) throw ArgumentError("--mark-sensors requires --placement");
        placement = load_placement(a.placement);
        mark = &placement;
    }
    render_to_pgm(series, a.index, a.out, mark);
    std::cout << "wrote " << a.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse sensing field reconstruction pipeline"};
    app.require_subcommand(1);
    // --h is a grid dimension below, so help is long-form only.
    app.set_help_flag("--help", "print this help and exit");
    auto add_subcommand = [&app](const char* name, const char* desc) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->set_help_flag("--help", "print this help and exit");
        return sub;
    };

    SynthArgs synth_args;
    CLI::App* synth = add_subcommand("synth", "generate a synthetic snapshot series");
    synth->add_option("--kind", synth_args.kind,
                      "traveling_gaussians | standing_waves | mixed");
    synth->add_option("--h", synth_args.height, "grid height")->check(CLI::PositiveNumber);
    synth->add_option("--w", synth_args.width, "grid width")->check(CLI::PositiveNumber);
    synth->add_option("--m", synth_args.snapshots, "snapshot count")->check(CLI::PositiveNumber);
    synth->add_option("--seed", synth_args.seed, "generator seed");
    synth->add_option("--noise", synth_args.noise, "additive noise level");
    synth->add_option("--components", synth_args.components, "structure components (0 = default)");
    synth->add_option("--out", synth_args.out, "output series file")->required();
    synth->add_flag("--csv", synth_args.csv, "write the text format instead of binary");

    PlaceArgs place_args;
    CLI::App* place = add_subcommand("place", "select sensor locations");
    place->add_option("--in", place_args.in, "input series file")->required();
    place->add_option("--r", place_args.r, "sensor count")->check(CLI::PositiveNumber);
    place->add_option("--strategy", place_args.strategy, "qr | rand");
    place->add_option("--seed", place_args.seed, "seed for the rand strategy");
    place->add_option("--tau", place_args.tau, "communication radius; prints a connectivity report");
    place->add_flag("--bridge", place_args.bridge, "append relay nodes until connected");
    place->add_option("--out", place_args.out, "output placement file")->required();

    TrainArgs train_args;
    CLI::App* tr = add_subcommand("train", "train the recurrent reconstructor");
    tr->add_option("--series", train_args.series, "training series file")->required();
    tr->add_option("--placement", train_args.placement, "placement file")->required();
    tr->add_option("--out", train_args.out, "output checkpoint file")->required();
    tr->add_option("--loss", train_args.loss_csv, "optional loss-history CSV");
    tr->add_option("--train-frac", train_args.train_fraction, "use only the leading fraction")
        ->check(CLI::Range(0.0, 1.0));
    tr->add_option("--hidden", train_args.hidden, "hidden layer count (even)");
    tr->add_option("--epochs", train_args.config.epochs, "optimizer steps")
        ->check(CLI::PositiveNumber);
    tr->add_option("--batch", train_args.config.batch_size, "mini-batch size")
        ->check(CLI::PositiveNumber);
    tr->add_option("--lr", train_args.config.learning_rate, "base learning rate");
    tr->add_option("--beta1", train_args.config.beta1, "Adam beta1");
    tr->add_option("--beta2", train_args.config.beta2, "Adam beta2");
    tr->add_option("--eps", train_args.config.epsilon, "Adam epsilon");
    bool no_cosine = false;
    tr->add_flag("--no-cosine", no_cosine, "disable cosine learning-rate decay");
    tr->add_option("--seed", train_args.config.seed, "initialization seed");

    EvaluateArgs eval_args;
    CLI::App* ev = add_subcommand("evaluate", "benchmark the four strategy combinations");
    ev->add_option("--series", eval_args.series, "series file")->required();
    ev->add_option("--out", eval_args.out, "output metrics CSV")->required();
    ev->add_option("--r", eval_args.config.r, "sensor count")->check(CLI::PositiveNumber);
    ev->add_option("--train-frac", eval_args.config.train_fraction, "temporal split fraction");
    ev->add_option("--hidden", eval_args.config.hidden_layers, "hidden layer count (even)");
    ev->add_option("--epochs", eval_args.config.train.epochs, "optimizer steps")
        ->check(CLI::PositiveNumber);
    ev->add_option("--batch", eval_args.config.train.batch_size, "mini-batch size")
        ->check(CLI::PositiveNumber);
    ev->add_option("--lr", eval_args.config.train.learning_rate, "base learning rate");
    ev->add_option("--seed", eval_args.config.train.seed, "training seed");
    ev->add_option("--placement-seed", eval_args.config.placement_seed,
                   "seed for the rand placement");
    ev->add_flag("--debug-identity", eval_args.config.debug_identity,
                 "score the truth against itself (plumbing check)");

    RenderArgs render_args;
    CLI::App* rn = add_subcommand("render", "write one snapshot as a PGM heatmap");
    rn->add_option("--series", render_args.series, "series file")->required();
    rn->add_option("--index", render_args.index, "snapshot index");
    rn->add_option("--out", render_args.out, "output .pgm path")->required();
    rn->add_option("--placement", render_args.placement, "placement file for sensor marks");
    rn->add_flag("--mark-sensors", render_args.mark_sensors, "over-mark sensors as white pixels");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (*synth) run_synth(synth_args);
        if (*place) run_place(place_args);
        if (*tr) {
            train_args.config.cosine_decay = !no_cosine;
            run_train(train_args);
        }
        if (*ev) run_evaluate(eval_args);
        if (*rn) run_render(render_args);
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 5;
    }
    return 0;
}
