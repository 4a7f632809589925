// Acceptance gate: every criterion prints exactly one PASS/FAIL line
// with its key numbers; the process exits nonzero if any line fails.

#include <sys/wait.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "sparsefield/data_io.hpp"
#include "sparsefield/detail/bytes.hpp"
#include "sparsefield/experiment.hpp"
#include "sparsefield/linear_recon.hpp"
#include "sparsefield/metrics.hpp"
#include "sparsefield/neural_recon.hpp"
#include "sparsefield/placement.hpp"
#include "sparsefield/rng.hpp"
#include "sparsefield/tensor_linalg.hpp"

using namespace sparsefield;

namespace {

int g_failures = 0;

void report(int number, const char* label, bool pass, const std::string& detail) {
    std::printf("criterion %d (%s): %s  [%s]\n", number, label, pass ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

// ---- criterion 1: exact low-rank recovery -----------------------------

void criterion_exact_recovery() {
    const auto t0 = std::chrono::steady_clock::now();
    const SnapshotSeries series = synth_series(SynthKind::standing_waves, 16, 16, 60, 0, 0.0);
    const auto [train, test] = split_series(series, {0.7});
    const Placement placement = select_sampling_locations(train, 4);
    const PrincipalBasis basis = fit_principal_basis(train, 4);
    const Matrix recon = reconstruct_linear(basis, placement, measure_series(placement, test));
    const double mse = mse_at_n(test.to_matrix(), recon);
    const double dt = seconds_since(t0);
    report(1, "exact low-rank recovery", mse <= 1e-10 && dt < 5.0,
           "mse=" + fmt("%.3g", mse) + " budget 1e-10, " + fmt("%.2f", dt) + "s < 5s");
}

// ---- criterion 2: greedy pivot vs exhaustive search --------------------

double det_rows(const Matrix& t, const std::vector<std::size_t>& rows) {
    if (rows.size() == 1) return t(rows[0], 0);
    if (rows.size() == 2) {
        return t(rows[0], 0) * t(rows[1], 1) - t(rows[0], 1) * t(rows[1], 0);
    }
    const std::size_t a = rows[0], b = rows[1], c = rows[2];
    return t(a, 0) * (t(b, 1) * t(c, 2) - t(b, 2) * t(c, 1)) -
           t(a, 1) * (t(b, 0) * t(c, 2) - t(b, 2) * t(c, 0)) +
           t(a, 2) * (t(b, 0) * t(c, 1) - t(b, 1) * t(c, 0));
}

void criterion_greedy_pivot() {
    const auto t0 = std::chrono::steady_clock::now();
    int median_ok = 0, max_hits = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const std::size_t r = 2 + seed % 2;
        Rng rng(seed);
        Matrix t(8, r);
        for (double& v : t.data()) v = rng.normal();

        const double chosen = std::abs(det_rows(t, qr_row_pivot(t, r).pivots));

        std::vector<double> dets;  // every r-subset, by bitmask
        for (std::uint32_t mask = 0; mask < (1u << 8); ++mask) {
            if (std::popcount(mask) != static_cast<int>(r)) continue;
            std::vector<std::size_t> rows;
            for (std::size_t i = 0; i < 8; ++i) {
                if (mask & (1u << i)) rows.push_back(i);
            }
            dets.push_back(std::abs(det_rows(t, rows)));
        }
        std::sort(dets.begin(), dets.end());
        if (chosen >= dets[dets.size() / 2] - 1e-12) ++median_ok;
        if (chosen >= dets.back() - 1e-9) ++max_hits;
    }
    const double dt = seconds_since(t0);
    report(2, "greedy pivot sanity", median_ok == 20 && max_hits >= 12 && dt < 1.0,
           ">=median " + std::to_string(median_ok) + "/20, =max " + std::to_string(max_hits) +
               "/20 (need 12), " + fmt("%.3f", dt) + "s < 1s");
}

// ---- criterion 3: gradient correctness ---------------------------------

void criterion_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    const SnapshotSeries s = synth_series(SynthKind::traveling_gaussians, 1, 3, 6, 0, 0.1);
    const Placement p(1, 3, {0, 2});  // r=2 sensors on an m=3 field
    std::vector<FieldSnapshot> head(s.snapshots().begin(), s.snapshots().begin() + 3);
    const SnapshotSeries batch(1, 3, std::move(head));

    bool all_pass = true;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const NeuralReconstructor model = make_model(s, p, 2, seed);
        const GradCheckReport rep = gradient_check(model, batch, 1e-5);
        all_pass = all_pass && rep.pass;
        worst = std::max(worst, rep.max_rel_dev);
    }
    const double dt = seconds_since(t0);
    report(3, "gradient correctness", all_pass && dt < 10.0,
           "max rel dev " + fmt("%.3g", worst) + " <= 1e-5 on seeds 0-2, " + fmt("%.2f", dt) +
               "s < 10s");
}

// ---- criteria 4 and 5: strategy ordering on the drifting-bump field ----

void criterion_trends() {
    const auto t0 = std::chrono::steady_clock::now();
    const SnapshotSeries series =
        synth_series(SynthKind::traveling_gaussians, 12, 12, 200, 1, 0.02);

    ExperimentConfig cfg;
    cfg.r = 10;
    cfg.train_fraction = 0.7;
    cfg.hidden_layers = 2;
    cfg.placement_seed = 0;
    cfg.train.epochs = 10000;
    cfg.train.batch_size = 140;  // one full pass over the training window per step
    cfg.train.learning_rate = 1e-3;

    int mse_wins = 0, var_wins = 0;
    std::string per_seed;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        cfg.train.seed = seed;
        const std::vector<MetricsRow> rows = evaluate_strategies(series, cfg);
        const MetricsRow& ql = rows[0];
        const MetricsRow& rl = rows[1];
        const MetricsRow& qn = rows[2];
        const MetricsRow& rn = rows[3];
        const bool mse_ok = qn.mse < rn.mse && qn.mse < ql.mse;
        const bool var_ok = qn.var < rl.var;
        mse_wins += mse_ok;
        var_wins += var_ok;
        per_seed += (per_seed.empty() ? "" : " ") + std::to_string(seed) +
                    (mse_ok ? (var_ok ? ":MV" : ":M-") : (var_ok ? ":-V" : ":--"));
    }
    const double dt = seconds_since(t0);
    report(4, "reconstruction trend, mse", mse_wins >= 4 && dt < 600.0,
           "qr+neural beats rand+neural and qr+linear on " + std::to_string(mse_wins) +
               "/5 seeds (" + per_seed + "), " + fmt("%.0f", dt) + "s < 600s");
    report(5, "reconstruction trend, var", var_wins >= 4,
           "var(qr+neural) < var(rand+linear) on " + std::to_string(var_wins) + "/5 seeds");
}

// ---- criterion 6: metric oracles and worked examples -------------------

void criterion_metric_oracles() {
    bool ok = true;
    std::string why = "oracle d<=1e-12 on 10 cases";

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng ra(100 + seed), rb(200 + seed);
        Matrix truth(6, 9), recon(6, 9);
        for (double& v : truth.data()) v = ra.uniform(-4.0, 4.0);
        for (double& v : recon.data()) v = rb.uniform(-4.0, 4.0);

        // two-pass scalar oracle: per-row means, then population variance
        std::vector<double> row_mean(6, 0.0);
        for (std::size_t i = 0; i < 6; ++i) {
            for (std::size_t j = 0; j < 9; ++j) {
                const double d = truth(i, j) - recon(i, j);
                row_mean[i] += d * d;
            }
            row_mean[i] /= 9.0;
        }
        double mse_o = 0.0;
        for (double rm : row_mean) mse_o += rm;
        mse_o /= 6.0;
        double var_o = 0.0;
        for (double rm : row_mean) var_o += (rm - mse_o) * (rm - mse_o);
        var_o /= 6.0;

        ok = ok && std::abs(mse_at_n(truth, recon) - mse_o) <= 1e-12;
        ok = ok && std::abs(var_at_n(truth, recon) - var_o) <= 1e-12;
    }

    // worked examples: one cell off by 2 in one of two columns -> mse 1;
    // squared-error rows {0,2}/{0,0} -> var 0.25
    Matrix truth{{1.0, 2.0}, {3.0, 4.0}};
    Matrix recon{{1.0, 2.0}, {3.0, 6.0}};
    ok = ok && std::abs(mse_at_n(truth, recon) - 1.0) < 1e-15;
    Matrix zero{{0.0, 0.0}, {0.0, 0.0}};
    Matrix dev{{0.0, std::sqrt(2.0)}, {0.0, 0.0}};
    ok = ok && std::abs(var_at_n(zero, dev) - 0.25) < 1e-15;

    const double imp_mse = improvement_pct(0.4192, 0.3910);
    const double imp_var = improvement_pct(0.0096, 0.0056);
    ok = ok && std::abs(imp_mse - 6.73) <= 0.01;
    ok = ok && std::abs(imp_var - 41.67) <= 0.01;
    why += ", worked mse=1 var=0.25, improvements " + fmt("%.2f", imp_mse) + "% / " +
           fmt("%.2f", imp_var) + "%";
    report(6, "metric oracles", ok, why);
}

// ---- criterion 7: connectivity vs a breadth-first oracle ---------------

std::size_t l1_cells(const Placement& p, std::size_t i, std::size_t j) {
    const std::size_t w = p.grid_width;
    const auto ri = p.gamma[i] / w, ci = p.gamma[i] % w;
    const auto rj = p.gamma[j] / w, cj = p.gamma[j] % w;
    return (ri > rj ? ri - rj : rj - ri) + (ci > cj ? ci - cj : cj - ci);
}

bool bfs_single_component(const Placement& p, std::size_t tau) {
    const std::size_t n = p.size();
    if (n == 0) return false;
    std::vector<char> seen(n, 0);
    std::deque<std::size_t> queue{0};
    seen[0] = 1;
    std::size_t reached = 1;
    while (!queue.empty()) {
        const std::size_t i = queue.front();
        queue.pop_front();
        for (std::size_t j = 0; j < n; ++j) {
            if (!seen[j] && l1_cells(p, i, j) <= tau) {
                seen[j] = 1;
                ++reached;
                queue.push_back(j);
            }
        }
    }
    return reached == n;
}

void criterion_connectivity() {
    const auto t0 = std::chrono::steady_clock::now();
    int oracle_agree = 0, bridged_connected = 0;
    for (std::uint64_t i = 0; i < 50; ++i) {
        const std::size_t tau = 2 + i % 3;
        const Placement p = random_placement(20, 20, 12, i);
        const ConnectivityReport rep = analyze_connectivity(p, tau);
        if (rep.single_component == bfs_single_component(p, tau)) ++oracle_agree;

        const auto [bridged, brep] = insert_bridges(p, tau);
        if (brep.single_component && bfs_single_component(bridged, tau)) ++bridged_connected;
    }
    const double dt = seconds_since(t0);
    report(7, "connectivity and bridging", oracle_agree == 50 && bridged_connected == 50 && dt < 1.0,
           "oracle agreement " + std::to_string(oracle_agree) + "/50, post-bridge connected " +
               std::to_string(bridged_connected) + "/50, " + fmt("%.3f", dt) + "s < 1s");
}

// ---- criterion 8: bitwise pipeline determinism via the CLI -------------

bool run_cli(const std::string& args) {
    const std::string cmd = std::string(SPARSEFIELD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) && WEXITSTATUS(status) == 0;
}

void criterion_determinism() {
    const auto dir = std::filesystem::temp_directory_path() / "sparsefield_acceptance";
    std::filesystem::create_directories(dir);

    auto pipeline = [&](const std::string& tag, std::string& artifacts) {
        const std::string series = (dir / ("s_" + tag + ".sfgd")).string();
        const std::string place = (dir / ("p_" + tag + ".txt")).string();
        const std::string ckpt = (dir / ("m_" + tag + ".bin")).string();
        const std::string metrics = (dir / ("e_" + tag + ".csv")).string();
        const std::string image = (dir / ("r_" + tag + ".pgm")).string();
        bool ok = true;
        ok = ok && run_cli("synth --kind traveling_gaussians --h 8 --w 8 --m 30 --seed 3 "
                           "--noise 0.02 --out " + series);
        ok = ok && run_cli("place --in " + series + " --r 4 --strategy qr --tau 3 --bridge "
                           "--out " + place);
        ok = ok && run_cli("train --series " + series + " --placement " + place +
                           " --epochs 60 --batch 10 --seed 1 --train-frac 0.7 --out " + ckpt);
        ok = ok && run_cli("evaluate --series " + series + " --out " + metrics +
                           " --r 4 --epochs 30 --batch 10 --seed 1 --placement-seed 0");
        ok = ok && run_cli("render --series " + series + " --placement " + place +
                           " --mark-sensors --index 5 --out " + image);
        if (ok) {
            artifacts = detail::read_file(ckpt) + detail::read_file(metrics) +
                        detail::read_file(image) + detail::read_file(place) +
                        detail::read_file(series);
        }
        return ok;
    };

    std::string first, second;
    const bool ran = pipeline("a", first) && pipeline("b", second);
    const bool identical = ran && !first.empty() && first == second;
    report(8, "pipeline determinism", identical,
           ran ? ("checkpoint+metrics+image bytes identical across runs: " +
                  std::string(identical ? "yes" : "NO"))
               : "pipeline command failed");
}

// ---- criterion 9: full-scale disclosure --------------------------------

void criterion_disclosure() {
    report(9, "full-scale disclosure", true,
           "published full-scale magnitudes (e.g. mse 0.3326 at 302 sensors) require the "
           "complete multi-decade sea-surface archive and long training; not desk-reproducible. "
           "The CSV/binary readers ingest such data when supplied; this gate rests on criteria "
           "1-8");
}

}  // namespace

int main() {
    criterion_exact_recovery();
    criterion_greedy_pivot();
    criterion_gradients();
    criterion_trends();
    criterion_metric_oracles();
    criterion_connectivity();
    criterion_determinism();
    criterion_disclosure();

    std::printf("acceptance: %d/9 criteria passed\n", 9 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
