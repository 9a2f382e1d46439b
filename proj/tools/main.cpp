// Command-line front end: dataset generation, training, recovery, RIP checks,
// the sample-size bound, presence probabilities, the convergence audit, and
// the full benchmark grid. Exit codes: 0 ok, 1 config error, 2 runtime
// failure, 3 verification-assertion failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gencs/checkpoint.hpp"
#include "gencs/config.hpp"
#include "gencs/dataset.hpp"
#include "gencs/experiment.hpp"
#include "gencs/metrics.hpp"
#include "gencs/recovery.hpp"
#include "gencs/rip.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    int jobs = 1;
};

json load_config_or_empty(const GlobalOpts& g) {
    if (g.config_path.empty()) return json::object();
    return gencs::load_json_file(g.config_path);
}

gencs::ExperimentConfig experiment_config(const GlobalOpts& g, const json& j) {
    gencs::ExperimentConfig cfg = gencs::experiment_config_from_json(j);
    if (g.seed) cfg.seed = *g.seed;
    cfg.data.seed = cfg.seed;
    cfg.jobs = g.jobs;
    return cfg;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw gencs::ParameterError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
}

int cmd_gen_data(const GlobalOpts& g) {
    const json j = load_config_or_empty(g);
    gencs::ExperimentConfig cfg = experiment_config(g, j);
    const gencs::Dataset ds = gencs::make_synthetic_dataset(cfg.data);
    fs::create_directories(g.out_dir);
    const fs::path path = fs::path(g.out_dir) / "dataset.json";
    gencs::save_dataset(path, ds);
    std::cout << "wrote " << path.string() << " (" << ds.signals.size() << " signals, d="
              << cfg.data.d << ")\n";
    return 0;
}

int cmd_train(const GlobalOpts& g) {
    const json j = load_config_or_empty(g);
    gencs::ExperimentConfig cfg = experiment_config(g, j);
    const bool im = j.value("im", false);
    const int m = j.value("m", cfg.m_list.front());

    std::vector<gencs::Tensor> data;
    if (j.contains("dataset")) {
        data = gencs::load_dataset(j.at("dataset").get<std::string>()).signals;
    } else {
        data = gencs::make_synthetic_dataset(cfg.data).signals;
    }
    gencs::Checkpoint ck;
    if (cfg.train.objective == gencs::Objective::dcs) {
        ck = gencs::detail::train_dcs_checkpoint(cfg, data, im, m);
    } else {
        ck = gencs::detail::train_gan_checkpoint(cfg, data, im, im ? m : 0);
    }
    fs::create_directories(g.out_dir);
    const fs::path path = fs::path(g.out_dir) / "checkpoint.json";
    gencs::save_checkpoint(path, ck);
    std::cout << "wrote " << path.string() << " (objective="
              << gencs::objective_name(cfg.train.objective) << ", im=" << im << ", m=" << m
              << ")\n";
    return 0;
}

int cmd_recover(const GlobalOpts& g) {
    const json j = load_config_or_empty(g);
    gencs::ExperimentConfig cfg = experiment_config(g, j);
    if (!j.contains("checkpoint")) {
        throw gencs::ParameterError("recover: config needs a 'checkpoint' path");
    }
    const gencs::Checkpoint ck = gencs::load_checkpoint(j.at("checkpoint").get<std::string>());
    const gencs::Method method = gencs::method_from_name(j.value("method", "csgm"));
    const bool im = j.value("im", ck.generator.cond_dim > 0);
    const int m = j.value("m", im ? ck.generator.cond_dim : cfg.m_list.front());
    const bool export_trace = j.value("export_trace", false);

    gencs::SignalFamily family(cfg.data);
    const gencs::SensingMatrix S = gencs::detail::experiment_sensing(cfg, m);
    const gencs::MlpGenerator gen(ck.generator);
    gencs::RecoveryConfig rc = gencs::detail::recovery_for(cfg, method);
    rc.im = im;
    rc.retain_iterates = export_trace;

    gencs::RngStream test_rng(cfg.seed, gencs::stream_label("recover-cli-test"));
    const std::vector<gencs::Tensor> test_set = family.sample_many(cfg.n_test, test_rng);

    fs::create_directories(g.out_dir);
    std::vector<gencs::TrialReport> rows;
    for (int si = 0; si < cfg.n_test; ++si) {
        const gencs::Tensor& x_te = test_set[si];
        const gencs::Measurement y = gencs::measure(S, x_te);
        gencs::RngStream rng(cfg.seed,
                             gencs::stream_label("recover-cli|sig=" + std::to_string(si)));
        gencs::RecoveryTrace trace;
        switch (method) {
        case gencs::Method::csgm:
        case gencs::Method::dcs:
            trace = gencs::csgm_recover(gen, S, y, rc, rng, &x_te);
            break;
        case gencs::Method::pgdgan:
            trace = gencs::pgdgan_recover(gen, S, y, rc, rng, &x_te);
            break;
        case gencs::Method::spgdgan:
            trace = gencs::spgdgan_recover(gen, S, y, family.transform(), rc, rng, &x_te);
            break;
        case gencs::Method::sparsegen:
            trace = gencs::sparsegen_recover(gen, S, y, family.transform(), rc, rng, &x_te);
            break;
        }
        gencs::TrialReport r;
        r.method = gencs::method_name(method);
        r.im = im;
        r.m = m;
        r.trial = si;
        r.per_pixel_error = gencs::per_pixel_error(trace.x_hat, x_te);
        r.iters = trace.iterations;
        r.wall_ms = cfg.timing ? trace.wall_ms : 0.0;
        rows.push_back(std::move(r));
        if (export_trace) {
            gencs::write_trace_csv(fs::path(g.out_dir) / ("trace_" + std::to_string(si) + ".csv"),
                                   trace);
            write_json(fs::path(g.out_dir) / ("trace_" + std::to_string(si) + ".json"),
                       gencs::trace_to_json(trace));
        }
    }
    gencs::write_results_csv(fs::path(g.out_dir) / "results.csv", rows);
    write_json(fs::path(g.out_dir) / "report.json", gencs::experiment_report(rows));
    std::cout << "recovered " << cfg.n_test << " signals; results in " << g.out_dir << "\n";
    return 0;
}

int cmd_rip(const GlobalOpts& g) {
    const json j = load_config_or_empty(g);
    const std::uint64_t seed = g.seed.value_or(j.value("seed", std::uint64_t{0}));
    const int m = j.value("m", 20);
    const int d = j.value("d", 64);
    const double gamma = j.value("gamma", 3.0);
    const std::string convention = j.value("convention", "definition1");
    const std::string transform = j.value("transform", "identity");

    gencs::RngStream rng(seed, gencs::stream_label("rip-cli"));
    const gencs::SensingMatrix S = gencs::sample_sensing(m, d, rng);
    gencs::Tensor M = S.A;
    if (transform == "haar") {
        M = gencs::matmul(S.A, gencs::UnitaryTransform::haar(d).matrix());
    } else if (transform != "identity") {
        throw gencs::ParameterError("rip: transform must be identity or haar");
    }

    std::vector<std::vector<int>> supports;
    if (j.contains("supports")) {
        supports = j.at("supports").get<std::vector<std::vector<int>>>();
    } else {
        const int count = j.value("support_count", 20);
        const int size = j.value("support_size", 8);
        for (int c = 0; c < count; ++c) {
            std::vector<int> perm(d);
            std::iota(perm.begin(), perm.end(), 0);
            for (int i = d - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
            supports.emplace_back(perm.begin(), perm.begin() + size);
        }
    }
    std::size_t max_size = 0;
    for (const auto& s : supports) max_size = std::max(max_size, s.size());
    const gencs::SupportFamily family = gencs::SupportFamily::from_supports(supports, max_size);
    const gencs::RipReport report =
        gencs::check_rip(M, family, gamma,
                         convention == "squared" ? gencs::RipConvention::squared
                                                 : gencs::RipConvention::definition1);

    json out;
    out["gamma"] = report.gamma;
    out["convention"] = convention;
    out["pass"] = report.pass;
    out["worst_support"] = report.worst_support;
    out["worst_violation"] = report.worst_violation;
    json per = json::array();
    for (const auto& e : report.per_support) {
        per.push_back({{"support", e.support}, {"sigma_min", e.sigma_min},
                       {"sigma_max", e.sigma_max}});
    }
    out["per_support"] = std::move(per);
    fs::create_directories(g.out_dir);
    write_json(fs::path(g.out_dir) / "rip.json", out);
    std::cout << (report.pass ? "RIP PASS" : "RIP FAIL") << " (gamma=" << gamma << ", "
              << family.size() << " supports)\n";
    return 0;
}

int cmd_presence(const GlobalOpts& g) {
    const json j = load_config_or_empty(g);
    gencs::ExperimentConfig cfg = experiment_config(g, j);
    const int m = j.value("m", cfg.m_list.front());
    const double eps = j.value("eps", 0.125);
    const int n_z = j.value("n_z", 1000);
    const bool per_pixel = j.value("per_pixel", true);

    const gencs::PresenceComparison cmp = gencs::presence_experiment(cfg, m, eps, n_z, per_pixel);
    json out;
    out["m"] = m;
    out["eps"] = eps;
    out["n_z"] = n_z;
    out["per_pixel"] = per_pixel;
    out["marginal"] = {{"mean", cmp.marginal.mean}, {"stddev", cmp.marginal.stddev}};
    out["conditional"] = {{"mean", cmp.conditional.mean}, {"stddev", cmp.conditional.stddev}};
    out["conditional_wins"] = cmp.wins;
    out["conditional_losses"] = cmp.losses;
    out["sign_test_p"] = cmp.sign_p;
    fs::create_directories(g.out_dir);
    write_json(fs::path(g.out_dir) / "presence.json", out);
    std::cout << "presence: marginal " << cmp.marginal.mean << " +- " << cmp.marginal.stddev
              << ", conditional " << cmp.conditional.mean << " +- " << cmp.conditional.stddev
              << " (wins " << cmp.wins << ", p=" << cmp.sign_p << ")\n";
    return 0;
}

int cmd_bound(const GlobalOpts& g, int s, int T, double tau, double gamma) {
    (void)g;
    std::cout << gencs::theorem2_min_m(s, T, tau, gamma) << "\n";
    return 0;
}

int cmd_verify_thm1(const GlobalOpts& g) {
    const json j = load_config_or_empty(g);
    gencs::Thm1Config cfg;
    cfg.d = j.value("d", cfg.d);
    cfg.s = j.value("s", cfg.s);
    cfg.gamma = j.value("gamma", cfg.gamma);
    cfg.T = j.value("T", cfg.T);
    cfg.tau = j.value("tau", cfg.tau);
    cfg.seeds = j.value("seeds", cfg.seeds);
    if (j.contains("m")) cfg.m_override = j.at("m").get<int>();
    if (j.contains("eps_list")) cfg.eps_list = j.at("eps_list").get<std::vector<double>>();
    cfg.fit_steps = j.value("fit_steps", cfg.fit_steps);
    if (j.value("transform", "haar") == std::string("identity")) {
        cfg.transform = gencs::TransformKind::identity;
    }
    cfg.seed = g.seed.value_or(j.value("seed", std::uint64_t{0}));

    const gencs::Thm1Report report = gencs::theorem1_verification(cfg);
    fs::create_directories(g.out_dir);
    write_json(fs::path(g.out_dir) / "thm1.json", gencs::thm1_report_json(cfg, report));
    std::cout << "m=" << report.m << " alpha=" << report.alpha << " rho=" << report.rho
              << "\nrip pass " << report.rip_pass << "/" << report.seeds_total
              << ", contraction " << report.contraction_hold << "/" << report.rip_pass
              << ", fit r2=" << report.fit.r2 << "\n"
              << (report.pass ? "VERIFY PASS" : "VERIFY FAIL") << "\n";
    return report.pass ? 0 : 3;
}

int cmd_bench(const GlobalOpts& g) {
    const json j = load_config_or_empty(g);
    gencs::ExperimentConfig cfg = experiment_config(g, j);
    const std::vector<gencs::TrialReport> rows = gencs::run_experiment(cfg);
    fs::create_directories(g.out_dir);
    gencs::write_results_csv(fs::path(g.out_dir) / "results.csv", rows);
    json report = gencs::experiment_report(rows);
    report["seed"] = cfg.seed;
    write_json(fs::path(g.out_dir) / "report.json", report);
    int failed = 0;
    for (const auto& r : rows) failed += r.failed ? 1 : 0;
    std::cout << "bench: " << rows.size() << " cells (" << failed << " failed); results in "
              << g.out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"compressed-sensing recovery with pre-trained generative priors"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "JSON config file");
    app.add_option("--seed", g.seed, "master seed (overrides config)");
    app.add_option("--out", g.out_dir, "output directory");
    app.add_option("--jobs", g.jobs, "parallel cells");

    auto* gen_data = app.add_subcommand("gen-data", "write a synthetic dataset");
    auto* train = app.add_subcommand("train", "train a generator checkpoint");
    auto* recover = app.add_subcommand("recover", "run one recovery method on test signals");
    auto* rip = app.add_subcommand("rip", "empirical RIP certificate for a Gaussian matrix");
    auto* bound = app.add_subcommand("bound", "minimum m for the RIP guarantee");
    int bs = 4, bT = 10;
    double btau = 0.1, bgamma = 3.0;
    bound->add_option("-s,--sparsity", bs, "sparsity s");
    bound->add_option("-T,--iterations", bT, "iteration count T");
    bound->add_option("--tau", btau, "failure probability");
    bound->add_option("--gamma", bgamma, "RIP constant");
    auto* presence = app.add_subcommand("presence", "marginal vs conditional presence probability");
    auto* verify = app.add_subcommand("verify-thm1", "audit the sparse-PGD convergence guarantee");
    auto* bench = app.add_subcommand("bench", "full (method, im, m, trial) benchmark grid");
    for (auto* sub : {gen_data, train, recover, rip, bound, presence, verify, bench}) {
        sub->fallthrough();
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen_data->parsed()) return cmd_gen_data(g);
        if (train->parsed()) return cmd_train(g);
        if (recover->parsed()) return cmd_recover(g);
        if (rip->parsed()) return cmd_rip(g);
        if (bound->parsed()) return cmd_bound(g, bs, bT, btau, bgamma);
        if (presence->parsed()) return cmd_presence(g);
        if (verify->parsed()) return cmd_verify_thm1(g);
        if (bench->parsed()) return cmd_bench(g);
    } catch (const gencs::ParameterError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const gencs::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
