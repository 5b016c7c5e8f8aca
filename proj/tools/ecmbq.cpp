#include "ecmbq/commands.hpp"
#include "ecmbq/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace fs = std::filesystem;
using namespace ecmbq;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    std::string config;
};

// A manifest can stand in for a config file: its resolved "config" block is reused.
json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("cannot parse " + path + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError(path + " must hold a JSON object");
    if (j.contains("command") && j.contains("config")) return j["config"];
    return j;
}

fs::path prepare_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
    return fs::path(dir);
}

std::vector<int> parse_orders(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            out.push_back(std::stoi(tok));
        } catch (const std::exception&) {
            throw ConfigError("bad model order '" + tok + "'");
        }
    }
    return out;
}

void finish(const fs::path& dir, const std::string& command, const json& cfg, std::uint64_t seed,
            const std::vector<std::string>& outputs) {
    write_manifest(dir, make_manifest(command, cfg, seed, outputs));
    for (const auto& o : outputs) std::cout << "wrote " << (dir / o).string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian model selection for RC-pair equivalent circuits"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
    app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
    app.add_option("--config", g.config, "JSON config or manifest to run from");

    auto* gen = app.add_subcommand("generate", "Generate a synthetic impedance dataset");
    std::string preset_name = "easy";
    Eigen::Index m = 0;
    double log_sigma2 = 0.0;
    gen->add_option("--preset", preset_name, "easy or hard")->capture_default_str();
    auto* m_opt = gen->add_option("--m", m, "Number of frequencies");
    auto* noise_opt = gen->add_option("--log-sigma2", log_sigma2, "ln of the noise variance");

    std::string data_path;
    std::string orders = "1,2,3,4";
    int batch = 0;
    int iters = -1;
    auto add_basq_flags = [&](CLI::App* sub) {
        sub->add_option("--batch", batch, "BASQ batch size");
        sub->add_option("--iters", iters, "BASQ iterations");
    };

    auto* sel = app.add_subcommand("select", "Compare model orders by LEM, RMSE, BIC and ELPD");
    sel->add_option("--data", data_path, "Dataset JSON")->required();
    auto* orders_opt = sel->add_option("--orders", orders, "Comma separated model orders")->capture_default_str();
    add_basq_flags(sel);

    auto* ident = app.add_subcommand("identify", "SNR and JS divergence of a synthetic dataset");
    long n_is = 1000000;
    ident->add_option("--data", data_path, "Dataset JSON")->required();
    ident->add_option("--n-is", n_is, "Importance samples per JS estimate")->capture_default_str();

    auto* sens = app.add_subcommand("sensitivity", "Latin-hypercube sweep over two-pair datasets");
    int n_datasets = 0;
    auto* nd_opt = sens->add_option("--n-datasets", n_datasets, "Number of datasets");
    add_basq_flags(sens);

    auto* bench = app.add_subcommand("benchmark", "BASQ against elliptical slice sampling at equal budget");
    int order = 0;
    long budget = 0;
    bench->add_option("--data", data_path, "Dataset JSON")->required();
    auto* order_opt = bench->add_option("--order", order, "Model order");
    auto* budget_opt = bench->add_option("--budget", budget, "Likelihood evaluations per engine");
    add_basq_flags(bench);

    auto* abl = app.add_subcommand("ablation", "Warp-layer ablation");
    abl->add_option("--data", data_path, "Dataset JSON")->required();
    auto* abl_order_opt = abl->add_option("--order", order, "Model order");
    add_basq_flags(abl);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        json cfg = load_config(g.config);
        const bool seed_given = app.get_option("--seed")->count() > 0;
        if (seed_given || !cfg.contains("seed")) cfg["seed"] = g.seed;
        const std::uint64_t seed = cfg["seed"].get<std::uint64_t>();
        auto apply_basq = [&] {
            if (batch > 0) cfg["basq"]["batch_size"] = batch;
            if (iters >= 0) cfg["basq"]["max_iters"] = iters;
        };
        const fs::path dir = prepare_out_dir(g.out_dir);

        if (*gen) {
            if (gen->get_option("--preset")->count() > 0 || !cfg.contains("preset")) cfg["preset"] = preset_name;
            if (m_opt->count() > 0) cfg["m"] = m;
            if (noise_opt->count() > 0) cfg["log_sigma2"] = log_sigma2;
            const GenerateConfig gc = GenerateConfig::from_json(cfg);
            const Dataset data = make_dataset(gc);
            save_dataset(data, dir / "dataset.json");
            export_csv(data, dir / "dataset.csv");
            finish(dir, "generate", gc.to_json(), seed, {"dataset.json", "dataset.csv"});
        } else if (*sel) {
            if (orders_opt->count() > 0 || !cfg.contains("orders")) cfg["orders"] = parse_orders(orders);
            apply_basq();
            const SelectConfig sc = SelectConfig::from_json(cfg);
            const Dataset data = load_dataset(data_path);
            const CriteriaReport report = select_models(data, sc);
            const std::string table = report.table();
            std::cout << table;
            write_text_atomic(dir / "report.json", report.to_json().dump(2) + "\n");
            write_text_atomic(dir / "table.txt", table);
            json resolved = sc.to_json();
            resolved["data"] = data_path;
            finish(dir, "select", resolved, seed, {"report.json", "table.txt"});
        } else if (*ident) {
            const Dataset data = load_dataset(data_path);
            const IdentifiabilityReport rep = identify_dataset(data, n_is, seed);
            const std::string text = rep.to_json().dump(2) + "\n";
            std::cout << text;
            write_text_atomic(dir / "identify.json", text);
            finish(dir, "identify", json{{"data", data_path}, {"n_is", n_is}, {"seed", seed}}, seed, {"identify.json"});
        } else if (*sens) {
            if (nd_opt->count() > 0) cfg["n_datasets"] = n_datasets;
            apply_basq();
            const SensitivityConfig sc = SensitivityConfig::from_json(cfg);
            const SensitivityResult res = run_sensitivity(sc);
            std::cout << res.correlation_table();
            std::cout << res.records.size() << " datasets analysed, " << res.failures.size() << " failed\n";
            write_text_atomic(dir / "sensitivity.csv", res.records_csv());
            write_text_atomic(dir / "correlation.txt", res.correlation_table());
            write_text_atomic(dir / "sensitivity.json", res.to_json().dump(2) + "\n");
            finish(dir, "sensitivity", sc.to_json(), seed, {"sensitivity.csv", "correlation.txt", "sensitivity.json"});
        } else if (*bench) {
            if (order_opt->count() > 0) cfg["n_pairs"] = order;
            if (budget_opt->count() > 0) cfg["budget"] = budget;
            apply_basq();
            const BenchmarkConfig bc = BenchmarkConfig::from_json(cfg);
            const Dataset data = load_dataset(data_path);
            const BenchmarkResult res = run_benchmark(data, bc);
            std::cout << res.to_json().dump(2) << '\n';
            write_text_atomic(dir / "overlay.csv", res.overlay_csv());
            write_text_atomic(dir / "benchmark.json", res.to_json().dump(2) + "\n");
            json resolved = bc.to_json();
            resolved["data"] = data_path;
            finish(dir, "benchmark", resolved, seed, {"overlay.csv", "benchmark.json"});
        } else if (*abl) {
            if (abl_order_opt->count() > 0) cfg["n_pairs"] = order;
            apply_basq();
            const AblationConfig ac = AblationConfig::from_json(cfg);
            const Dataset data = load_dataset(data_path);
            const auto rows = run_ablation(data, ac);
            const std::string table = ablation_table(rows);
            std::cout << table;
            write_text_atomic(dir / "ablation.txt", table);
            write_text_atomic(dir / "ablation.json", ablation_json(rows).dump(2) + "\n");
            json resolved = ac.to_json();
            resolved["data"] = data_path;
            finish(dir, "ablation", resolved, seed, {"ablation.txt", "ablation.json"});
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.exit_code();
    } catch (const json::exception& e) {
        std::cerr << "error: malformed configuration: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
    return 0;
}
