// hpm: fit curve families, generate predictors for unseen conditions, and
// reproduce the beta-distribution benchmark.
//
// Exit codes: 0 success, 2 I/O or argument error, 3 numerical failure,
// 4 precondition violation.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hpm/benchmark.hpp"
#include "hpm/format.hpp"
#include "hpm/model_io.hpp"
#include "hpm/pipeline.hpp"

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw hpm::format_error("cannot write file: " + path);
    out << content;
    out.flush();
    if (!out) throw hpm::format_error("cannot write file: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw hpm::format_error("cannot read file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Two-column x,y CSV; one optional header line is tolerated.
std::pair<hpm::Vector, hpm::Vector> read_xy_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw hpm::format_error("cannot read data file: " + path);
    hpm::Vector xs;
    hpm::Vector ys;
    std::string line;
    std::size_t lineno = 0;
    bool header_allowed = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string fx;
        std::string fy;
        if (!std::getline(fields, fx, ',') || !std::getline(fields, fy)) {
            throw hpm::format_error(path + ":" + std::to_string(lineno) +
                                    ": expected two comma-separated columns");
        }
        try {
            std::size_t used = 0;
            const double x = std::stod(fx, &used);
            const double y = std::stod(fy);
            (void)used;
            xs.push_back(x);
            ys.push_back(y);
        } catch (const std::exception&) {
            if (header_allowed) {
                header_allowed = false;
                continue;
            }
            throw hpm::format_error(path + ":" + std::to_string(lineno) + ": not a number");
        }
        header_allowed = false;
    }
    if (xs.empty()) throw hpm::format_error(path + ": no data rows");
    return {std::move(xs), std::move(ys)};
}

hpm::RegressorFamily family_from_flags(const std::string& name, std::size_t degree) {
    if (name == "polynomial" || name == "poly") return hpm::RegressorFamily::polynomial(degree);
    if (name == "exponential") return hpm::RegressorFamily::exponential();
    if (name == "gaussian") return hpm::RegressorFamily::gaussian();
    throw CLI::ValidationError("--family", "unknown family '" + name + "'");
}

struct FitConfig {
    std::string family = "polynomial";
    std::size_t degree = 3;
    std::string data_path;
    std::string out_path = "model.json";
    std::vector<double> condition;
};

int cmd_fit(const FitConfig& cfg) {
    const hpm::RegressorFamily family = family_from_flags(cfg.family, cfg.degree);
    const auto [xs, ys] = read_xy_csv(cfg.data_path);
    hpm::Regressor r;
    try {
        r = hpm::fit(family, xs, ys);
    } catch (const std::exception& e) {
        std::cerr << "error: fit failed: " << e.what() << "\n";
        return 3;
    }

    hpm::ModelFile file;
    file.kind = hpm::ModelKind::regressor;
    hpm::RegressorModel payload;
    payload.regressor = r;
    if (!cfg.condition.empty()) payload.condition = cfg.condition;
    file.payload = payload;
    file.metadata = hpm::default_metadata();
    file.metadata["source_data"] = cfg.data_path;
    file.metadata["converged"] = r.converged;
    write_file(cfg.out_path, hpm::serialize(file));

    std::cout << "train_mse " << hpm::format_double(r.train_mse) << "\n";
    if (!r.converged) std::cerr << "warning: fit did not converge; best parameters kept\n";
    return 0;
}

struct GenerateConfig {
    std::string method = "hpm";
    std::vector<double> target;
    std::vector<std::string> sources;
    std::string out_path = "generated.json";
    std::size_t landmarks = 100;
    std::vector<double> grid_lo{0.01};
    std::vector<double> grid_hi{0.99};
    std::optional<std::size_t> components;
    std::optional<double> variance_fraction;
    std::size_t hyper_degree = 3;
    std::string final_family = "polynomial";
    std::size_t final_degree = 7;
};

int cmd_generate(const GenerateConfig& cfg) {
    std::vector<hpm::SourceTask> tasks;
    for (const std::string& path : cfg.sources) {
        const hpm::ModelFile file = hpm::parse_model_file(read_file(path));
        if (file.kind != hpm::ModelKind::regressor)
            throw hpm::invalid_argument("generate: source '" + path + "' is not a regressor file");
        const auto& payload = std::get<hpm::RegressorModel>(file.payload);
        if (!payload.condition)
            throw hpm::invalid_argument("generate: source '" + path + "' has no attached condition");
        hpm::SourceTask t;
        t.regressor = payload.regressor;
        t.condition = *payload.condition;
        t.id = std::filesystem::path(path).filename().string();
        tasks.push_back(std::move(t));
    }
    if (tasks.size() < 2) throw hpm::invalid_argument("generate: need at least 2 sources");

    hpm::ComponentSelection selection = hpm::ComponentSelection::variance_fraction(0.95);
    if (cfg.components) selection = hpm::ComponentSelection::count(*cfg.components);
    if (cfg.variance_fraction)
        selection = hpm::ComponentSelection::variance_fraction(*cfg.variance_fraction);
    const hpm::RegressorFamily final_family = family_from_flags(cfg.final_family, cfg.final_degree);

    // Broadcast a single grid bound to every task for hpm2.
    const auto per_task = [&](const std::vector<double>& v) {
        if (v.size() == 1) return hpm::Vector(tasks.size(), v.front());
        if (v.size() != tasks.size())
            throw hpm::invalid_argument("generate: grid bounds must have 1 or one-per-task entries");
        return hpm::Vector(v.begin(), v.end());
    };

    hpm::GeneratedModel generated;
    if (cfg.method == "hpm") {
        if (cfg.grid_lo.size() != 1 || cfg.grid_hi.size() != 1)
            throw hpm::invalid_argument("generate: hpm takes a single --grid-lo/--grid-hi");
        generated = hpm::run_hpm(tasks, cfg.target, cfg.landmarks, cfg.grid_lo.front(),
                                 cfg.grid_hi.front(), selection, cfg.hyper_degree, final_family);
    } else if (cfg.method == "hpm2") {
        generated = hpm::run_hpm2(tasks, cfg.target, cfg.landmarks, per_task(cfg.grid_lo),
                                  per_task(cfg.grid_hi), selection, cfg.hyper_degree, final_family);
    } else if (cfg.method == "hm") {
        generated = hpm::run_hm(tasks, cfg.target, cfg.hyper_degree);
    } else {
        throw CLI::ValidationError("--method", "unknown method '" + cfg.method + "'");
    }

    hpm::ModelFile file;
    file.kind = hpm::ModelKind::generated;
    file.payload = generated;
    file.metadata = hpm::default_metadata();
    write_file(cfg.out_path, hpm::serialize(file));

    std::cout << "plausibility_flags";
    if (generated.provenance.plausibility_flags.empty()) {
        std::cout << " none";
    } else {
        for (std::size_t f : generated.provenance.plausibility_flags) std::cout << " " << f;
    }
    std::cout << "\n";
    std::cout << "hyper_r2 " << hpm::format_double(generated.provenance.hyper_r2) << "\n";
    if (!generated.provenance.input_grid_monotone)
        std::cerr << "warning: generated input grid is not monotone\n";
    return 0;
}

struct BenchmarkConfig {
    std::string out_dir;  // flag > HPM_OUTPUT_DIR > "."
    std::string only;     // "", "hm" or "hpm"
    bool no_curves = false;
};

int cmd_benchmark(const BenchmarkConfig& cfg) {
    std::string out_dir = cfg.out_dir;
    if (out_dir.empty()) {
        const char* env = std::getenv("HPM_OUTPUT_DIR");
        out_dir = env && *env ? env : ".";
    }
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    const auto probe = std::filesystem::path(out_dir) / ".hpm_write_probe";
    {
        std::ofstream test(probe);
        if (!test) throw hpm::format_error("output directory not writable: " + out_dir);
    }
    std::filesystem::remove(probe, ec);

    const hpm::ScenarioSpec spec = hpm::ScenarioSpec::standard();
    std::vector<hpm::CurveRecord> curves;
    std::vector<hpm::CurveRecord>* curve_sink = cfg.no_curves ? nullptr : &curves;

    std::vector<hpm::ResultRow> hm_rows;
    std::vector<hpm::ResultRow> hpm_rows;
    if (cfg.only.empty() || cfg.only == "hm") hm_rows = hpm::run_hm_grid(spec, curve_sink);
    if (cfg.only.empty() || cfg.only == "hpm") hpm_rows = hpm::run_hpm_grid(spec, curve_sink);

    const auto out_path = [&](const char* name) {
        return (std::filesystem::path(out_dir) / name).string();
    };
    if (!hm_rows.empty()) {
        write_file(out_path("hm_results.csv"), hpm::results_csv(hm_rows));
        std::cout << "wrote " << out_path("hm_results.csv") << " (" << hm_rows.size() << " rows)\n";
    }
    if (!hpm_rows.empty()) {
        write_file(out_path("hpm_results.csv"), hpm::results_csv(hpm_rows));
        std::cout << "wrote " << out_path("hpm_results.csv") << " (" << hpm_rows.size() << " rows)\n";
    }
    if (curve_sink) {
        write_file(out_path("curves.jsonl"), hpm::curves_jsonl(curves));
        std::cout << "wrote " << out_path("curves.jsonl") << " (" << curves.size() << " records)\n";
    }

    if (!hm_rows.empty() && !hpm_rows.empty()) {
        const std::vector<std::string> violations = hpm::dominance_violations(hm_rows, hpm_rows);
        if (violations.empty()) {
            std::cout << "dominance check: hpm within 5% of hm on all matched settings\n";
        } else {
            std::cout << "dominance check: " << violations.size() << " violation(s)\n";
            for (const std::string& v : violations) std::cout << "  " << v << "\n";
        }
    }
    return 0;
}

int cmd_inspect(const std::string& path) {
    const hpm::ModelFile file = hpm::parse_model_file(read_file(path));
    std::cout << "kind " << hpm::model_kind_tag(file.kind) << "\n";
    std::cout << "format_version " << file.format_version << "\n";
    for (auto it = file.metadata.begin(); it != file.metadata.end(); ++it)
        std::cout << "metadata." << it.key() << " " << it.value().dump() << "\n";

    switch (file.kind) {
        case hpm::ModelKind::regressor: {
            const auto& m = std::get<hpm::RegressorModel>(file.payload);
            std::cout << "family " << hpm::family_tag(m.regressor.family.kind) << "\n";
            if (m.regressor.family.kind == hpm::FamilyKind::polynomial)
                std::cout << "degree " << m.regressor.family.degree << "\n";
            std::cout << "coefficients";
            for (double c : m.regressor.coefficients) std::cout << " " << hpm::format_double(c);
            std::cout << "\n";
            std::cout << "train_mse " << hpm::format_double(m.regressor.train_mse) << "\n";
            std::cout << "converged " << (m.regressor.converged ? "true" : "false") << "\n";
            if (m.condition) {
                std::cout << "condition";
                for (double c : *m.condition) std::cout << " " << hpm::format_double(c);
                std::cout << "\n";
            }
            break;
        }
        case hpm::ModelKind::deformable: {
            const auto& m = std::get<hpm::DeformableModel>(file.payload);
            std::cout << "landmark_dim " << m.landmark_dim() << "\n";
            std::cout << "components " << m.component_count() << "\n";
            std::cout << "eigenvalues";
            for (double v : m.eigenvalues) std::cout << " " << hpm::format_double(v);
            std::cout << "\n";
            std::cout << "total_variance " << hpm::format_double(m.total_variance) << "\n";
            break;
        }
        case hpm::ModelKind::hypermodel: {
            const auto& h = std::get<hpm::HyperModel>(file.payload);
            std::cout << "degree " << h.degree << "\n";
            std::cout << "target_kind " << hpm::target_kind_tag(h.target_kind) << "\n";
            std::cout << "condition_dim " << h.condition_dim << "\n";
            std::cout << "outputs " << h.output_dim() << "\n";
            std::cout << "r2_mean " << hpm::format_double(h.r2_mean) << "\n";
            break;
        }
        case hpm::ModelKind::generated: {
            const auto& g = std::get<hpm::GeneratedModel>(file.payload);
            std::cout << "method " << g.provenance.method << "\n";
            std::cout << "condition";
            for (double c : g.condition) std::cout << " " << hpm::format_double(c);
            std::cout << "\n";
            std::cout << "family " << hpm::family_tag(g.regressor.family.kind) << "\n";
            std::cout << "components_or_degree " << g.provenance.components_or_degree << "\n";
            std::cout << "hyper_degree " << g.provenance.hyper_degree << "\n";
            std::cout << "hyper_r2 " << hpm::format_double(g.provenance.hyper_r2) << "\n";
            std::cout << "plausibility_flags";
            if (g.provenance.plausibility_flags.empty()) std::cout << " none";
            for (std::size_t f : g.provenance.plausibility_flags) std::cout << " " << f;
            std::cout << "\n";
            break;
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hyper-process modeling: generate predictors for unseen tasks"};
    app.set_version_flag("--version", hpm::kToolVersion);
    app.require_subcommand(1);

    FitConfig fit_cfg;
    CLI::App* fit = app.add_subcommand("fit", "fit one curve family to a two-column x,y CSV");
    fit->add_option("--family", fit_cfg.family, "polynomial, exponential or gaussian")
        ->default_val("polynomial");
    fit->add_option("--degree", fit_cfg.degree, "polynomial degree")->default_val(3);
    fit->add_option("--data", fit_cfg.data_path, "input CSV path")->required();
    fit->add_option("--out", fit_cfg.out_path, "output model file")->default_val("model.json");
    fit->add_option("--condition", fit_cfg.condition,
                    "task condition to attach, e.g. --condition 5,10")
        ->delimiter(',');

    GenerateConfig gen_cfg;
    CLI::App* generate =
        app.add_subcommand("generate", "generate a predictor for an unseen condition");
    generate->add_option("--method", gen_cfg.method, "hpm, hpm2 or hm")->default_val("hpm");
    generate->add_option("--target", gen_cfg.target, "target condition, e.g. --target 4,6")
        ->required()
        ->delimiter(',');
    generate->add_option("--sources", gen_cfg.sources, "regressor model files with conditions")
        ->required()
        ->expected(-2);
    generate->add_option("--out", gen_cfg.out_path, "output model file")
        ->default_val("generated.json");
    generate->add_option("--landmarks", gen_cfg.landmarks, "grid points per shape")
        ->default_val(100);
    generate->add_option("--grid-lo", gen_cfg.grid_lo, "grid start (hpm2: per-task list)")
        ->delimiter(',');
    generate->add_option("--grid-hi", gen_cfg.grid_hi, "grid end (hpm2: per-task list)")
        ->delimiter(',');
    auto* comp_opt =
        generate->add_option("--components", gen_cfg.components, "retained deformation modes");
    generate
        ->add_option("--variance-fraction", gen_cfg.variance_fraction,
                     "retain modes reaching this cumulative variance share (default 0.95)")
        ->excludes(comp_opt);
    generate->add_option("--hyper-degree", gen_cfg.hyper_degree, "hyper-model polynomial degree")
        ->default_val(3);
    generate->add_option("--final-family", gen_cfg.final_family, "family fit to the new shape")
        ->default_val("polynomial");
    generate->add_option("--final-degree", gen_cfg.final_degree, "degree for --final-family")
        ->default_val(7);

    BenchmarkConfig bench_cfg;
    CLI::App* benchmark =
        app.add_subcommand("benchmark", "run the beta-distribution scenario (32 table rows)");
    benchmark->add_option("--out-dir", bench_cfg.out_dir,
                          "output directory (default: $HPM_OUTPUT_DIR or .)");
    benchmark->add_option("--only", bench_cfg.only, "restrict to one method: hm or hpm")
        ->check(CLI::IsMember({"hm", "hpm"}));
    benchmark->add_flag("--no-curves", bench_cfg.no_curves, "skip the per-curve JSONL report");

    std::string inspect_path;
    CLI::App* inspect = app.add_subcommand("inspect", "pretty-print any model file");
    inspect->add_option("file", inspect_path, "model file path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (fit->parsed()) return cmd_fit(fit_cfg);
        if (generate->parsed()) return cmd_generate(gen_cfg);
        if (benchmark->parsed()) return cmd_benchmark(bench_cfg);
        if (inspect->parsed()) return cmd_inspect(inspect_path);
        return 2;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const hpm::format_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const hpm::numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const hpm::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
