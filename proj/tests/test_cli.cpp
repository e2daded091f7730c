#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hpm/linalg.hpp"
#include "hpm/model_io.hpp"
#include "hpm/special_functions.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "hpm_cli_XXXXXX").string();
        REQUIRE(mkdtemp(tmpl.data()) != nullptr);
        path = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    fs::path operator/(const std::string& name) const { return path / name; }
};

int run(const std::string& args, const fs::path& stdout_to = {}) {
    std::string cmd = std::string("\"") + HPM_CLI_PATH + "\" " + args;
    if (!stdout_to.empty()) cmd += " > \"" + stdout_to.string() + "\" 2>&1";
    else cmd += " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
    REQUIRE(out.good());
}

// A stored line-family source: y = (2 + s) + (−1 + 0.5·s)·x at condition s.
void write_line_source(const fs::path& p, double s) {
    hpm::ModelFile f;
    f.kind = hpm::ModelKind::regressor;
    hpm::RegressorModel payload;
    payload.regressor.family = hpm::RegressorFamily::polynomial(1);
    payload.regressor.coefficients = {2.0 + s, -1.0 + 0.5 * s};
    payload.condition = hpm::Vector{s};
    f.payload = payload;
    spit(p, hpm::serialize(f));
}

}  // namespace

TEST_CASE("help and version exit cleanly") {
    CHECK(run("--help") == 0);
    CHECK(run("--version") == 0);
    CHECK(run("fit --help") == 0);
}

TEST_CASE("argument errors exit with 2") {
    CHECK(run("") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("fit") == 2);                         // --data is required
    CHECK(run("generate --target 1") == 2);         // --sources is required
    TempDir dir;
    spit(dir / "d.csv", "0,1\n1,2\n");
    CHECK(run("fit --data \"" + (dir / "d.csv").string() + "\" --family martingale") == 2);
}

TEST_CASE("fit writes a loadable model") {
    TempDir dir;
    spit(dir / "line.csv", "x,y\n0,1\n0.25,1.5\n0.5,2\n0.75,2.5\n1,3\n");
    const fs::path out = dir / "model.json";
    const fs::path log = dir / "stdout.txt";
    CHECK(run("fit --family polynomial --degree 1 --data \"" + (dir / "line.csv").string() +
                  "\" --out \"" + out.string() + "\" --condition 5,10",
              log) == 0);
    CHECK(slurp(log).find("train_mse") != std::string::npos);

    const hpm::ModelFile f = hpm::parse_model_file(slurp(out));
    REQUIRE(f.kind == hpm::ModelKind::regressor);
    const auto& m = std::get<hpm::RegressorModel>(f.payload);
    CHECK_THAT(m.regressor.coefficients[0], Catch::Matchers::WithinAbs(1.0, 1e-9));
    CHECK_THAT(m.regressor.coefficients[1], Catch::Matchers::WithinAbs(2.0, 1e-9));
    REQUIRE(m.condition.has_value());
    CHECK(*m.condition == hpm::Vector{5.0, 10.0});
    CHECK(f.metadata.contains("created_at"));
}

TEST_CASE("fit records convergence of a nonlinear family") {
    TempDir dir;
    const hpm::Vector grid = hpm::linspace(0.01, 0.99, 20);
    const hpm::Vector density = hpm::beta_pdf(5.0, 10.0, grid);
    std::ostringstream csv;
    for (std::size_t i = 0; i < grid.size(); ++i)
        csv << hpm::format_double(grid[i]) << "," << hpm::format_double(density[i]) << "\n";
    spit(dir / "bump.csv", csv.str());

    const fs::path out = dir / "bump.json";
    CHECK(run("fit --family gaussian --data \"" + (dir / "bump.csv").string() + "\" --out \"" +
              out.string() + "\"") == 0);
    const hpm::ModelFile f = hpm::parse_model_file(slurp(out));
    CHECK(std::get<hpm::RegressorModel>(f.payload).regressor.converged);
    CHECK(f.metadata.at("converged") == true);
}

TEST_CASE("fit failures use the documented exit codes") {
    TempDir dir;
    CHECK(run("fit --data \"" + (dir / "absent.csv").string() + "\"") == 2);

    spit(dir / "dup.csv", "0,1\n0,2\n1,3\n2,4\n");  // duplicate x
    CHECK(run("fit --degree 1 --data \"" + (dir / "dup.csv").string() + "\" --out \"" +
              (dir / "m.json").string() + "\"") == 3);

    spit(dir / "words.csv", "x,y\nzero,one\n");
    CHECK(run("fit --data \"" + (dir / "words.csv").string() + "\"") == 2);
}

TEST_CASE("generate runs each method from stored sources") {
    TempDir dir;
    for (int i = 1; i <= 3; ++i)
        write_line_source(dir / ("s" + std::to_string(i) + ".json"), static_cast<double>(i));
    const std::string sources = "\"" + (dir / "s1.json").string() + "\" \"" +
                                (dir / "s2.json").string() + "\" \"" + (dir / "s3.json").string() +
                                "\"";

    const fs::path hm_out = dir / "hm.json";
    CHECK(run("generate --method hm --target 2.5 --hyper-degree 1 --sources " + sources +
              " --out \"" + hm_out.string() + "\"") == 0);
    const hpm::ModelFile hm_file = hpm::parse_model_file(slurp(hm_out));
    REQUIRE(hm_file.kind == hpm::ModelKind::generated);
    const auto& hm_model = std::get<hpm::GeneratedModel>(hm_file.payload);
    CHECK(hm_model.provenance.method == "hm");
    CHECK_THAT(hm_model.regressor.coefficients[0], Catch::Matchers::WithinAbs(4.5, 1e-9));
    CHECK_THAT(hm_model.regressor.coefficients[1], Catch::Matchers::WithinAbs(0.25, 1e-9));

    const fs::path hpm_out = dir / "hpm.json";
    const fs::path log = dir / "stdout.txt";
    CHECK(run("generate --method hpm --target 2.5 --hyper-degree 1 --components 1 --landmarks 30"
              " --grid-lo 0 --grid-hi 1 --final-family polynomial --final-degree 1 --sources " +
                  sources + " --out \"" + hpm_out.string() + "\"",
              log) == 0);
    CHECK(slurp(log).find("hyper_r2") != std::string::npos);
    const hpm::ModelFile hpm_file = hpm::parse_model_file(slurp(hpm_out));
    const auto& hpm_model = std::get<hpm::GeneratedModel>(hpm_file.payload);
    CHECK(hpm_model.provenance.method == "hpm");
    CHECK(hpm_model.provenance.landmark_count == 30);
    CHECK(hpm_model.shape.size() == 30);
    CHECK_THAT(hpm_model.regressor.coefficients[0], Catch::Matchers::WithinAbs(4.5, 1e-6));

    const fs::path hpm2_out = dir / "hpm2.json";
    CHECK(run("generate --method hpm2 --target 2.5 --hyper-degree 1 --components 1 --landmarks 20"
              " --grid-lo 0 --grid-hi 1 --final-family polynomial --final-degree 1 --sources " +
                  sources + " --out \"" + hpm2_out.string() + "\"") == 0);
    const auto& hpm2_model =
        std::get<hpm::GeneratedModel>(hpm::parse_model_file(slurp(hpm2_out)).payload);
    CHECK(hpm2_model.provenance.method == "hpm2");
    CHECK(hpm2_model.shape.size() == 40);
    CHECK(hpm2_model.provenance.input_grid_monotone);
}

TEST_CASE("generate rejects unusable inputs with the right codes") {
    TempDir dir;
    write_line_source(dir / "s1.json", 1.0);
    write_line_source(dir / "s2.json", 2.0);

    // A source with a different degree breaks hm's shared-family precondition.
    hpm::ModelFile odd;
    odd.kind = hpm::ModelKind::regressor;
    hpm::RegressorModel payload;
    payload.regressor.family = hpm::RegressorFamily::polynomial(2);
    payload.regressor.coefficients = {1.0, 2.0, 3.0};
    payload.condition = hpm::Vector{3.0};
    odd.payload = payload;
    spit(dir / "odd.json", hpm::serialize(odd));

    const std::string pair = "\"" + (dir / "s1.json").string() + "\" \"" +
                             (dir / "s2.json").string() + "\"";
    CHECK(run("generate --method hm --target 1.5 --sources " + pair + " \"" +
              (dir / "odd.json").string() + "\"") == 4);

    // Only one source: rejected at argument parsing.
    CHECK(run("generate --method hm --target 1.5 --sources \"" + (dir / "s1.json").string() +
              "\"") == 2);

    // Source without a condition.
    hpm::ModelFile bare = odd;
    std::get<hpm::RegressorModel>(bare.payload).condition.reset();
    spit(dir / "bare.json", hpm::serialize(bare));
    CHECK(run("generate --method hm --target 1.5 --sources " + pair + " \"" +
              (dir / "bare.json").string() + "\"") == 4);

    // Grid bound lists must broadcast or match the task count.
    CHECK(run("generate --method hpm2 --target 1.5 --grid-lo 0,0,0 --grid-hi 1 --sources " +
              pair) == 4);

    // Mixed condition dimensions across sources.
    hpm::ModelFile wide = odd;
    std::get<hpm::RegressorModel>(wide.payload).condition = hpm::Vector{3.0, 7.0};
    spit(dir / "wide.json", hpm::serialize(wide));
    CHECK(run("generate --method hm --target 1.5 --sources " + pair + " \"" +
              (dir / "wide.json").string() + "\"") == 4);

    // Unreadable source file.
    CHECK(run("generate --method hm --target 1.5 --sources " + pair + " \"" +
              (dir / "missing.json").string() + "\"") == 2);
}

TEST_CASE("benchmark writes deterministic tables where asked") {
    TempDir a;
    TempDir b;
    const fs::path log = a / "stdout.txt";
    CHECK(run("benchmark --only hm --no-curves --out-dir \"" + a.path.string() + "\"", log) == 0);
    CHECK(slurp(log).find("hm_results.csv") != std::string::npos);
    REQUIRE(fs::exists(a / "hm_results.csv"));
    CHECK_FALSE(fs::exists(a / "hpm_results.csv"));
    CHECK_FALSE(fs::exists(a / "curves.jsonl"));

    const std::string csv = slurp(a / "hm_results.csv");
    CHECK(csv.rfind("method,param1,param2,mean_mse,std_mse,hyper_r2\n", 0) == 0);

    CHECK(run("benchmark --only hm --no-curves --out-dir \"" + b.path.string() + "\"") == 0);
    CHECK(slurp(b / "hm_results.csv") == csv);
}

TEST_CASE("benchmark restricted to hpm writes only its table") {
    TempDir dir;
    CHECK(run("benchmark --only hpm --no-curves --out-dir \"" + dir.path.string() + "\"") == 0);
    CHECK(fs::exists(dir / "hpm_results.csv"));
    CHECK_FALSE(fs::exists(dir / "hm_results.csv"));
    const std::string csv = slurp(dir / "hpm_results.csv");
    std::size_t lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == 17);  // header plus 16 rows
}

TEST_CASE("benchmark fails fast on an unusable output directory") {
    TempDir dir;
    spit(dir / "occupied", "not a directory\n");
    CHECK(run("benchmark --only hm --no-curves --out-dir \"" + (dir / "occupied").string() +
              "\"") == 2);
}

TEST_CASE("benchmark honors the output directory environment variable") {
    TempDir dir;
    REQUIRE(setenv("HPM_OUTPUT_DIR", dir.path.c_str(), 1) == 0);
    const int code = run("benchmark --only hm --no-curves");
    unsetenv("HPM_OUTPUT_DIR");
    CHECK(code == 0);
    CHECK(fs::exists(dir / "hm_results.csv"));
}

TEST_CASE("full benchmark emits both tables, curves and the dominance check") {
    TempDir dir;
    const fs::path log = dir / "stdout.txt";
    CHECK(run("benchmark --out-dir \"" + dir.path.string() + "\"", log) == 0);
    CHECK(fs::exists(dir / "hm_results.csv"));
    CHECK(fs::exists(dir / "hpm_results.csv"));
    CHECK(fs::exists(dir / "curves.jsonl"));
    const std::string out = slurp(log);
    CHECK(out.find("dominance check: hpm within 5% of hm on all matched settings") !=
          std::string::npos);

    std::size_t lines = 0;
    for (char c : slurp(dir / "curves.jsonl"))
        if (c == '\n') ++lines;
    CHECK(lines == 512);  // 16 settings × 16 conditions × 2 methods
}

TEST_CASE("inspect prints a human summary") {
    TempDir dir;
    write_line_source(dir / "s.json", 2.0);
    const fs::path log = dir / "stdout.txt";
    CHECK(run("inspect \"" + (dir / "s.json").string() + "\"", log) == 0);
    const std::string out = slurp(log);
    CHECK(out.find("kind regressor") != std::string::npos);
    CHECK(out.find("family polynomial") != std::string::npos);
    CHECK(out.find("condition 2") != std::string::npos);

    spit(dir / "broken.json", "{\"format_version\": 1, \"kind\": \"regressor\"");
    CHECK(run("inspect \"" + (dir / "broken.json").string() + "\"") == 2);
    CHECK(run("inspect \"" + (dir / "missing.json").string() + "\"") == 2);
}
