#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "hpm/linalg.hpp"
#include "hpm/model_io.hpp"

using hpm::ModelFile;
using hpm::ModelKind;
using hpm::Regressor;
using hpm::RegressorFamily;
using hpm::Vector;

namespace {

ModelFile roundtrip(const ModelFile& f, std::string* first_text = nullptr) {
    const std::string text = hpm::serialize(f);
    const ModelFile back = hpm::parse_model_file(text);
    // Writing the parsed file again must reproduce the bytes exactly.
    CHECK(hpm::serialize(back) == text);
    if (first_text) *first_text = text;
    return back;
}

}  // namespace

TEST_CASE("format_double is exact, canonical and strict") {
    CHECK(hpm::format_double(0.0) == "0");
    CHECK(hpm::format_double(-0.0) == "0");
    CHECK(hpm::format_double(42.0) == "42");
    for (double v : {0.1, 1.0 / 3.0, 1e300, 5e-324, 3.14159265358979323846, -2.5, 1e-17}) {
        const std::string s = hpm::format_double(v);
        char* end = nullptr;
        const double back = std::strtod(s.c_str(), &end);
        CHECK(back == v);
        CHECK(*end == '\0');
    }
    CHECK_THROWS_AS(hpm::format_double(std::numeric_limits<double>::infinity()),
                    hpm::invalid_argument);
    CHECK_THROWS_AS(hpm::format_double(std::nan("")), hpm::invalid_argument);
}

TEST_CASE("regressor files round-trip") {
    ModelFile f;
    f.kind = ModelKind::regressor;
    hpm::RegressorModel payload;
    payload.regressor.family = RegressorFamily::exponential();
    payload.regressor.coefficients = {2.5, -3.25, 0.1};
    payload.regressor.train_mse = 1.25e-9;
    payload.regressor.converged = false;
    payload.condition = Vector{5.0, 10.0};
    f.payload = payload;
    f.metadata["note"] = "hand-written";

    const ModelFile back = roundtrip(f);
    REQUIRE(back.kind == ModelKind::regressor);
    const auto& p = std::get<hpm::RegressorModel>(back.payload);
    CHECK(p.regressor.family == RegressorFamily::exponential());
    CHECK(p.regressor.coefficients == payload.regressor.coefficients);
    CHECK(p.regressor.train_mse == payload.regressor.train_mse);
    CHECK(p.regressor.converged == false);
    REQUIRE(p.condition.has_value());
    CHECK(*p.condition == *payload.condition);

    // Polynomial without a condition.
    hpm::RegressorModel poly;
    poly.regressor.family = RegressorFamily::polynomial(3);
    poly.regressor.coefficients = {1.0, 0.5, -0.25, 1.0 / 3.0};
    poly.regressor.train_mse = 0.0;
    f.payload = poly;
    const ModelFile back2 = roundtrip(f);
    const auto& p2 = std::get<hpm::RegressorModel>(back2.payload);
    CHECK(p2.regressor.family == RegressorFamily::polynomial(3));
    CHECK(p2.regressor.coefficients == poly.regressor.coefficients);
    CHECK_FALSE(p2.condition.has_value());
}

TEST_CASE("deformable model files round-trip") {
    const std::vector<hpm::Shape> shapes = {{0.0, 1.0, 2.0}, {1.0, 1.5, 1.0}, {2.0, 2.5, 3.0},
                                            {0.5, 0.25, 1.75}};
    const hpm::DeformableModel model =
        hpm::build_deformable_model(shapes, hpm::ComponentSelection::count(3));

    ModelFile f;
    f.kind = ModelKind::deformable;
    f.payload = model;
    const ModelFile back = roundtrip(f);
    const auto& m = std::get<hpm::DeformableModel>(back.payload);
    CHECK(m.mean == model.mean);
    CHECK(m.eigenvalues == model.eigenvalues);
    CHECK(m.modes.data() == model.modes.data());
    CHECK(m.modes.rows() == model.modes.rows());
    CHECK(m.total_variance == model.total_variance);
}

TEST_CASE("hyper-model files round-trip") {
    const std::vector<hpm::Condition> conditions = {{1.0, 1.0}, {2.0, 1.0}, {1.0, 2.0}, {2.0, 2.0}};
    hpm::Matrix targets(4, 2);
    for (std::size_t i = 0; i < 4; ++i) {
        targets(i, 0) = conditions[i][0] * 2.0 - conditions[i][1];
        targets(i, 1) = 0.125;
    }
    const hpm::HyperModel h =
        hpm::train_hypermodel(conditions, targets, 1, hpm::TargetKind::model_coefficients);

    ModelFile f;
    f.kind = ModelKind::hypermodel;
    f.payload = h;
    const ModelFile back = roundtrip(f);
    const auto& hb = std::get<hpm::HyperModel>(back.payload);
    CHECK(hb.degree == 1);
    CHECK(hb.target_kind == hpm::TargetKind::model_coefficients);
    CHECK(hb.condition_dim == 2);
    REQUIRE(hb.per_output.size() == 2);
    CHECK(hb.per_output[0] == h.per_output[0]);
    CHECK(hb.per_output[1] == h.per_output[1]);
    CHECK(hb.r2_per_output == h.r2_per_output);
    CHECK(hb.r2_mean == h.r2_mean);
}

TEST_CASE("generated model files round-trip") {
    std::vector<hpm::SourceTask> tasks;
    for (double s : {1.0, 2.0, 3.0}) {
        hpm::SourceTask t;
        t.regressor.family = RegressorFamily::polynomial(1);
        t.regressor.coefficients = {s, 2.0 * s};
        t.condition = {s};
        t.id = "src" + std::to_string(static_cast<int>(s));
        tasks.push_back(t);
    }
    const hpm::GeneratedModel g =
        hpm::run_hpm(tasks, {1.5}, 12, 0.0, 1.0, hpm::ComponentSelection::variance_fraction(0.99),
                     2, RegressorFamily::polynomial(1));

    ModelFile f;
    f.kind = ModelKind::generated;
    f.payload = g;
    const ModelFile back = roundtrip(f);
    const auto& gb = std::get<hpm::GeneratedModel>(back.payload);
    CHECK(gb.regressor.coefficients == g.regressor.coefficients);
    CHECK(gb.condition == g.condition);
    CHECK(gb.shape == g.shape);
    CHECK(gb.provenance.method == g.provenance.method);
    CHECK(gb.provenance.components_or_degree == g.provenance.components_or_degree);
    CHECK(gb.provenance.hyper_degree == g.provenance.hyper_degree);
    CHECK(gb.provenance.hyper_r2 == g.provenance.hyper_r2);
    CHECK(gb.provenance.selection.by_count == g.provenance.selection.by_count);
    CHECK(gb.provenance.selection.fraction_value == g.provenance.selection.fraction_value);
    CHECK(gb.provenance.landmark_count == g.provenance.landmark_count);
    CHECK(gb.provenance.grid_lo == g.provenance.grid_lo);
    CHECK(gb.provenance.grid_hi == g.provenance.grid_hi);
    CHECK(gb.provenance.task_ids == g.provenance.task_ids);
    CHECK(gb.provenance.new_model_family == g.provenance.new_model_family);
    CHECK(gb.provenance.plausibility_flags == g.provenance.plausibility_flags);
    CHECK(gb.provenance.input_grid_monotone == g.provenance.input_grid_monotone);
}

TEST_CASE("metadata survives byte for byte, unknown keys included") {
    ModelFile f;
    f.kind = ModelKind::regressor;
    hpm::RegressorModel payload;
    payload.regressor.family = RegressorFamily::polynomial(0);
    payload.regressor.coefficients = {1.0};
    f.payload = payload;
    f.metadata["created_at"] = "2024-01-01T00:00:00Z";
    f.metadata["labels"] = {"alpha", "beta"};
    f.metadata["nested"] = {{"depth", 2}, {"weights", {0.5, 0.25}}, {"active", true}};
    f.metadata["free text"] = "café ✓";

    std::string text;
    const ModelFile back = roundtrip(f, &text);
    CHECK(back.metadata == f.metadata);
    CHECK(back.metadata["nested"]["weights"][1] == 0.25);
    CHECK(text.find("\"free text\"") != std::string::npos);
}

TEST_CASE("default metadata carries a timestamp and tool version") {
    const hpm::ordered_json m = hpm::default_metadata();
    CHECK(m.at("tool_version") == hpm::kToolVersion);
    const std::string ts = m.at("created_at");
    CHECK(ts.size() == 20);
    CHECK(ts.back() == 'Z');
    CHECK(ts[4] == '-');
    CHECK(ts[10] == 'T');
}

TEST_CASE("parse failures carry format diagnostics") {
    CHECK_THROWS_AS(hpm::parse_model_file("not json at all"), hpm::format_error);
    CHECK_THROWS_AS(hpm::parse_model_file("[1, 2, 3]"), hpm::format_error);
    CHECK_THROWS_AS(hpm::parse_model_file("{}"), hpm::format_error);

    ModelFile f;
    f.kind = ModelKind::regressor;
    hpm::RegressorModel payload;
    payload.regressor.family = RegressorFamily::polynomial(1);
    payload.regressor.coefficients = {1.0, 2.0};
    f.payload = payload;
    const std::string good = hpm::serialize(f);

    std::string wrong_version = good;
    wrong_version.replace(wrong_version.find("\"format_version\": 1"),
                          std::string("\"format_version\": 1").size(), "\"format_version\": 2");
    CHECK_THROWS_AS(hpm::parse_model_file(wrong_version), hpm::format_error);

    std::string wrong_kind = good;
    wrong_kind.replace(wrong_kind.find("\"regressor\""), std::string("\"regressor\"").size(),
                       "\"sculpture\"");
    CHECK_THROWS_AS(hpm::parse_model_file(wrong_kind), hpm::format_error);

    std::string short_coeffs = good;
    short_coeffs.replace(short_coeffs.find("[1, 2]"), std::string("[1, 2]").size(), "[1]");
    CHECK_THROWS_AS(hpm::parse_model_file(short_coeffs), hpm::format_error);

    std::string bad_metadata = good;
    bad_metadata.replace(bad_metadata.find("\"metadata\": {}"),
                         std::string("\"metadata\": {}").size(), "\"metadata\": 3");
    CHECK_THROWS_AS(hpm::parse_model_file(bad_metadata), hpm::format_error);
}

TEST_CASE("kind tags cover every model kind") {
    CHECK(hpm::model_kind_tag(ModelKind::regressor) == "regressor");
    CHECK(hpm::model_kind_tag(ModelKind::deformable) == "deformable");
    CHECK(hpm::model_kind_tag(ModelKind::hypermodel) == "hypermodel");
    CHECK(hpm::model_kind_tag(ModelKind::generated) == "generated");
}
