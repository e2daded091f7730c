#pragma once

#include <cstddef>
#include <cstdio>
#include <ctime>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hpm/errors.hpp"
#include "hpm/format.hpp"
#include "hpm/hypermodel.hpp"
#include "hpm/matrix.hpp"
#include "hpm/pipeline.hpp"
#include "hpm/regressor.hpp"
#include "hpm/ssm.hpp"

namespace hpm {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kFormatVersion = 1;

enum class ModelKind { regressor, deformable, hypermodel, generated };

inline std::string model_kind_tag(ModelKind kind) {
    switch (kind) {
        case ModelKind::regressor: return "regressor";
        case ModelKind::deformable: return "deformable";
        case ModelKind::hypermodel: return "hypermodel";
        case ModelKind::generated: return "generated";
    }
    throw invalid_argument("model_kind_tag: unknown kind");
}

/// A stored regressor, optionally tagged with the condition of the task
/// it was trained on so it can serve as a pipeline source.
struct RegressorModel {
    Regressor regressor;
    std::optional<Condition> condition;
};

/// One on-disk artifact. Metadata is free-form and survives read/write
/// cycles byte for byte.
struct ModelFile {
    int format_version = kFormatVersion;
    ModelKind kind = ModelKind::regressor;
    std::variant<RegressorModel, DeformableModel, HyperModel, GeneratedModel> payload;
    ordered_json metadata = ordered_json::object();
};

inline std::string timestamp_utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

inline ordered_json default_metadata() {
    ordered_json m = ordered_json::object();
    m["created_at"] = timestamp_utc_now();
    m["tool_version"] = kToolVersion;
    return m;
}

namespace detail {

// ---- emitting ----

inline bool array_is_flat(const ordered_json& j) {
    for (const auto& el : j)
        if (el.is_structured()) return false;
    return true;
}

inline void dump_value(const ordered_json& j, std::string& out, std::size_t indent) {
    const std::string pad(indent, ' ');
    const std::string pad_in(indent + 2, ' ');
    switch (j.type()) {
        case ordered_json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad_in + ordered_json(it.key()).dump() + ": ";
                dump_value(it.value(), out, indent + 2);
            }
            out += "\n" + pad + "}";
            return;
        }
        case ordered_json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            if (array_is_flat(j)) {
                out += "[";
                bool first = true;
                for (const auto& el : j) {
                    if (!first) out += ", ";
                    first = false;
                    dump_value(el, out, indent);
                }
                out += "]";
                return;
            }
            out += "[\n";
            bool first = true;
            for (const auto& el : j) {
                if (!first) out += ",\n";
                first = false;
                out += pad_in;
                dump_value(el, out, indent + 2);
            }
            out += "\n" + pad + "]";
            return;
        }
        case ordered_json::value_t::number_float:
            out += format_double(j.get<double>());
            return;
        default:
            // strings, bools, integers, null: nlohmann's compact form is
            // already canonical for these
            out += j.dump();
            return;
    }
}

// ---- field access with format diagnostics ----

inline const ordered_json& require_key(const ordered_json& obj, const char* key) {
    if (!obj.is_object()) throw format_error("model file: expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) throw format_error(std::string("model file: missing key '") + key + "'");
    return *it;
}

inline double as_number(const ordered_json& j, const char* what) {
    if (!j.is_number()) throw format_error(std::string("model file: '") + what + "' must be a number");
    return j.get<double>();
}

inline std::size_t as_count(const ordered_json& j, const char* what) {
    if (!j.is_number_integer() && !j.is_number_unsigned())
        throw format_error(std::string("model file: '") + what + "' must be a non-negative integer");
    const auto v = j.get<long long>();
    if (v < 0) throw format_error(std::string("model file: '") + what + "' must be a non-negative integer");
    return static_cast<std::size_t>(v);
}

inline std::string as_string(const ordered_json& j, const char* what) {
    if (!j.is_string()) throw format_error(std::string("model file: '") + what + "' must be a string");
    return j.get<std::string>();
}

inline bool as_bool(const ordered_json& j, const char* what) {
    if (!j.is_boolean()) throw format_error(std::string("model file: '") + what + "' must be a boolean");
    return j.get<bool>();
}

inline Vector as_vector(const ordered_json& j, const char* what) {
    if (!j.is_array()) throw format_error(std::string("model file: '") + what + "' must be an array");
    Vector v;
    v.reserve(j.size());
    for (const auto& el : j) v.push_back(as_number(el, what));
    return v;
}

inline ordered_json to_array(const Vector& v) {
    ordered_json a = ordered_json::array();
    for (double x : v) a.push_back(x);
    return a;
}

// ---- per-kind payload encoding ----

inline ordered_json regressor_to_json(const Regressor& r) {
    ordered_json p = ordered_json::object();
    p["family"] = family_tag(r.family.kind);
    if (r.family.kind == FamilyKind::polynomial) p["degree"] = r.family.degree;
    p["coefficients"] = to_array(r.coefficients);
    p["train_mse"] = r.train_mse;
    p["converged"] = r.converged;
    return p;
}

inline Regressor regressor_from_json(const ordered_json& p) {
    Regressor r;
    const std::string tag = as_string(require_key(p, "family"), "family");
    if (tag == "polynomial")
        r.family = RegressorFamily::polynomial(as_count(require_key(p, "degree"), "degree"));
    else if (tag == "exponential")
        r.family = RegressorFamily::exponential();
    else if (tag == "gaussian")
        r.family = RegressorFamily::gaussian();
    else
        throw format_error("model file: unknown family '" + tag + "'");
    r.coefficients = as_vector(require_key(p, "coefficients"), "coefficients");
    if (r.coefficients.size() != r.family.coefficient_count())
        throw format_error("model file: coefficient count does not match family");
    r.train_mse = as_number(require_key(p, "train_mse"), "train_mse");
    r.converged = as_bool(require_key(p, "converged"), "converged");
    return r;
}

inline ordered_json payload_to_json(const RegressorModel& m) {
    ordered_json p = regressor_to_json(m.regressor);
    if (m.condition) p["condition"] = to_array(*m.condition);
    return p;
}

inline RegressorModel regressor_model_from_json(const ordered_json& p) {
    RegressorModel m;
    m.regressor = regressor_from_json(p);
    if (p.contains("condition")) m.condition = as_vector(p.at("condition"), "condition");
    return m;
}

inline ordered_json payload_to_json(const DeformableModel& m) {
    ordered_json p = ordered_json::object();
    p["landmark_dim"] = m.landmark_dim();
    p["components"] = m.component_count();
    p["mean"] = to_array(m.mean);
    p["eigenvalues"] = to_array(m.eigenvalues);
    ordered_json modes = ordered_json::array();
    for (std::size_t k = 0; k < m.component_count(); ++k)
        for (std::size_t i = 0; i < m.landmark_dim(); ++i) modes.push_back(m.modes(i, k));
    p["modes_colmajor"] = std::move(modes);
    p["total_variance"] = m.total_variance;
    return p;
}

inline DeformableModel deformable_from_json(const ordered_json& p) {
    DeformableModel m;
    const std::size_t dim = as_count(require_key(p, "landmark_dim"), "landmark_dim");
    const std::size_t comps = as_count(require_key(p, "components"), "components");
    m.mean = as_vector(require_key(p, "mean"), "mean");
    m.eigenvalues = as_vector(require_key(p, "eigenvalues"), "eigenvalues");
    const Vector flat = as_vector(require_key(p, "modes_colmajor"), "modes_colmajor");
    if (m.mean.size() != dim || m.eigenvalues.size() != comps || flat.size() != dim * comps)
        throw format_error("model file: deformable payload dimensions are inconsistent");
    m.modes = Matrix(dim, comps);
    for (std::size_t k = 0; k < comps; ++k)
        for (std::size_t i = 0; i < dim; ++i) m.modes(i, k) = flat[k * dim + i];
    m.total_variance = as_number(require_key(p, "total_variance"), "total_variance");
    return m;
}

inline ordered_json payload_to_json(const HyperModel& h) {
    ordered_json p = ordered_json::object();
    p["degree"] = h.degree;
    p["target_kind"] = target_kind_tag(h.target_kind);
    p["feature_map"] = kFeatureMapTag;
    p["condition_dim"] = h.condition_dim;
    ordered_json per_output = ordered_json::array();
    for (const Vector& c : h.per_output) per_output.push_back(to_array(c));
    p["per_output"] = std::move(per_output);
    p["r2_per_output"] = to_array(h.r2_per_output);
    p["r2_mean"] = h.r2_mean;
    return p;
}

inline HyperModel hypermodel_from_json(const ordered_json& p) {
    HyperModel h;
    h.degree = as_count(require_key(p, "degree"), "degree");
    const std::string kind = as_string(require_key(p, "target_kind"), "target_kind");
    if (kind == "deformable-params")
        h.target_kind = TargetKind::deformable_params;
    else if (kind == "model-coefficients")
        h.target_kind = TargetKind::model_coefficients;
    else
        throw format_error("model file: unknown target_kind '" + kind + "'");
    if (as_string(require_key(p, "feature_map"), "feature_map") != kFeatureMapTag)
        throw format_error("model file: unknown feature_map");
    h.condition_dim = as_count(require_key(p, "condition_dim"), "condition_dim");
    const ordered_json& per_output = require_key(p, "per_output");
    if (!per_output.is_array()) throw format_error("model file: 'per_output' must be an array");
    const std::size_t n_features = expanded_feature_count(h.condition_dim, h.degree);
    for (const auto& c : per_output) {
        Vector coef = as_vector(c, "per_output");
        if (coef.size() != n_features)
            throw format_error("model file: per_output coefficient length does not match degree");
        h.per_output.push_back(std::move(coef));
    }
    h.r2_per_output = as_vector(require_key(p, "r2_per_output"), "r2_per_output");
    if (h.r2_per_output.size() != h.per_output.size())
        throw format_error("model file: r2_per_output length does not match per_output");
    h.r2_mean = as_number(require_key(p, "r2_mean"), "r2_mean");
    return h;
}

inline ordered_json payload_to_json(const GeneratedModel& g) {
    ordered_json p = ordered_json::object();
    p["regressor"] = regressor_to_json(g.regressor);
    p["condition"] = to_array(g.condition);
    p["shape"] = to_array(g.shape);
    ordered_json prov = ordered_json::object();
    prov["method"] = g.provenance.method;
    prov["components_or_degree"] = g.provenance.components_or_degree;
    prov["hyper_degree"] = g.provenance.hyper_degree;
    prov["hyper_r2"] = g.provenance.hyper_r2;
    prov["selection_by"] = g.provenance.selection.by_count ? "count" : "fraction";
    prov["selection_value"] = g.provenance.selection.by_count
                                  ? ordered_json(g.provenance.selection.count_value)
                                  : ordered_json(g.provenance.selection.fraction_value);
    prov["landmark_count"] = g.provenance.landmark_count;
    prov["grid_lo"] = to_array(g.provenance.grid_lo);
    prov["grid_hi"] = to_array(g.provenance.grid_hi);
    prov["task_ids"] = g.provenance.task_ids;
    prov["new_model_family"] = family_tag(g.provenance.new_model_family.kind);
    prov["new_model_degree"] = g.provenance.new_model_family.degree;
    ordered_json flags = ordered_json::array();
    for (std::size_t f : g.provenance.plausibility_flags) flags.push_back(f);
    prov["plausibility_flags"] = std::move(flags);
    prov["input_grid_monotone"] = g.provenance.input_grid_monotone;
    p["provenance"] = std::move(prov);
    return p;
}

inline GeneratedModel generated_from_json(const ordered_json& p) {
    GeneratedModel g;
    g.regressor = regressor_from_json(require_key(p, "regressor"));
    g.condition = as_vector(require_key(p, "condition"), "condition");
    g.shape = as_vector(require_key(p, "shape"), "shape");
    const ordered_json& prov = require_key(p, "provenance");
    g.provenance.method = as_string(require_key(prov, "method"), "method");
    g.provenance.components_or_degree =
        as_count(require_key(prov, "components_or_degree"), "components_or_degree");
    g.provenance.hyper_degree = as_count(require_key(prov, "hyper_degree"), "hyper_degree");
    g.provenance.hyper_r2 = as_number(require_key(prov, "hyper_r2"), "hyper_r2");
    const std::string sel_by = as_string(require_key(prov, "selection_by"), "selection_by");
    if (sel_by == "count") {
        g.provenance.selection =
            ComponentSelection::count(as_count(require_key(prov, "selection_value"), "selection_value"));
    } else if (sel_by == "fraction") {
        g.provenance.selection = ComponentSelection::variance_fraction(
            as_number(require_key(prov, "selection_value"), "selection_value"));
    } else {
        throw format_error("model file: unknown selection_by '" + sel_by + "'");
    }
    g.provenance.landmark_count = as_count(require_key(prov, "landmark_count"), "landmark_count");
    g.provenance.grid_lo = as_vector(require_key(prov, "grid_lo"), "grid_lo");
    g.provenance.grid_hi = as_vector(require_key(prov, "grid_hi"), "grid_hi");
    const ordered_json& ids = require_key(prov, "task_ids");
    if (!ids.is_array()) throw format_error("model file: 'task_ids' must be an array");
    for (const auto& id : ids) g.provenance.task_ids.push_back(as_string(id, "task_ids"));
    const std::string fam = as_string(require_key(prov, "new_model_family"), "new_model_family");
    const std::size_t fam_degree = as_count(require_key(prov, "new_model_degree"), "new_model_degree");
    if (fam == "polynomial")
        g.provenance.new_model_family = RegressorFamily::polynomial(fam_degree);
    else if (fam == "exponential")
        g.provenance.new_model_family = RegressorFamily::exponential();
    else if (fam == "gaussian")
        g.provenance.new_model_family = RegressorFamily::gaussian();
    else
        throw format_error("model file: unknown family '" + fam + "'");
    const ordered_json& flags = require_key(prov, "plausibility_flags");
    if (!flags.is_array()) throw format_error("model file: 'plausibility_flags' must be an array");
    for (const auto& f : flags)
        g.provenance.plausibility_flags.push_back(as_count(f, "plausibility_flags"));
    g.provenance.input_grid_monotone =
        as_bool(require_key(prov, "input_grid_monotone"), "input_grid_monotone");
    return g;
}

}  // namespace detail

/// Render a ModelFile as deterministic JSON text: fixed key order,
/// full-precision numbers, scalar arrays inline, trailing newline.
inline std::string serialize(const ModelFile& f) {
    ordered_json doc = ordered_json::object();
    doc["format_version"] = f.format_version;
    doc["kind"] = model_kind_tag(f.kind);
    std::visit([&](const auto& payload) { doc["payload"] = detail::payload_to_json(payload); },
               f.payload);
    doc["metadata"] = f.metadata.is_null() ? ordered_json::object() : f.metadata;
    std::string out;
    detail::dump_value(doc, out, 0);
    out += "\n";
    return out;
}

/// Parse text produced by serialize (or compatible by-hand files).
/// Anything structurally wrong raises format_error.
inline ModelFile parse_model_file(const std::string& text) {
    const ordered_json doc = ordered_json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw format_error("model file: malformed JSON");
    if (!doc.is_object()) throw format_error("model file: expected a top-level object");

    ModelFile f;
    const ordered_json& version = detail::require_key(doc, "format_version");
    if (!version.is_number_integer() && !version.is_number_unsigned())
        throw format_error("model file: 'format_version' must be an integer");
    if (version.get<long long>() != kFormatVersion)
        throw format_error("model file: unknown format_version " + version.dump());
    f.format_version = kFormatVersion;

    const std::string kind = detail::as_string(detail::require_key(doc, "kind"), "kind");
    const ordered_json& payload = detail::require_key(doc, "payload");
    if (kind == "regressor") {
        f.kind = ModelKind::regressor;
        f.payload = detail::regressor_model_from_json(payload);
    } else if (kind == "deformable") {
        f.kind = ModelKind::deformable;
        f.payload = detail::deformable_from_json(payload);
    } else if (kind == "hypermodel") {
        f.kind = ModelKind::hypermodel;
        f.payload = detail::hypermodel_from_json(payload);
    } else if (kind == "generated") {
        f.kind = ModelKind::generated;
        f.payload = detail::generated_from_json(payload);
    } else {
        throw format_error("model file: unknown kind '" + kind + "'");
    }

    const ordered_json& metadata = detail::require_key(doc, "metadata");
    if (!metadata.is_object()) throw format_error("model file: 'metadata' must be an object");
    f.metadata = metadata;
    return f;
}

}  // namespace hpm
