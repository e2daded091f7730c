#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "hpm/errors.hpp"
#include "hpm/hypermodel.hpp"
#include "hpm/linalg.hpp"
#include "hpm/matrix.hpp"
#include "hpm/regressor.hpp"
#include "hpm/ssm.hpp"

namespace hpm {

/// One already-learned task: its fitted model and its description.
struct SourceTask {
    Regressor regressor;
    Condition condition;
    std::string id;
};

/// Everything needed to rerun a generation bit-identically, plus the
/// advisory plausibility flags.
struct GenerationProvenance {
    std::string method;                  // "hpm", "hpm2" or "hm"
    std::size_t components_or_degree = 0;  // retained modes (hpm/hpm2) or source degree (hm)
    std::size_t hyper_degree = 0;
    double hyper_r2 = 0.0;
    ComponentSelection selection;
    std::size_t landmark_count = 0;      // grid points per task
    Vector grid_lo;                      // per-task grid start (single entry for hpm)
    Vector grid_hi;                      // per-task grid end
    std::vector<std::string> task_ids;
    RegressorFamily new_model_family;
    std::vector<std::size_t> plausibility_flags;
    bool input_grid_monotone = true;     // only hpm2 can clear this
};

/// The output of a pipeline run: a predictor for the unseen condition,
/// the generated shape it was trained on, and full provenance.
struct GeneratedModel {
    Regressor regressor;
    Condition condition;
    Shape shape;  // empty for hm (no shape step); [X', Y'] concatenated for hpm2
    GenerationProvenance provenance;
};

namespace detail {

inline void validate_tasks(const std::vector<SourceTask>& tasks, const Condition& target) {
    if (tasks.size() < 2) throw invalid_argument("pipeline: need at least 2 source tasks");
    const std::size_t cdim = tasks.front().condition.size();
    if (cdim == 0) throw invalid_argument("pipeline: empty task condition");
    for (const SourceTask& t : tasks) {
        if (t.condition.size() != cdim)
            throw invalid_argument("pipeline: condition dimensions must be uniform across tasks");
        require_finite(t.condition, "pipeline");
        if (t.regressor.coefficients.size() != t.regressor.family.coefficient_count())
            throw invalid_argument("pipeline: source regressor has inconsistent coefficients");
    }
    if (target.size() != cdim)
        throw invalid_argument("pipeline: target condition dimension does not match tasks");
    require_finite(target, "pipeline");
}

inline std::vector<Condition> conditions_of(const std::vector<SourceTask>& tasks) {
    std::vector<Condition> cs;
    cs.reserve(tasks.size());
    for (const SourceTask& t : tasks) cs.push_back(t.condition);
    return cs;
}

inline std::vector<std::string> ids_of(const std::vector<SourceTask>& tasks) {
    std::vector<std::string> ids;
    ids.reserve(tasks.size());
    for (const SourceTask& t : tasks) ids.push_back(t.id);
    return ids;
}

}  // namespace detail

/// Hyper-process model generation: sample every source model on a shared
/// grid, build the deformable model over those shapes, learn conditions →
/// deformable parameters, evaluate at the target condition, reconstruct
/// the new shape and fit a fresh regressor to it.
inline GeneratedModel run_hpm(const std::vector<SourceTask>& tasks, const Condition& target,
                              std::size_t n, double grid_lo, double grid_hi,
                              const ComponentSelection& selection, std::size_t hyper_degree,
                              const RegressorFamily& new_model_family) {
    detail::validate_tasks(tasks, target);
    const Vector x = linspace(grid_lo, grid_hi, n);

    std::vector<Shape> shapes;
    shapes.reserve(tasks.size());
    for (const SourceTask& t : tasks) shapes.push_back(predict(t.regressor, x));

    const DeformableModel model = build_deformable_model(shapes, selection);

    Matrix targets(tasks.size(), model.component_count());
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const Vector b = project(model, shapes[i]);
        for (std::size_t j = 0; j < b.size(); ++j) targets(i, j) = b[j];
    }

    const HyperModel hyper = train_hypermodel(detail::conditions_of(tasks), targets, hyper_degree,
                                              TargetKind::deformable_params);
    const Vector b_new = generate_params(hyper, target);

    GeneratedModel out;
    out.shape = reconstruct(model, b_new);
    out.regressor = fit(new_model_family, x, out.shape);
    out.condition = target;
    out.provenance.method = "hpm";
    out.provenance.components_or_degree = model.component_count();
    out.provenance.hyper_degree = hyper_degree;
    out.provenance.hyper_r2 = hyper.r2_mean;
    out.provenance.selection = selection;
    out.provenance.landmark_count = n;
    out.provenance.grid_lo = {grid_lo};
    out.provenance.grid_hi = {grid_hi};
    out.provenance.task_ids = detail::ids_of(tasks);
    out.provenance.new_model_family = new_model_family;
    out.provenance.plausibility_flags = plausibility_check(model, b_new);
    return out;
}

/// Input-space extension: each task samples its own grid, shapes carry
/// the inputs and the outputs stacked together, and after generation the
/// new shape is split back into an input grid and its outputs before the
/// final fit. The generated grid can come out non-monotone for extreme
/// conditions; that is flagged, not fixed.
inline GeneratedModel run_hpm2(const std::vector<SourceTask>& tasks, const Condition& target,
                               std::size_t n, const Vector& grid_lo, const Vector& grid_hi,
                               const ComponentSelection& selection, std::size_t hyper_degree,
                               const RegressorFamily& new_model_family) {
    detail::validate_tasks(tasks, target);
    if (grid_lo.size() != tasks.size() || grid_hi.size() != tasks.size())
        throw invalid_argument("run_hpm2: need one grid range per task");

    std::vector<Shape> shapes;
    shapes.reserve(tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const Vector xi = linspace(grid_lo[i], grid_hi[i], n);
        const Vector yi = predict(tasks[i].regressor, xi);
        Shape s;
        s.reserve(2 * n);
        s.insert(s.end(), xi.begin(), xi.end());
        s.insert(s.end(), yi.begin(), yi.end());
        shapes.push_back(std::move(s));
    }

    const DeformableModel model = build_deformable_model(shapes, selection);

    Matrix targets(tasks.size(), model.component_count());
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const Vector b = project(model, shapes[i]);
        for (std::size_t j = 0; j < b.size(); ++j) targets(i, j) = b[j];
    }

    const HyperModel hyper = train_hypermodel(detail::conditions_of(tasks), targets, hyper_degree,
                                              TargetKind::deformable_params);
    const Vector b_new = generate_params(hyper, target);
    const Shape merged = reconstruct(model, b_new);

    const Vector x_new(merged.begin(), merged.begin() + static_cast<std::ptrdiff_t>(n));
    const Vector y_new(merged.begin() + static_cast<std::ptrdiff_t>(n), merged.end());

    GeneratedModel out;
    out.shape = merged;
    out.regressor = fit(new_model_family, x_new, y_new);
    out.condition = target;
    out.provenance.method = "hpm2";
    out.provenance.components_or_degree = model.component_count();
    out.provenance.hyper_degree = hyper_degree;
    out.provenance.hyper_r2 = hyper.r2_mean;
    out.provenance.selection = selection;
    out.provenance.landmark_count = n;
    out.provenance.grid_lo = grid_lo;
    out.provenance.grid_hi = grid_hi;
    out.provenance.task_ids = detail::ids_of(tasks);
    out.provenance.new_model_family = new_model_family;
    out.provenance.plausibility_flags = plausibility_check(model, b_new);
    out.provenance.input_grid_monotone =
        std::adjacent_find(x_new.begin(), x_new.end(),
                           [](double a, double b) { return b <= a; }) == x_new.end();
    return out;
}

/// Coefficient-space baseline: the hyper-model maps conditions straight
/// to source-model coefficients, so every task must share one polynomial
/// family. No shapes, no deformable model.
inline GeneratedModel run_hm(const std::vector<SourceTask>& tasks, const Condition& target,
                             std::size_t hyper_degree) {
    detail::validate_tasks(tasks, target);
    const RegressorFamily family = tasks.front().regressor.family;
    if (family.kind != FamilyKind::polynomial)
        throw invalid_argument("run_hm: source tasks must be polynomial");
    for (const SourceTask& t : tasks)
        if (!(t.regressor.family == family))
            throw invalid_argument("run_hm: source tasks must share one polynomial degree");

    Matrix targets(tasks.size(), family.coefficient_count());
    for (std::size_t i = 0; i < tasks.size(); ++i)
        for (std::size_t j = 0; j < family.coefficient_count(); ++j)
            targets(i, j) = tasks[i].regressor.coefficients[j];

    const HyperModel hyper = train_hypermodel(detail::conditions_of(tasks), targets, hyper_degree,
                                              TargetKind::model_coefficients);
    Vector lambda_new = generate_params(hyper, target);
    require_finite(lambda_new, "run_hm");

    GeneratedModel out;
    out.regressor.family = family;
    out.regressor.coefficients = std::move(lambda_new);
    out.condition = target;
    out.provenance.method = "hm";
    out.provenance.components_or_degree = family.degree;
    out.provenance.hyper_degree = hyper_degree;
    out.provenance.hyper_r2 = hyper.r2_mean;
    out.provenance.task_ids = detail::ids_of(tasks);
    out.provenance.new_model_family = family;
    return out;
}

}  // namespace hpm
