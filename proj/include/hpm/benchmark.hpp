#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hpm/errors.hpp"
#include "hpm/format.hpp"
#include "hpm/linalg.hpp"
#include "hpm/pipeline.hpp"
#include "hpm/regressor.hpp"
#include "hpm/special_functions.hpp"

namespace hpm {

/// The beta-distribution scenario: 25 training conditions on the grid
/// {0.5, 1, 5, 10, 15}², 16 test conditions on {4, 6, 8, 12}², source
/// models trained on 20 grid points, everything evaluated against the
/// true density at 100 points. The 100-point grid doubles as the
/// landmark grid for shape sampling.
struct ScenarioSpec {
    std::vector<Condition> train_params;
    std::vector<Condition> test_params;
    Vector train_grid;
    Vector eval_grid;
    std::size_t landmarks = 100;
    double grid_lo = 0.01;
    double grid_hi = 0.99;

    static ScenarioSpec standard() {
        ScenarioSpec s;
        const double train_values[] = {0.5, 1.0, 5.0, 10.0, 15.0};
        for (double a : train_values)
            for (double b : train_values) s.train_params.push_back({a, b});
        const double test_values[] = {4.0, 6.0, 8.0, 12.0};
        for (double a : test_values)
            for (double b : test_values) s.test_params.push_back({a, b});
        s.train_grid = linspace(s.grid_lo, s.grid_hi, 20);
        s.eval_grid = linspace(s.grid_lo, s.grid_hi, 100);
        return s;
    }
};

/// One table row: a (param1, param2) setting aggregated over the 16 test
/// curves. param1 is the source polynomial degree for hm and the retained
/// component count for hpm; param2 is the hyper-model degree.
struct ResultRow {
    std::string method;
    std::size_t param1 = 0;
    std::size_t param2 = 0;
    double mean_mse = 0.0;
    double std_mse = 0.0;
    double hyper_r2 = 0.0;
};

/// The data behind one generated curve: prediction, ground truth, error.
struct CurveRecord {
    std::string method;
    std::size_t param1 = 0;
    std::size_t param2 = 0;
    Condition condition;
    Vector predicted;
    Vector ground_truth;
    double mse = 0.0;
};

/// Which family models which training curve. Both parameters above 1
/// give the bump shapes, both at or below 1 give the flat/diverging
/// shapes left to a high-degree polynomial, and the mixed cases are the
/// monotone ones handled by the exponential.
inline RegressorFamily assign_family(double alpha, double beta) {
    if (!(alpha > 0.0) || !(beta > 0.0))
        throw invalid_argument("assign_family: parameters must be positive");
    if (alpha > 1.0 && beta > 1.0) return RegressorFamily::gaussian();
    if ((alpha < 1.0 && beta < 1.0) || (alpha == 1.0 && beta == 1.0))
        return RegressorFamily::polynomial(7);
    return RegressorFamily::exponential();
}

/// Mean of squared pointwise differences.
inline double mse(const Vector& a, const Vector& b) {
    if (a.size() != b.size() || a.empty()) throw invalid_argument("mse: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

namespace detail {

inline const std::size_t kSettingValues[] = {3, 4, 5, 6};

inline std::vector<SourceTask> fit_sources(const ScenarioSpec& spec,
                                           const RegressorFamily* fixed_family) {
    std::vector<SourceTask> tasks;
    tasks.reserve(spec.train_params.size());
    for (const Condition& c : spec.train_params) {
        const RegressorFamily family =
            fixed_family ? *fixed_family : assign_family(c[0], c[1]);
        SourceTask t;
        t.regressor = fit(family, spec.train_grid, beta_pdf(c[0], c[1], spec.train_grid));
        t.condition = c;
        t.id = "beta_" + format_double(c[0]) + "_" + format_double(c[1]);
        tasks.push_back(std::move(t));
    }
    return tasks;
}

inline ResultRow aggregate_row(const std::string& method, std::size_t param1, std::size_t param2,
                               const std::vector<double>& mses, double hyper_r2) {
    ResultRow row;
    row.method = method;
    row.param1 = param1;
    row.param2 = param2;
    row.hyper_r2 = hyper_r2;
    double mean = 0.0;
    for (double m : mses) mean += m;
    mean /= static_cast<double>(mses.size());
    double var = 0.0;
    for (double m : mses) var += (m - mean) * (m - mean);
    var /= static_cast<double>(mses.size());  // population std, divisor N
    row.mean_mse = mean;
    row.std_mse = std::sqrt(var);
    return row;
}

}  // namespace detail

/// The 16-row HM table: source degrees {3,4,5,6} crossed with hyper
/// degrees {3,4,5,6}, hyper degree varying slowest. Optionally collects
/// the per-curve records behind each row.
inline std::vector<ResultRow> run_hm_grid(const ScenarioSpec& spec,
                                          std::vector<CurveRecord>* curves = nullptr) {
    std::vector<ResultRow> rows;
    for (std::size_t hyper_degree : detail::kSettingValues) {
        for (std::size_t model_degree : detail::kSettingValues) {
            const RegressorFamily family = RegressorFamily::polynomial(model_degree);
            const std::vector<SourceTask> tasks = detail::fit_sources(spec, &family);
            std::vector<double> mses;
            double hyper_r2 = 0.0;
            for (const Condition& c : spec.test_params) {
                const GeneratedModel g = run_hm(tasks, c, hyper_degree);
                const Vector predicted = predict(g.regressor, spec.eval_grid);
                const Vector truth = beta_pdf(c[0], c[1], spec.eval_grid);
                const double err = mse(predicted, truth);
                mses.push_back(err);
                hyper_r2 = g.provenance.hyper_r2;
                if (curves)
                    curves->push_back({"hm", model_degree, hyper_degree, c, predicted, truth, err});
            }
            rows.push_back(detail::aggregate_row("hm", model_degree, hyper_degree, mses, hyper_r2));
        }
    }
    return rows;
}

/// The 16-row HPM table: component counts {3,4,5,6} crossed with hyper
/// degrees {3,4,5,6}. Sources are fitted once with assign_family; shapes
/// are sampled at the 100-point landmark grid inside run_hpm. The final
/// per-condition regressor is Polynomial(7) for parity with the most
/// flexible source family.
inline std::vector<ResultRow> run_hpm_grid(const ScenarioSpec& spec,
                                           std::vector<CurveRecord>* curves = nullptr) {
    const std::vector<SourceTask> tasks = detail::fit_sources(spec, nullptr);
    std::vector<ResultRow> rows;
    for (std::size_t hyper_degree : detail::kSettingValues) {
        for (std::size_t components : detail::kSettingValues) {
            std::vector<double> mses;
            double hyper_r2 = 0.0;
            for (const Condition& c : spec.test_params) {
                const GeneratedModel g =
                    run_hpm(tasks, c, spec.landmarks, spec.grid_lo, spec.grid_hi,
                            ComponentSelection::count(components), hyper_degree,
                            RegressorFamily::polynomial(7));
                const Vector predicted = predict(g.regressor, spec.eval_grid);
                const Vector truth = beta_pdf(c[0], c[1], spec.eval_grid);
                const double err = mse(predicted, truth);
                mses.push_back(err);
                hyper_r2 = g.provenance.hyper_r2;
                if (curves)
                    curves->push_back({"hpm", components, hyper_degree, c, predicted, truth, err});
            }
            rows.push_back(detail::aggregate_row("hpm", components, hyper_degree, mses, hyper_r2));
        }
    }
    return rows;
}

/// Rebuilds the curve behind one table cell for one test condition.
inline CurveRecord curve_report(const ScenarioSpec& spec, const std::string& method,
                                std::size_t param1, std::size_t param2, const Condition& target) {
    const auto in_grid = [](std::size_t v) {
        for (std::size_t s : detail::kSettingValues)
            if (v == s) return true;
        return false;
    };
    if ((method != "hm" && method != "hpm") || !in_grid(param1) || !in_grid(param2))
        throw invalid_argument("curve_report: setting outside the benchmark grid");
    if (target.size() != 2) throw invalid_argument("curve_report: condition must be (alpha, beta)");

    CurveRecord rec;
    rec.method = method;
    rec.param1 = param1;
    rec.param2 = param2;
    rec.condition = target;
    if (method == "hm") {
        const RegressorFamily family = RegressorFamily::polynomial(param1);
        const std::vector<SourceTask> tasks = detail::fit_sources(spec, &family);
        rec.predicted = predict(run_hm(tasks, target, param2).regressor, spec.eval_grid);
    } else {
        const std::vector<SourceTask> tasks = detail::fit_sources(spec, nullptr);
        const GeneratedModel g =
            run_hpm(tasks, target, spec.landmarks, spec.grid_lo, spec.grid_hi,
                    ComponentSelection::count(param1), param2, RegressorFamily::polynomial(7));
        rec.predicted = predict(g.regressor, spec.eval_grid);
    }
    rec.ground_truth = beta_pdf(target[0], target[1], spec.eval_grid);
    rec.mse = mse(rec.predicted, rec.ground_truth);
    return rec;
}

/// CSV table, one line per row, fixed column order, full-precision numbers.
inline std::string results_csv(const std::vector<ResultRow>& rows) {
    std::string out = "method,param1,param2,mean_mse,std_mse,hyper_r2\n";
    for (const ResultRow& r : rows) {
        out += r.method;
        out += ',';
        out += std::to_string(r.param1);
        out += ',';
        out += std::to_string(r.param2);
        out += ',';
        out += format_double(r.mean_mse);
        out += ',';
        out += format_double(r.std_mse);
        out += ',';
        out += format_double(r.hyper_r2);
        out += '\n';
    }
    return out;
}

/// JSON lines, one record per line, arrays inline.
inline std::string curves_jsonl(const std::vector<CurveRecord>& records) {
    const auto array_of = [](const Vector& v) {
        std::string s = "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ", ";
            s += format_double(v[i]);
        }
        s += "]";
        return s;
    };
    std::string out;
    for (const CurveRecord& r : records) {
        out += "{\"method\": \"" + r.method + "\"";
        out += ", \"param1\": " + std::to_string(r.param1);
        out += ", \"param2\": " + std::to_string(r.param2);
        out += ", \"condition\": " + array_of(r.condition);
        out += ", \"mse\": " + format_double(r.mse);
        out += ", \"predicted\": " + array_of(r.predicted);
        out += ", \"ground_truth\": " + array_of(r.ground_truth);
        out += "}\n";
    }
    return out;
}

/// Matched-setting comparison: for each (param1, param2) cell, hpm should
/// not exceed hm by more than 5% relative. Returns one message per
/// violation; empty means the dominance property held everywhere.
inline std::vector<std::string> dominance_violations(const std::vector<ResultRow>& hm_rows,
                                                     const std::vector<ResultRow>& hpm_rows) {
    std::vector<std::string> out;
    for (const ResultRow& hm_row : hm_rows) {
        for (const ResultRow& hpm_row : hpm_rows) {
            if (hm_row.param1 != hpm_row.param1 || hm_row.param2 != hpm_row.param2) continue;
            if (hpm_row.mean_mse > hm_row.mean_mse * 1.05) {
                out.push_back("setting (" + std::to_string(hm_row.param1) + ", " +
                              std::to_string(hm_row.param2) + "): hpm mean mse " +
                              format_double(hpm_row.mean_mse) + " exceeds hm " +
                              format_double(hm_row.mean_mse) + " by more than 5%");
            }
        }
    }
    return out;
}

}  // namespace hpm
