#pragma once

#include <optional>
#include <string>
#include <vector>

namespace crowdal {

enum class Metric;

// fraction correct, or F1 of the positive class (= class 1).
// F1 is 0 whenever precision + recall is 0 (no true positives).
double quality(Metric metric, const std::vector<int>& predictions, const std::vector<int>& gold);

// x*crowd + (1-x)*model
double overall_quality(double crowd_fraction, double crowd_quality, double model_quality);

struct CurvePoint {
    double questions = 0.0;
    double quality = 0.0;
};

struct LearningCurve {
    std::vector<CurvePoint> points;  // strictly increasing in questions
    std::string metric_tag;

    // merges duplicate x by averaging, sorts by x
    static LearningCurve from_points(std::vector<CurvePoint> pts, std::string tag = "");
};

// trapezoidal area normalized by the x-range, so a constant curve at q has
// AUC exactly q
double auc(const LearningCurve& curve);

// same, integrated against ln(x); points at x < 1 are shifted to x = 1
double auclog(const LearningCurve& curve);

// Average ratio x_b(q)/x_a(q) over a 100-point uniform quality grid spanning
// the intersection of the two curves' (envelope) quality ranges; > 1 means
// curve_a reaches the same quality with fewer questions. First crossings are
// taken on the running-maximum envelope; x values are clamped to >= 1
// question before forming ratios. nullopt when the ranges are disjoint.
std::optional<double> questions_saved(const LearningCurve& curve_a, const LearningCurve& curve_b);

struct ComparisonReport {
    std::string method;
    std::string baseline;
    double auc_ratio = 0.0;
    double auclog_ratio = 0.0;
    std::optional<double> questions_saved;
};

ComparisonReport compare_curves(const std::string& method_name, const LearningCurve& method,
                                const std::string& baseline_name, const LearningCurve& baseline);

}  // namespace crowdal
