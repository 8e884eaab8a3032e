#include "crowdal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "crowdal/classifier.hpp"

namespace crowdal {

double quality(Metric metric, const std::vector<int>& predictions, const std::vector<int>& gold) {
    if (predictions.empty() || predictions.size() != gold.size())
        throw std::runtime_error("quality: predictions and gold must be non-empty and aligned");

    if (metric == Metric::Accuracy) {
        std::size_t correct = 0;
        for (std::size_t i = 0; i < gold.size(); ++i) correct += predictions[i] == gold[i];
        return static_cast<double>(correct) / static_cast<double>(gold.size());
    }

    int tp = 0;
    int fp = 0;
    int fn = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (predictions[i] == 1 && gold[i] == 1) ++tp;
        if (predictions[i] == 1 && gold[i] == 0) ++fp;
        if (predictions[i] == 0 && gold[i] == 1) ++fn;
    }
    if (tp == 0) return 0.0;  // zero rule: P+R == 0 or no positive predictions
    double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return 2.0 * precision * recall / (precision + recall);
}

double overall_quality(double crowd_fraction, double crowd_quality, double model_quality) {
    if (crowd_fraction < 0.0 || crowd_fraction > 1.0)
        throw std::runtime_error("overall_quality: crowd fraction must be in [0,1]");
    return crowd_fraction * crowd_quality + (1.0 - crowd_fraction) * model_quality;
}

LearningCurve LearningCurve::from_points(std::vector<CurvePoint> pts, std::string tag) {
    std::map<double, std::pair<double, int>> grouped;
    for (const auto& p : pts) {
        auto& [sum, count] = grouped[p.questions];
        sum += p.quality;
        ++count;
    }
    LearningCurve curve;
    curve.metric_tag = std::move(tag);
    for (const auto& [x, sc] : grouped)
        curve.points.push_back({x, sc.first / static_cast<double>(sc.second)});
    return curve;
}

namespace {

void require_curve(const LearningCurve& curve) {
    if (curve.points.size() < 2)
        throw std::runtime_error("curve metrics need at least 2 points");
    for (std::size_t i = 1; i < curve.points.size(); ++i)
        if (curve.points[i].questions <= curve.points[i - 1].questions)
            throw std::runtime_error("curve x values must be strictly increasing");
    for (const auto& p : curve.points)
        if (!std::isfinite(p.quality)) throw std::runtime_error("curve quality must be finite");
}

// nondecreasing running-maximum envelope; raw curves jitter
std::vector<CurvePoint> envelope(const LearningCurve& curve) {
    std::vector<CurvePoint> env = curve.points;
    for (std::size_t i = 1; i < env.size(); ++i)
        env[i].quality = std::max(env[i].quality, env[i - 1].quality);
    return env;
}

// first x at which the envelope reaches quality q (linear interpolation)
double first_crossing(const std::vector<CurvePoint>& env, double q) {
    if (env.front().quality >= q) return env.front().questions;
    for (std::size_t i = 1; i < env.size(); ++i) {
        if (env[i].quality >= q) {
            double q0 = env[i - 1].quality;
            double q1 = env[i].quality;
            if (q1 == q0) return env[i].questions;
            double t = (q - q0) / (q1 - q0);
            return env[i - 1].questions + t * (env[i].questions - env[i - 1].questions);
        }
    }
    return env.back().questions;  // unreachable for q within the envelope range
}

}  // namespace

double auc(const LearningCurve& curve) {
    require_curve(curve);
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        double dx = curve.points[i].questions - curve.points[i - 1].questions;
        area += 0.5 * (curve.points[i].quality + curve.points[i - 1].quality) * dx;
    }
    return area / (curve.points.back().questions - curve.points.front().questions);
}

double auclog(const LearningCurve& curve) {
    require_curve(curve);
    std::vector<CurvePoint> pts = curve.points;
    for (auto& p : pts) p.questions = std::max(p.questions, 1.0);
    double area = 0.0;
    double range = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        double dlx = std::log(pts[i].questions) - std::log(pts[i - 1].questions);
        area += 0.5 * (pts[i].quality + pts[i - 1].quality) * dlx;
        range += dlx;
    }
    if (range <= 0.0) throw std::runtime_error("auclog: degenerate x range after the x>=1 shift");
    return area / range;
}

std::optional<double> questions_saved(const LearningCurve& curve_a,
                                      const LearningCurve& curve_b) {
    require_curve(curve_a);
    require_curve(curve_b);
    auto env_a = envelope(curve_a);
    auto env_b = envelope(curve_b);

    double lo = std::max(env_a.front().quality, env_b.front().quality);
    double hi = std::min(env_a.back().quality, env_b.back().quality);
    if (lo > hi) return std::nullopt;

    const int grid = 100;
    double total = 0.0;
    for (int i = 0; i < grid; ++i) {
        double q = grid == 1 ? lo
                             : lo + (hi - lo) * static_cast<double>(i) /
                                        static_cast<double>(grid - 1);
        double xa = std::max(first_crossing(env_a, q), 1.0);
        double xb = std::max(first_crossing(env_b, q), 1.0);
        total += xb / xa;
    }
    return total / static_cast<double>(grid);
}

ComparisonReport compare_curves(const std::string& method_name, const LearningCurve& method,
                                const std::string& baseline_name, const LearningCurve& baseline) {
    ComparisonReport report;
    report.method = method_name;
    report.baseline = baseline_name;
    report.auc_ratio = auc(method) / auc(baseline);
    report.auclog_ratio = auclog(method) / auclog(baseline);
    report.questions_saved = questions_saved(method, baseline);
    return report;
}

}  // namespace crowdal
