#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "arete/error.hpp"

namespace arete {

// Soft-margin RBF SVM in its dual form. alphas store alpha_i * y_i so the
// decision function is a plain weighted kernel sum.
struct SvmModel {
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> alphas;  // signed: alpha_i * y_i
    double bias = 0;
    double gamma = 1;
    double c = 1;
};

struct SvmParams {
    double c = 1.0;
    double gamma = 0;  // 0 = use 1 / n_features
    double tolerance = 1e-3;
    int max_passes = 10000;
    std::uint32_t rng_seed = 0;
};

namespace detail {

inline double rbf_kernel(const std::vector<double>& a,
                         const std::vector<double>& b, double gamma) {
    double sum = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return std::exp(-gamma * sum);
}

} // namespace detail

inline double svm_decision(const SvmModel& model, const std::vector<double>& x) {
    if (!model.support_vectors.empty() &&
        model.support_vectors.front().size() != x.size())
        throw Error(ErrorCode::dimension_mismatch,
                    "input vector length does not match the trained model");
    double sum = model.bias;
    for (std::size_t i = 0; i < model.support_vectors.size(); ++i)
        sum += model.alphas[i] *
               detail::rbf_kernel(model.support_vectors[i], x, model.gamma);
    return sum;
}

// Simplified SMO (pairwise coordinate ascent on the dual): sweep all alphas,
// pair each KKT violator with a seeded-random partner, and stop after a full
// sweep changes nothing or the pass cap is hit. Deterministic for a fixed
// seed and input order.
inline SvmModel train_svm(const std::vector<std::vector<double>>& presence,
                          const std::vector<std::vector<double>>& pseudo_absence,
                          const SvmParams& params = {}) {
    if (presence.size() < 2 || pseudo_absence.size() < 2)
        throw Error(ErrorCode::degenerate_classes,
                    "each class needs at least 2 points (got " +
                        std::to_string(presence.size()) + " presence, " +
                        std::to_string(pseudo_absence.size()) + " absence)");
    const std::size_t dim = presence.front().size();
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    for (const auto& v : presence) {
        x.push_back(v);
        y.push_back(1.0);
    }
    for (const auto& v : pseudo_absence) {
        x.push_back(v);
        y.push_back(-1.0);
    }
    for (const auto& v : x)
        if (v.size() != dim)
            throw Error(ErrorCode::dimension_mismatch,
                        "training vectors have mixed lengths");
    if (dim == 0)
        throw Error(ErrorCode::dimension_mismatch, "zero-length feature vectors");

    const std::size_t n = x.size();
    const double c = params.c;
    const double gamma = params.gamma > 0 ? params.gamma : 1.0 / static_cast<double>(dim);
    const double tol = params.tolerance;

    // precomputed kernel matrix; training sets here are small (hundreds)
    std::vector<std::vector<double>> k(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            k[i][j] = k[j][i] = detail::rbf_kernel(x[i], x[j], gamma);

    std::vector<double> alpha(n, 0.0);
    double b = 0;
    std::mt19937 rng(params.rng_seed);

    auto f = [&](std::size_t i) {
        double sum = b;
        for (std::size_t j = 0; j < n; ++j)
            if (alpha[j] > 0) sum += alpha[j] * y[j] * k[i][j];
        return sum;
    };

    for (int pass = 0; pass < params.max_passes; ++pass) {
        int changed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ei = f(i) - y[i];
            if (!((y[i] * ei < -tol && alpha[i] < c) ||
                  (y[i] * ei > tol && alpha[i] > 0)))
                continue;
            std::uniform_int_distribution<std::size_t> pick(0, n - 2);
            std::size_t j = pick(rng);
            if (j >= i) ++j;
            const double ej = f(j) - y[j];
            const double ai_old = alpha[i], aj_old = alpha[j];
            double lo, hi;
            if (y[i] != y[j]) {
                lo = std::max(0.0, aj_old - ai_old);
                hi = std::min(c, c + aj_old - ai_old);
            } else {
                lo = std::max(0.0, ai_old + aj_old - c);
                hi = std::min(c, ai_old + aj_old);
            }
            if (lo >= hi) continue;
            const double eta = 2 * k[i][j] - k[i][i] - k[j][j];
            if (eta >= 0) continue;
            double aj = aj_old - y[j] * (ei - ej) / eta;
            aj = std::min(hi, std::max(lo, aj));
            if (std::abs(aj - aj_old) < 1e-5) continue;
            const double ai = ai_old + y[i] * y[j] * (aj_old - aj);
            alpha[i] = ai;
            alpha[j] = aj;
            const double b1 = b - ei - y[i] * (ai - ai_old) * k[i][i] -
                              y[j] * (aj - aj_old) * k[i][j];
            const double b2 = b - ej - y[i] * (ai - ai_old) * k[i][j] -
                              y[j] * (aj - aj_old) * k[j][j];
            if (ai > 0 && ai < c)
                b = b1;
            else if (aj > 0 && aj < c)
                b = b2;
            else
                b = (b1 + b2) / 2;
            ++changed;
        }
        if (changed == 0) break;
    }

    SvmModel model;
    model.gamma = gamma;
    model.c = c;
    model.bias = b;
    for (std::size_t i = 0; i < n; ++i)
        if (alpha[i] > 1e-12) {
            model.support_vectors.push_back(x[i]);
            model.alphas.push_back(alpha[i] * y[i]);
        }
    return model;
}

} // namespace arete
