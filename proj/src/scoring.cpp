#include "bowg/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bowg {

double word_score(const bow_vector& v1, const bow_vector& v2) {
    if (v1.empty() || v2.empty()) return 0.0;
    double score = 0.0;
    auto it1 = v1.begin();
    auto it2 = v2.begin();
    while (it1 != v1.end() && it2 != v2.end()) {
        if (it1->first < it2->first) {
            ++it1;
        } else if (it2->first < it1->first) {
            ++it2;
        } else {
            score += std::min(it1->second, it2->second);
            ++it1;
            ++it2;
        }
    }
    return score;
}

double word_group_score(const word_group_vector& g1, const word_group_vector& g2) {
    double p = 0.0;
    auto it1 = g1.begin();
    auto it2 = g2.begin();
    while (it1 != g1.end() && it2 != g2.end()) {
        if (it1->first < it2->first) {
            ++it1;
        } else if (it2->first < it1->first) {
            ++it2;
        } else {
            p += it1->second.refined * it2->second.refined;
            ++it1;
            ++it2;
        }
    }
    if (p > 1.0) return 1.0;
    return 1.0 - std::sqrt(1.0 - p);
}

double normalize_score(double raw, double self) { return raw / self; }

double combine(double eta_w, double eta_g, std::optional<double> eta_d, const scoring_config& config) {
    if (eta_d) {
        return config.lambda1 * eta_w + config.lambda2 * eta_g +
               (1.0 - config.lambda1 - config.lambda2) * *eta_d;
    }
    return config.lambda1 * eta_w + (1.0 - config.lambda1) * eta_g;
}

double previous_weight(double eta_now, double eta_prev, const scoring_config& config) {
    const double r = (eta_now - eta_prev) / config.alpha_temporal;
    return config.w_max / (1.0 + r * r);
}

double temporal_fuse(double eta_now, std::optional<double> eta_prev, const scoring_config& config) {
    const double prev = eta_prev.value_or(0.0);
    const double w = previous_weight(eta_now, prev, config);
    return w * prev + (1.0 - w) * eta_now;
}

double distribution_score(const distribution_vector& a, const distribution_vector& b,
                          bool literal_max) {
    if (a.m() != b.m())
        throw std::invalid_argument("distribution vectors have different batch counts");
    if (a.is_zero() || b.is_zero()) return 0.0;

    const unsigned m = a.m();
    double d_min = std::numeric_limits<double>::infinity();
    double d_max = 0.0;
    for (unsigned shift = 0; shift < m; ++shift) {
        double d2 = 0.0;
        for (unsigned k = 0; k < m; ++k) {
            const double diff = a.batches[(k + shift) % m] - b.batches[k];
            d2 += diff * diff;
        }
        const double d = std::sqrt(d2);
        d_min = std::min(d_min, d);
        d_max = std::max(d_max, d);
    }
    if (literal_max) return d_max;
    return 1.0 - d_min / std::numbers::sqrt2;
}

candidate_score score_query(frame_id_t candidate, const raw_scores& raw, const raw_scores& self,
                            const score_cache& cache, const scoring_config& config) {
    candidate_score out;
    out.frame_id = candidate;
    out.eta_w = normalize_score(raw.word, self.word);
    out.eta_g = normalize_score(raw.group, std::max(self.group, config.min_self_score));

    std::optional<double> eta_d;
    if (config.use_distribution) {
        eta_d = normalize_score(raw.dist, std::max(self.dist, config.min_self_score));
        out.eta_d = *eta_d;
    }

    const double eta_now = combine(out.eta_w, out.eta_g, eta_d, config);
    const std::optional<double> eta_prev =
        candidate > 0 ? cache.lookup(candidate - 1) : std::nullopt;
    out.eta_sim = temporal_fuse(eta_now, eta_prev, config);
    return out;
}

}  // namespace bowg
