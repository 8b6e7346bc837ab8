#include "chemrag/text_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "chemrag/errors.hpp"
#include "chemrag/util.hpp"

namespace chemrag::metrics {

namespace {

constexpr double kEpsilon = 1e-9;

std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& tokens,
                                                     int n) {
    std::map<std::vector<std::string>, int> counts;
    if (static_cast<int>(tokens.size()) < n) return counts;
    for (size_t i = 0; i + n <= tokens.size(); ++i)
        counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)]++;
    return counts;
}

size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (size_t i = 1; i <= a.size(); ++i) {
        for (size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace

double bleu(const std::vector<std::string>& candidate, const std::vector<std::string>& reference,
            int max_n) {
    if (candidate.empty()) return 0.0;
    int effective = std::min<int>(max_n, static_cast<int>(candidate.size()));
    double log_sum = 0.0;
    for (int n = 1; n <= effective; ++n) {
        auto cand = ngram_counts(candidate, n);
        auto ref = ngram_counts(reference, n);
        long long total = 0;
        long long matched = 0;
        for (const auto& [gram, count] : cand) {
            total += count;
            auto it = ref.find(gram);
            if (it != ref.end()) matched += std::min<long long>(count, it->second);
        }
        double precision = matched > 0 ? static_cast<double>(matched) / static_cast<double>(total)
                                       : kEpsilon;
        log_sum += std::log(precision);
    }
    double geo_mean = std::exp(log_sum / effective);
    double c = static_cast<double>(candidate.size());
    double r = static_cast<double>(reference.size());
    double brevity = c >= r ? 1.0 : std::exp(1.0 - r / c);
    return geo_mean * brevity;
}

double rouge_l(const std::vector<std::string>& candidate,
               const std::vector<std::string>& reference) {
    if (candidate.empty() || reference.empty()) return 0.0;
    double lcs = static_cast<double>(lcs_length(candidate, reference));
    if (lcs == 0.0) return 0.0;
    double precision = lcs / static_cast<double>(candidate.size());
    double recall = lcs / static_cast<double>(reference.size());
    return 2.0 * precision * recall / (precision + recall);
}

double levenshtein_sim(std::string_view a, std::string_view b) {
    if (a.empty() && b.empty()) return 1.0;
    std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= b.size(); ++j) {
            size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    double distance = static_cast<double>(prev[b.size()]);
    double longest = static_cast<double>(std::max(a.size(), b.size()));
    return 1.0 - distance / longest;
}

bool numeric_match(double pred, double gold, double rel_tol) {
    if (!std::isfinite(pred) || !std::isfinite(gold))
        throw ValidationError("numeric_match requires finite values");
    if (gold == 0.0) return std::fabs(pred) <= 1e-9;
    return std::fabs(pred - gold) <= rel_tol * std::fabs(gold);
}

bool choice_accuracy(const std::string& pred_label, const std::string& gold_label) {
    if (pred_label == "unparsed") return false;
    return pred_label == gold_label;
}

std::vector<std::string> prose_tokens(std::string_view text) {
    return split_whitespace(to_lower_ascii(text));
}

std::vector<std::string> char_tokens(std::string_view text) {
    std::vector<std::string> out;
    out.reserve(text.size());
    for (char c : text) out.emplace_back(1, c);
    return out;
}

}  // namespace chemrag::metrics
