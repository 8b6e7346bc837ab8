#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace chemrag::metrics {

// Sentence-level BLEU with additive-epsilon smoothing: modified n-gram
// precisions for n = 1..max_n, zero match counts replaced by 1e-9, orders the
// candidate is too short to produce are dropped from the geometric mean.
// Empty candidate scores 0.
double bleu(const std::vector<std::string>& candidate, const std::vector<std::string>& reference,
            int max_n = 4);

// ROUGE-L F1 (beta = 1) over tokens; 0 when either side is empty.
double rouge_l(const std::vector<std::string>& candidate,
               const std::vector<std::string>& reference);

// 1 - edit_distance(a, b) / max(|a|, |b|); 1.0 when both empty.
double levenshtein_sim(std::string_view a, std::string_view b);

// True iff |pred - gold| <= rel_tol * |gold|; absolute 1e-9 fallback at
// gold = 0. Throws chemrag::ValidationError on non-finite input.
bool numeric_match(double pred, double gold, double rel_tol = 0.05);

// Label equality; the "unparsed" sentinel never matches.
bool choice_accuracy(const std::string& pred_label, const std::string& gold_label);

// Prose tokenization for text metrics: lowercase then whitespace split.
std::vector<std::string> prose_tokens(std::string_view text);

// Character-level tokens for SMILES-valued fields.
std::vector<std::string> char_tokens(std::string_view text);

}  // namespace chemrag::metrics
