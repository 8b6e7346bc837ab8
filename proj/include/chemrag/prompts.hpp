#pragma once

#include <string>
#include <vector>

#include "chemrag/gateway.hpp"
#include "chemrag/question.hpp"
#include "chemrag/retriever.hpp"

namespace chemrag {

// One kind per appendix template: {open-ended, multi-choice, numerical,
// generation} x {baseline, rag}.
enum class PromptKind {
    open_baseline,
    multi_choice_baseline,
    numeric_baseline,
    generation_baseline,
    open_rag,
    multi_choice_rag,
    numeric_rag,
    generation_rag,
};

std::string to_string(PromptKind kind);
PromptKind prompt_kind_for(QuestionKind kind, bool rag);
bool is_rag(PromptKind kind);

// The template verbatim, with {reference} / {Instruction} / {Choices}
// placeholders still in place.
const std::string& template_text(PromptKind kind);

// Retrieved passages as numbered blocks, rank 1 first:
// "Document [1] (Title: ...) text".
std::string render_reference(const std::vector<RetrievedSnippet>& passages);

// Inline "A. ... B. ..." rendering of the ordered choice list.
std::string render_choices(const Question& q);

// Fills the template for this question; the result is a single user message
// and never contains demonstrations.
std::vector<Message> render_prompt(PromptKind kind, const Question& q,
                                   const std::vector<RetrievedSnippet>& passages);

}  // namespace chemrag
