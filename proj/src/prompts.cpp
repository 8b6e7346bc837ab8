#include "chemrag/prompts.hpp"

#include "chemrag/errors.hpp"
#include "chemrag/util.hpp"

namespace chemrag {

namespace {

const std::string kOpenBaseline =
    "Answer the question directly.\n"
    "\n"
    "Only give me the answer and do not output any other words.\n"
    "\n"
    "Question: {Instruction}\n"
    "\n"
    "Answer:";

const std::string kMultiChoiceBaseline =
    "Answer the question directly.\n"
    "\n"
    "Only give me the answer and do not output any other words.\n"
    "\n"
    "Question: {Instruction}\n"
    "\n"
    "Choices: {Choices}\n"
    "\n"
    "Make prediction from the given choices.\n"
    "\n"
    "Answer:";

const std::string kNumericBaseline =
    "Answer the question directly.\n"
    "\n"
    "Conclude the answer by stating \"The answer is therefore [ANSWER]\"\n"
    "\n"
    "Only give me the answer and do not output any other words.\n"
    "\n"
    "Question: {Instruction}\n"
    "\n"
    "Answer:";

const std::string kGenerationBaseline =
    "Answer the question directly.\n"
    "\n"
    "Your answer should be surrounded by [ANSWER] and [/ANSWER]. When generating a molecule, "
    "please generate a valid SMILES string.\n"
    "\n"
    "Only give me the answer and do not output any other words.\n"
    "\n"
    "Question: {Instruction}\n"
    "\n"
    "Answer:";

const std::string kOpenRag =
    "Answer the question based on the given document.\n"
    "\n"
    "Only give me the answer and do not output any other words.\n"
    "\n"
    "The following are given documents.\n"
    "\n"
    "{reference}\n"
    "\n"
    "Question: {Instruction}\n"
    "\n"
    "Answer:";

const std::string kMultiChoiceRag =
    "Answer the question based on the given document.\n"
    "\n"
    "Only give me the answer and do not output any other words.\n"
    "\n"
    "The following are given documents.\n"
    "\n"
    "{reference}\n"
    "\n"
    "Question: {Instruction}\n"
    "\n"
    "Choices: {Choices}\n"
    "\n"
    "Make prediction from the given choices.\n"
    "\n"
    "Answer:";

const std::string kNumericRag =
    "Answer the question based on the given document.\n"
    "\n"
    "Conclude the answer by stating \"The answer is therefore [ANSWER]\"\n"
    "\n"
    "Only give me the answer and do not output any other words.\n"
    "\n"
    "The following are given documents.\n"
    "\n"
    "{reference}\n"
    "\n"
    "Question: {Instruction}\n"
    "\n"
    "Answer:";

// The generation template places the instruction line after the documents.
const std::string kGenerationRag =
    "Answer the question based on the given document.\n"
    "\n"
    "Your answer should be surrounded by [ANSWER] and [/ANSWER]. When generating a molecule, "
    "please generate a valid SMILES string.\n"
    "\n"
    "The following are given documents.\n"
    "\n"
    "{reference}\n"
    "\n"
    "Only give me the answer and do not output any other words.\n"
    "\n"
    "Question: {Instruction}\n"
    "\n"
    "Answer:";

void replace_placeholder(std::string& text, const std::string& placeholder,
                         const std::string& value) {
    size_t pos = text.find(placeholder);
    if (pos == std::string::npos)
        throw ConfigError("template lacks placeholder " + placeholder);
    text.replace(pos, placeholder.size(), value);
}

}  // namespace

std::string to_string(PromptKind kind) {
    switch (kind) {
        case PromptKind::open_baseline: return "open_baseline";
        case PromptKind::multi_choice_baseline: return "multi_choice_baseline";
        case PromptKind::numeric_baseline: return "numeric_baseline";
        case PromptKind::generation_baseline: return "generation_baseline";
        case PromptKind::open_rag: return "open_rag";
        case PromptKind::multi_choice_rag: return "multi_choice_rag";
        case PromptKind::numeric_rag: return "numeric_rag";
        case PromptKind::generation_rag: return "generation_rag";
    }
    return "unknown";
}

PromptKind prompt_kind_for(QuestionKind kind, bool rag) {
    switch (kind) {
        case QuestionKind::multi_choice:
            return rag ? PromptKind::multi_choice_rag : PromptKind::multi_choice_baseline;
        case QuestionKind::numeric:
        case QuestionKind::property_numeric:
            return rag ? PromptKind::numeric_rag : PromptKind::numeric_baseline;
        case QuestionKind::open_text:
            return rag ? PromptKind::open_rag : PromptKind::open_baseline;
        case QuestionKind::open_molecule:
            return rag ? PromptKind::generation_rag : PromptKind::generation_baseline;
    }
    throw ConfigError("no template for question kind");
}

bool is_rag(PromptKind kind) {
    switch (kind) {
        case PromptKind::open_rag:
        case PromptKind::multi_choice_rag:
        case PromptKind::numeric_rag:
        case PromptKind::generation_rag: return true;
        default: return false;
    }
}

const std::string& template_text(PromptKind kind) {
    switch (kind) {
        case PromptKind::open_baseline: return kOpenBaseline;
        case PromptKind::multi_choice_baseline: return kMultiChoiceBaseline;
        case PromptKind::numeric_baseline: return kNumericBaseline;
        case PromptKind::generation_baseline: return kGenerationBaseline;
        case PromptKind::open_rag: return kOpenRag;
        case PromptKind::multi_choice_rag: return kMultiChoiceRag;
        case PromptKind::numeric_rag: return kNumericRag;
        case PromptKind::generation_rag: return kGenerationRag;
    }
    throw ConfigError("no template for prompt kind");
}

std::string render_reference(const std::vector<RetrievedSnippet>& passages) {
    std::string out;
    for (size_t i = 0; i < passages.size(); ++i) {
        if (i) out += '\n';
        out += "Document [" + std::to_string(i + 1) + "]";
        if (passages[i].snippet.title) out += " (Title: " + *passages[i].snippet.title + ")";
        out += ' ';
        out += passages[i].snippet.text;
    }
    return out;
}

std::string render_choices(const Question& q) {
    std::string out;
    for (const auto& [label, text] : q.choices) {
        if (!out.empty()) out += ' ';
        out += label + ". " + text;
    }
    return out;
}

std::vector<Message> render_prompt(PromptKind kind, const Question& q,
                                   const std::vector<RetrievedSnippet>& passages) {
    std::string body = template_text(kind);
    if (is_rag(kind)) replace_placeholder(body, "{reference}", render_reference(passages));
    replace_placeholder(body, "{Instruction}", trim(q.text));
    if (kind == PromptKind::multi_choice_baseline || kind == PromptKind::multi_choice_rag)
        replace_placeholder(body, "{Choices}", render_choices(q));
    return {Message{"user", std::move(body)}};
}

}  // namespace chemrag
