#include "chemrag/question.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "chemrag/errors.hpp"
#include "chemrag/util.hpp"

namespace chemrag {

namespace {
using ordered_json = nlohmann::ordered_json;
}

std::string to_string(QuestionKind kind) {
    switch (kind) {
        case QuestionKind::multi_choice: return "multi_choice";
        case QuestionKind::numeric: return "numeric";
        case QuestionKind::open_text: return "open_text";
        case QuestionKind::open_molecule: return "open_molecule";
        case QuestionKind::property_numeric: return "property_numeric";
    }
    throw ValidationError("unknown question kind");
}

QuestionKind question_kind_from_string(const std::string& name) {
    for (QuestionKind kind : {QuestionKind::multi_choice, QuestionKind::numeric,
                              QuestionKind::open_text, QuestionKind::open_molecule,
                              QuestionKind::property_numeric})
        if (to_string(kind) == name) return kind;
    throw ValidationError("unknown question kind: " + name);
}

std::string to_string(DatasetId id) {
    switch (id) {
        case DatasetId::mmlu_chem: return "mmlu_chem";
        case DatasetId::scibench_chem: return "scibench_chem";
        case DatasetId::chembench4k: return "chembench4k";
        case DatasetId::mol_instructions: return "mol_instructions";
    }
    throw ValidationError("unknown dataset id");
}

DatasetId dataset_id_from_string(const std::string& name) {
    for (DatasetId id : {DatasetId::mmlu_chem, DatasetId::scibench_chem, DatasetId::chembench4k,
                         DatasetId::mol_instructions})
        if (to_string(id) == name) return id;
    throw ValidationError("unknown dataset id: " + name);
}

size_t expected_dataset_size(DatasetId id) {
    switch (id) {
        case DatasetId::mmlu_chem: return 303;
        case DatasetId::scibench_chem: return 229;
        case DatasetId::chembench4k: return 800;
        case DatasetId::mol_instructions: return 600;
    }
    throw ValidationError("unknown dataset id");
}

std::vector<std::string> Question::choice_labels() const {
    std::vector<std::string> labels;
    labels.reserve(choices.size());
    for (const auto& [label, text] : choices) labels.push_back(label);
    return labels;
}

namespace {

Question question_from_json(const ordered_json& row, DatasetId dataset) {
    Question q;
    q.id = row.at("id").get<std::string>();
    q.dataset = dataset;
    if (row.contains("dataset") &&
        dataset_id_from_string(row["dataset"].get<std::string>()) != dataset)
        throw ValidationError("row dataset disagrees with the file's dataset id");
    q.task = row.at("task").get<std::string>();
    q.kind = question_kind_from_string(row.at("kind").get<std::string>());
    q.text = row.at("text").get<std::string>();
    if (row.contains("choices")) {
        const auto& choices = row["choices"];
        if (choices.is_object()) {
            for (auto it = choices.begin(); it != choices.end(); ++it)
                q.choices.emplace_back(it.key(), it.value().get<std::string>());
        } else if (choices.is_array()) {
            for (const auto& entry : choices)
                q.choices.emplace_back(entry.at("label").get<std::string>(),
                                       entry.at("text").get<std::string>());
        } else {
            throw ValidationError("choices must be an object or an array");
        }
    }
    q.gold = row.at("gold").get<std::string>();

    if (q.kind == QuestionKind::multi_choice) {
        if (q.choices.empty()) throw ValidationError("multi_choice question without choices");
        bool gold_is_label = false;
        for (const auto& [label, text] : q.choices)
            if (label == q.gold) gold_is_label = true;
        if (!gold_is_label) throw ValidationError("gold '" + q.gold + "' is not a choice label");
    }
    if (q.kind == QuestionKind::numeric || q.kind == QuestionKind::property_numeric) {
        try {
            size_t pos = 0;
            std::stod(q.gold, &pos);
            if (pos != q.gold.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
            throw ValidationError("numeric gold does not parse as a real: '" + q.gold + "'");
        }
    }
    return q;
}

}  // namespace

std::vector<Question> load_dataset(const std::filesystem::path& path, DatasetId dataset,
                                   const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) throw NotFoundError("dataset file not found: " + path.string());
    std::vector<Question> questions;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            questions.push_back(question_from_json(ordered_json::parse(line), dataset));
        } catch (const std::exception& e) {
            throw ValidationError(path.string() + " line " + std::to_string(line_no) + ": " +
                                  e.what());
        }
    }
    if (options.check_counts && questions.size() != expected_dataset_size(dataset))
        throw ValidationError(to_string(dataset) + " has " + std::to_string(questions.size()) +
                              " questions, expected " +
                              std::to_string(expected_dataset_size(dataset)) +
                              " (pass --no-count-check for fixtures)");
    return questions;
}

std::string build_query(const Question& q) { return trim(q.text); }

}  // namespace chemrag
