#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace chemrag {

enum class QuestionKind { multi_choice, numeric, open_text, open_molecule, property_numeric };
enum class DatasetId { mmlu_chem, scibench_chem, chembench4k, mol_instructions };

std::string to_string(QuestionKind kind);
QuestionKind question_kind_from_string(const std::string& name);
std::string to_string(DatasetId id);
DatasetId dataset_id_from_string(const std::string& name);

// Full-benchmark sizes; partial fixtures skip the check via --no-count-check.
size_t expected_dataset_size(DatasetId id);

struct Question {
    std::string id;
    DatasetId dataset = DatasetId::mmlu_chem;
    std::string task;
    QuestionKind kind = QuestionKind::multi_choice;
    std::string text;
    std::vector<std::pair<std::string, std::string>> choices; // ordered label -> text
    std::string gold;

    std::vector<std::string> choice_labels() const;
};

struct LoadOptions {
    bool check_counts = true;
};

// JSONL rows {id, dataset, task, kind, text, choices?, gold}. Schema
// violations report the offending line number; a count mismatch against the
// published dataset sizes is an error unless the check is disabled.
std::vector<Question> load_dataset(const std::filesystem::path& path, DatasetId dataset,
                                   const LoadOptions& options = {});

// Retrieval query: the trimmed question text, never the answer options.
std::string build_query(const Question& q);

}  // namespace chemrag
