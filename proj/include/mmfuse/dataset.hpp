#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mmfuse/csv.hpp"
#include "mmfuse/matrix.hpp"

namespace mmfuse {

enum class Task { multiclass, binary };

std::string to_string(Task t);
Task task_from_string(const std::string& s);

// Name of the tabular block inside FeatureBlocks; embedding blocks use their
// manifest names, which may not collide with it.
inline constexpr const char* kTabular = "tabular";

struct DatasetManifest {
  std::filesystem::path tabular_path;
  std::map<std::string, std::filesystem::path> embedding_paths;
  std::string label_column;
  std::string group_column;
  std::string id_column;
  Task task = Task::multiclass;
  // Optional explicit tabular schema (see TabularSchema::to_json).
  std::optional<nlohmann::json> schema;
};

// Reads and validates a manifest. Relative file paths are resolved against
// the manifest's directory. Throws MissingFile / SchemaError.
DatasetManifest load_manifest(const std::filesystem::path& path);
nlohmann::json to_json(const DatasetManifest& m);

enum class ColumnKind { numeric, categorical };

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  // Categorical only: fixed indicator order, deduplicated.
  std::vector<std::string> categories;
  // Categorical only: level encoded as the all-zero block (no indicator column).
  std::optional<std::string> reference;

  std::size_t width() const;
};

struct TabularSchema {
  std::vector<ColumnSchema> columns;

  std::size_t width() const;
  std::vector<std::string> feature_names() const;
  nlohmann::json to_json() const;
  static TabularSchema from_json(const nlohmann::json& j);
};

// Numeric when every non-empty cell parses as a finite number; categories are
// the distinct non-empty values in lexicographic order.
TabularSchema infer_schema(const CsvTable& raw, std::span<const std::string> exclude = {});

// One-hot encodes categorical columns in schema order; numeric columns pass
// through with empty cells as NaN. Unseen categories give an all-zero block.
// Columns listed in `ignore` are skipped; any other column missing from the
// schema raises UnknownColumn.
Matrix encode_tabular(const CsvTable& raw, const TabularSchema& schema, std::span<const std::string> ignore = {});

// Per-modality feature matrices for a set of rows.
struct FeatureBlocks {
  Matrix tabular;
  std::map<std::string, Matrix> embeddings;

  std::size_t rows() const;
  const Matrix& block(const std::string& name) const;
  Matrix& block(const std::string& name);
};

struct MultimodalDataset {
  Matrix tabular;  // n x p, NaN marks missing numeric cells
  TabularSchema schema;
  std::map<std::string, Matrix> embeddings;
  std::vector<int> y;
  std::vector<std::string> groups;
  std::vector<std::string> ids;
  std::vector<std::string> class_names;
  Task task = Task::multiclass;

  std::size_t size() const { return y.size(); }
  int num_classes() const { return static_cast<int>(class_names.size()); }
  std::vector<std::string> embedding_names() const;
  FeatureBlocks blocks(std::span<const std::size_t> rows) const;
  FeatureBlocks all_blocks() const;
  std::vector<int> labels(std::span<const std::size_t> rows) const;
  void validate() const;
};

MultimodalDataset load_dataset(const DatasetManifest& manifest);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;
};

struct FoldSplit {
  std::vector<Fold> folds;
  std::uint64_t seed = 0;
};

// Group-disjoint folds; groups are placed largest first into the fold whose
// per-class counts fall furthest below the global proportions. `valid` is
// left empty and `train` holds the complement of `test`.
FoldSplit grouped_stratified_kfold(std::span<const int> y, std::span<const std::string> groups, int k,
                                   std::uint64_t seed);

// Group-disjoint, stratified carve-out of a validation set from train rows.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_train_valid(
    std::span<const std::size_t> train, std::span<const int> y, std::span<const std::string> groups,
    double fraction, std::uint64_t seed);

// k folds, each with its validation carve-out.
FoldSplit make_folds(const MultimodalDataset& data, int k, double valid_fraction, std::uint64_t seed);

nlohmann::json to_json(const FoldSplit& split);

}  // namespace mmfuse
