#include "mmfuse/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include "mmfuse/errors.hpp"
#include "mmfuse/rng.hpp"

namespace mmfuse {

namespace fs = std::filesystem;

std::string to_string(Task t) { return t == Task::binary ? "binary" : "multiclass"; }

Task task_from_string(const std::string& s) {
  if (s == "binary") return Task::binary;
  if (s == "multiclass") return Task::multiclass;
  throw SchemaError("task must be 'binary' or 'multiclass', got '" + s + "'");
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

const nlohmann::json& require(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw SchemaError(std::string("manifest is missing required key '") + key + "'");
  return j.at(key);
}

std::string require_string(const nlohmann::json& j, const char* key) {
  const auto& v = require(j, key);
  if (!v.is_string()) throw SchemaError(std::string("manifest key '") + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile(path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw SchemaError("manifest must be a JSON object");

  const fs::path base = path.parent_path();
  DatasetManifest m;
  m.tabular_path = resolve(base, require_string(j, "tabular_path"));
  m.label_column = require_string(j, "label_column");
  m.group_column = require_string(j, "group_column");
  m.id_column = require_string(j, "id_column");
  m.task = task_from_string(require_string(j, "task"));
  const auto& emb = require(j, "embedding_paths");
  if (!emb.is_object()) throw SchemaError("embedding_paths must be an object");
  for (auto it = emb.begin(); it != emb.end(); ++it) {
    if (it.key() == kTabular) throw SchemaError("embedding name 'tabular' is reserved");
    m.embedding_paths[it.key()] = resolve(base, it.value().get<std::string>());
  }
  if (j.contains("schema")) m.schema = j.at("schema");

  if (!fs::exists(m.tabular_path)) throw MissingFile(m.tabular_path.string());
  for (const auto& [name, p] : m.embedding_paths)
    if (!fs::exists(p)) throw MissingFile(p.string() + " (embedding '" + name + "')");
  return m;
}

nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json emb = nlohmann::json::object();
  for (const auto& [name, p] : m.embedding_paths) emb[name] = p.generic_string();
  nlohmann::json j = {{"tabular_path", m.tabular_path.generic_string()},
                      {"embedding_paths", emb},
                      {"label_column", m.label_column},
                      {"group_column", m.group_column},
                      {"id_column", m.id_column},
                      {"task", to_string(m.task)}};
  if (m.schema) j["schema"] = *m.schema;
  return j;
}

// ---------------------------------------------------------------------------
// Tabular schema and encoding

namespace {

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool contains(std::span<const std::string> v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

std::size_t ColumnSchema::width() const {
  if (kind == ColumnKind::numeric) return 1;
  std::size_t w = categories.size();
  if (reference && std::find(categories.begin(), categories.end(), *reference) != categories.end()) --w;
  return w;
}

std::size_t TabularSchema::width() const {
  std::size_t w = 0;
  for (const auto& c : columns) w += c.width();
  return w;
}

std::vector<std::string> TabularSchema::feature_names() const {
  std::vector<std::string> names;
  for (const auto& c : columns) {
    if (c.kind == ColumnKind::numeric) {
      names.push_back(c.name);
      continue;
    }
    for (const auto& cat : c.categories)
      if (!c.reference || cat != *c.reference) names.push_back(c.name + "=" + cat);
  }
  return names;
}

nlohmann::json TabularSchema::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : columns) {
    nlohmann::json jc = {{"name", c.name}, {"kind", c.kind == ColumnKind::numeric ? "numeric" : "categorical"}};
    if (c.kind == ColumnKind::categorical) jc["categories"] = c.categories;
    if (c.reference) jc["reference"] = *c.reference;
    cols.push_back(std::move(jc));
  }
  return {{"columns", cols}};
}

TabularSchema TabularSchema::from_json(const nlohmann::json& j) {
  TabularSchema s;
  if (!j.contains("columns") || !j.at("columns").is_array()) throw SchemaError("schema needs a 'columns' array");
  std::set<std::string> seen;
  for (const auto& jc : j.at("columns")) {
    ColumnSchema c;
    c.name = jc.at("name").get<std::string>();
    if (!seen.insert(c.name).second) throw SchemaError("duplicate schema column '" + c.name + "'");
    const auto kind = jc.at("kind").get<std::string>();
    if (kind == "numeric") {
      c.kind = ColumnKind::numeric;
    } else if (kind == "categorical") {
      c.kind = ColumnKind::categorical;
      for (const auto& cat : jc.at("categories").get<std::vector<std::string>>())
        if (std::find(c.categories.begin(), c.categories.end(), cat) == c.categories.end())
          c.categories.push_back(cat);
      if (jc.contains("reference")) c.reference = jc.at("reference").get<std::string>();
    } else {
      throw SchemaError("unknown column kind '" + kind + "'");
    }
    s.columns.push_back(std::move(c));
  }
  return s;
}

TabularSchema infer_schema(const CsvTable& raw, std::span<const std::string> exclude) {
  TabularSchema s;
  for (std::size_t c = 0; c < raw.header.size(); ++c) {
    if (contains(exclude, raw.header[c])) continue;
    ColumnSchema col;
    col.name = raw.header[c];
    bool numeric = true;
    std::set<std::string> levels;
    for (const auto& row : raw.rows) {
      const auto& cell = row[c];
      if (cell.empty()) continue;
      levels.insert(cell);
      if (numeric && !parse_number(cell)) numeric = false;
    }
    if (numeric) {
      col.kind = ColumnKind::numeric;
    } else {
      col.kind = ColumnKind::categorical;
      col.categories.assign(levels.begin(), levels.end());
    }
    s.columns.push_back(std::move(col));
  }
  return s;
}

Matrix encode_tabular(const CsvTable& raw, const TabularSchema& schema, std::span<const std::string> ignore) {
  std::vector<std::size_t> source(schema.columns.size());
  for (const auto& h : raw.header) {
    if (contains(ignore, h)) continue;
    const bool known = std::any_of(schema.columns.begin(), schema.columns.end(),
                                   [&](const ColumnSchema& c) { return c.name == h; });
    if (!known) throw UnknownColumn("column '" + h + "' is not in the schema");
  }
  for (std::size_t i = 0; i < schema.columns.size(); ++i) {
    auto idx = raw.column(schema.columns[i].name);
    if (!idx) throw SchemaError("schema column '" + schema.columns[i].name + "' missing from table");
    source[i] = *idx;
  }

  Matrix out(raw.rows.size(), schema.width());
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    std::size_t offset = 0;
    for (std::size_t i = 0; i < schema.columns.size(); ++i) {
      const auto& col = schema.columns[i];
      const auto& cell = raw.rows[r][source[i]];
      if (col.kind == ColumnKind::numeric) {
        if (cell.empty()) {
          out(r, offset) = std::numeric_limits<double>::quiet_NaN();
        } else {
          auto v = parse_number(cell);
          if (!v) throw SchemaError("non-numeric value '" + cell + "' in numeric column '" + col.name + "'");
          out(r, offset) = *v;
        }
        ++offset;
        continue;
      }
      std::size_t slot = 0;
      for (const auto& cat : col.categories) {
        if (col.reference && cat == *col.reference) continue;
        if (cat == cell) out(r, offset + slot) = 1.0;
        ++slot;
      }
      offset += col.width();
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset

std::size_t FeatureBlocks::rows() const {
  if (!tabular.empty() || embeddings.empty()) return tabular.rows();
  return embeddings.begin()->second.rows();
}

const Matrix& FeatureBlocks::block(const std::string& name) const {
  if (name == kTabular) return tabular;
  auto it = embeddings.find(name);
  if (it == embeddings.end()) throw ShapeMismatch("no feature block named '" + name + "'");
  return it->second;
}

Matrix& FeatureBlocks::block(const std::string& name) {
  return const_cast<Matrix&>(static_cast<const FeatureBlocks&>(*this).block(name));
}

std::vector<std::string> MultimodalDataset::embedding_names() const {
  std::vector<std::string> names;
  for (const auto& kv : embeddings) names.push_back(kv.first);
  return names;
}

FeatureBlocks MultimodalDataset::blocks(std::span<const std::size_t> rows) const {
  FeatureBlocks b;
  b.tabular = select_rows(tabular, rows);
  for (const auto& [name, m] : embeddings) b.embeddings[name] = select_rows(m, rows);
  return b;
}

FeatureBlocks MultimodalDataset::all_blocks() const {
  FeatureBlocks b;
  b.tabular = tabular;
  b.embeddings = embeddings;
  return b;
}

std::vector<int> MultimodalDataset::labels(std::span<const std::size_t> rows) const {
  std::vector<int> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = y[rows[i]];
  return out;
}

void MultimodalDataset::validate() const {
  const std::size_t n = y.size();
  if (tabular.rows() != n || groups.size() != n || ids.size() != n)
    throw ShapeMismatch("dataset row counts disagree");
  for (const auto& [name, m] : embeddings) {
    if (m.rows() != n) throw ShapeMismatch("embedding '" + name + "' row count disagrees");
    for (double v : m.values())
      if (!std::isfinite(v)) throw SchemaError("embedding '" + name + "' has a non-finite value");
  }
  for (double v : tabular.values())
    if (std::isinf(v)) throw SchemaError("tabular matrix has an infinite value");
  std::vector<bool> seen(class_names.size(), false);
  for (int label : y) {
    if (label < 0 || label >= num_classes()) throw SchemaError("label out of range");
    seen[static_cast<std::size_t>(label)] = true;
  }
  if (n > 0 && std::find(seen.begin(), seen.end(), false) != seen.end())
    throw SchemaError("labels do not cover a contiguous range");
}

namespace {

std::string list_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size() && i < 10; ++i) out += (i ? ", " : "") + ids[i];
  if (ids.size() > 10) out += ", ... (" + std::to_string(ids.size()) + " total)";
  return out;
}

Matrix read_embedding(const fs::path& path, const std::string& name, const std::map<std::string, std::size_t>& row_of,
                      std::size_t n) {
  CsvTable t = read_csv(path);
  if (t.header.empty() || t.header[0] != "id") throw SchemaError(path.string() + ": first column must be 'id'");
  for (std::size_t c = 1; c < t.header.size(); ++c)
    if (t.header[c] != "e" + std::to_string(c - 1))
      throw SchemaError(path.string() + ": expected header e" + std::to_string(c - 1) + ", got " + t.header[c]);
  const std::size_t d = t.header.size() - 1;
  Matrix m(n, d);
  std::vector<bool> filled(n, false);
  std::vector<std::string> unknown;
  for (const auto& row : t.rows) {
    auto it = row_of.find(row[0]);
    if (it == row_of.end()) {
      unknown.push_back(row[0]);
      continue;
    }
    if (filled[it->second]) throw SchemaError("embedding '" + name + "' repeats id " + row[0]);
    filled[it->second] = true;
    for (std::size_t c = 0; c < d; ++c) {
      auto v = parse_number(row[c + 1]);
      if (!v) throw SchemaError("embedding '" + name + "' has a non-finite value for id " + row[0]);
      m(it->second, c) = *v;
    }
  }
  if (!unknown.empty())
    throw SchemaError("embedding '" + name + "' has ids absent from the tabular file: " + list_ids(unknown));
  std::vector<std::string> missing;
  for (const auto& [id, r] : row_of)
    if (!filled[r]) missing.push_back(id);
  if (!missing.empty())
    throw SchemaError("embedding '" + name + "' lacks ids present in the tabular file: " + list_ids(missing));
  return m;
}

}  // namespace

MultimodalDataset load_dataset(const DatasetManifest& manifest) {
  CsvTable raw = read_csv(manifest.tabular_path);
  auto label_col = raw.column(manifest.label_column);
  auto id_col = raw.column(manifest.id_column);
  auto group_col = raw.column(manifest.group_column);
  if (!label_col) throw SchemaError("label column '" + manifest.label_column + "' not in tabular file");
  if (!id_col) throw SchemaError("id column '" + manifest.id_column + "' not in tabular file");
  if (!group_col) throw SchemaError("group column '" + manifest.group_column + "' not in tabular file");

  MultimodalDataset d;
  d.task = manifest.task;
  const std::vector<std::string> reserved = {manifest.label_column, manifest.id_column, manifest.group_column};
  d.schema = manifest.schema ? TabularSchema::from_json(*manifest.schema) : infer_schema(raw, reserved);
  d.tabular = encode_tabular(raw, d.schema, reserved);

  std::set<std::string> labels;
  for (const auto& row : raw.rows) {
    if (row[*label_col].empty()) throw SchemaError("empty label for id " + row[*id_col]);
    labels.insert(row[*label_col]);
  }
  d.class_names.assign(labels.begin(), labels.end());
  if (d.task == Task::binary && d.class_names.size() != 2)
    throw SchemaError("binary task needs exactly 2 label values, found " + std::to_string(d.class_names.size()));
  if (d.class_names.size() < 2) throw SchemaError("need at least 2 classes");

  std::map<std::string, std::size_t> row_of;
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    const auto& row = raw.rows[r];
    if (!row_of.emplace(row[*id_col], r).second) throw SchemaError("duplicate id " + row[*id_col]);
    d.ids.push_back(row[*id_col]);
    d.groups.push_back(row[*group_col]);
    d.y.push_back(static_cast<int>(std::distance(d.class_names.begin(),
                                                 std::find(d.class_names.begin(), d.class_names.end(), row[*label_col]))));
  }
  for (const auto& [name, path] : manifest.embedding_paths)
    d.embeddings[name] = read_embedding(path, name, row_of, raw.rows.size());
  d.validate();
  return d;
}

// ---------------------------------------------------------------------------
// Splitting

namespace {

struct GroupInfo {
  std::string id;
  std::vector<std::size_t> members;
  std::vector<int> class_counts;
  std::size_t order_key = 0;
};

int num_classes_of(std::span<const int> y) {
  int c = 0;
  for (int v : y) c = std::max(c, v + 1);
  return c;
}

// Groups in first-appearance order over `rows`.
std::vector<GroupInfo> collect_groups(std::span<const std::size_t> rows, std::span<const int> y,
                                      std::span<const std::string> groups, int C) {
  std::map<std::string, std::size_t> index;
  std::vector<GroupInfo> out;
  for (std::size_t r : rows) {
    auto [it, fresh] = index.emplace(groups[r], out.size());
    if (fresh) out.push_back({groups[r], {}, std::vector<int>(static_cast<std::size_t>(C), 0), 0});
    auto& g = out[it->second];
    g.members.push_back(r);
    ++g.class_counts[static_cast<std::size_t>(y[r])];
  }
  return out;
}

// Largest group first; equal sizes in a seeded random order.
void order_groups(std::vector<GroupInfo>& gs, std::uint64_t seed) {
  Rng rng(seed);
  auto perm = rng.permutation(gs.size());
  for (std::size_t i = 0; i < gs.size(); ++i) gs[i].order_key = perm[i];
  std::sort(gs.begin(), gs.end(), [](const GroupInfo& a, const GroupInfo& b) {
    if (a.members.size() != b.members.size()) return a.members.size() > b.members.size();
    return a.order_key < b.order_key;
  });
}

}  // namespace

FoldSplit grouped_stratified_kfold(std::span<const int> y, std::span<const std::string> groups, int k,
                                   std::uint64_t seed) {
  if (y.size() != groups.size()) throw LengthMismatch("labels and groups differ in length");
  const int C = num_classes_of(y);
  std::vector<std::size_t> all(y.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  auto gs = collect_groups(all, y, groups, C);
  if (k < 2 || static_cast<std::size_t>(k) > gs.size())
    throw InvalidK("k=" + std::to_string(k) + " with " + std::to_string(gs.size()) + " distinct groups");
  order_groups(gs, seed);

  const std::size_t K = static_cast<std::size_t>(k);
  std::vector<double> totals(static_cast<std::size_t>(C), 0.0);
  for (int v : y) totals[static_cast<std::size_t>(v)] += 1.0;
  std::vector<std::vector<double>> assigned(K, std::vector<double>(static_cast<std::size_t>(C), 0.0));
  std::vector<std::size_t> fold_size(K, 0), fold_groups(K, 0);
  std::vector<std::vector<std::size_t>> test(K);

  for (std::size_t gi = 0; gi < gs.size(); ++gi) {
    const auto& g = gs[gi];
    const std::size_t remaining = gs.size() - gi;
    const std::size_t empty = static_cast<std::size_t>(std::count(fold_groups.begin(), fold_groups.end(), 0));
    const bool force_empty = empty > 0 && remaining <= empty;

    std::size_t best = K;
    double best_score = 0.0;
    for (std::size_t f = 0; f < K; ++f) {
      if (force_empty && fold_groups[f] != 0) continue;
      double score = 0.0;
      for (std::size_t c = 0; c < totals.size(); ++c)
        score += g.class_counts[c] * (totals[c] / static_cast<double>(K) - assigned[f][c]);
      const bool better = best == K || score > best_score + 1e-12 ||
                          (std::abs(score - best_score) <= 1e-12 && fold_size[f] < fold_size[best]);
      if (better) {
        best = f;
        best_score = score;
      }
    }
    for (std::size_t c = 0; c < totals.size(); ++c) assigned[best][c] += g.class_counts[c];
    fold_size[best] += g.members.size();
    ++fold_groups[best];
    test[best].insert(test[best].end(), g.members.begin(), g.members.end());
  }

  FoldSplit split;
  split.seed = seed;
  for (std::size_t f = 0; f < K; ++f) {
    Fold fold;
    std::sort(test[f].begin(), test[f].end());
    std::vector<bool> in_test(y.size(), false);
    for (std::size_t r : test[f]) in_test[r] = true;
    for (std::size_t r = 0; r < y.size(); ++r)
      if (!in_test[r]) fold.train.push_back(r);
    fold.test = std::move(test[f]);
    split.folds.push_back(std::move(fold));
  }
  return split;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_train_valid(
    std::span<const std::size_t> train, std::span<const int> y, std::span<const std::string> groups,
    double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw DegenerateSplit("fraction must lie in (0, 1)");
  if (y.size() != groups.size()) throw LengthMismatch("labels and groups differ in length");
  const int C = num_classes_of(y);
  const std::size_t Cs = static_cast<std::size_t>(C);

  std::vector<int> counts(Cs, 0);
  for (std::size_t r : train) ++counts[static_cast<std::size_t>(y[r])];

  // Integer per-class targets summing to round(fraction * n), largest remainder first.
  const long total_target = std::lround(fraction * static_cast<double>(train.size()));
  std::vector<long> target(Cs);
  std::vector<std::pair<double, std::size_t>> remainders;
  long assigned = 0;
  for (std::size_t c = 0; c < Cs; ++c) {
    const double ideal = fraction * counts[c];
    target[c] = static_cast<long>(std::floor(ideal));
    assigned += target[c];
    remainders.emplace_back(ideal - std::floor(ideal), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < total_target && i < remainders.size(); ++i, ++assigned)
    ++target[remainders[i].second];

  auto gs = collect_groups(train, y, groups, C);
  order_groups(gs, seed);
  std::vector<long> in_valid(Cs, 0);
  std::vector<std::size_t> valid, kept;
  for (const auto& g : gs) {
    long before = 0, after = 0;
    for (std::size_t c = 0; c < Cs; ++c) {
      before += std::labs(in_valid[c] - target[c]);
      after += std::labs(in_valid[c] + g.class_counts[c] - target[c]);
    }
    auto& dst = after < before ? valid : kept;
    if (after < before)
      for (std::size_t c = 0; c < Cs; ++c) in_valid[c] += g.class_counts[c];
    dst.insert(dst.end(), g.members.begin(), g.members.end());
  }

  if (kept.empty()) throw DegenerateSplit("no rows left for training");
  if (valid.empty()) throw DegenerateSplit("validation set is empty");
  for (std::size_t c = 0; c < Cs; ++c)
    if (counts[c] > 0 && counts[c] == in_valid[c])
      throw DegenerateSplit("class " + std::to_string(c) + " would vanish from the training rows");
  std::sort(kept.begin(), kept.end());
  std::sort(valid.begin(), valid.end());
  return {std::move(kept), std::move(valid)};
}

FoldSplit make_folds(const MultimodalDataset& data, int k, double valid_fraction, std::uint64_t seed) {
  FoldSplit split = grouped_stratified_kfold(data.y, data.groups, k, seed);
  for (std::size_t f = 0; f < split.folds.size(); ++f) {
    auto& fold = split.folds[f];
    auto [train, valid] = split_train_valid(fold.train, data.y, data.groups, valid_fraction, derive_seed(seed, {f}));
    fold.train = std::move(train);
    fold.valid = std::move(valid);
  }
  return split;
}

nlohmann::json to_json(const FoldSplit& split) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : split.folds) folds.push_back({{"train", f.train}, {"valid", f.valid}, {"test", f.test}});
  return {{"seed", split.seed}, {"folds", folds}};
}

}  // namespace mmfuse
