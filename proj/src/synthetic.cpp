#include "mmfuse/synthetic.hpp"

#include <array>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "mmfuse/csv.hpp"
#include "mmfuse/errors.hpp"
#include "mmfuse/rng.hpp"

namespace mmfuse {

namespace fs = std::filesystem;

std::string to_string(SyntheticKind k) {
  switch (k) {
    case SyntheticKind::cross_modal_xor: return "cross_modal_xor";
    case SyntheticKind::ambiguous_half: return "ambiguous_half";
    case SyntheticKind::exchangeable: return "exchangeable";
  }
  return "?";
}

SyntheticKind synthetic_from_string(const std::string& s) {
  for (auto k : {SyntheticKind::cross_modal_xor, SyntheticKind::ambiguous_half, SyntheticKind::exchangeable})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown synthetic dataset '" + s + "'");
}

namespace {

struct Tables {
  CsvTable tabular;
  CsvTable embedding;
  bool has_embedding = false;
  std::string task = "multiclass";
};

CsvTable embedding_table(std::size_t d) {
  CsvTable t;
  t.header.push_back("id");
  for (std::size_t j = 0; j < d; ++j) t.header.push_back("e" + std::to_string(j));
  return t;
}

std::string row_id(std::size_t patient, int image) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%04zu_%d", patient, image);
  return buf;
}

std::string patient_id(std::size_t patient) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%04zu", patient);
  return buf;
}

// Patients with one or two image rows each, until n rows exist.
template <class EmitPatient>
void for_patients(std::size_t n, Rng& rng, EmitPatient emit) {
  std::size_t rows = 0;
  for (std::size_t p = 0; rows < n; ++p) {
    const int images = std::min<int>(rng.uniform() < 0.5 ? 1 : 2, static_cast<int>(n - rows));
    emit(p, images);
    rows += static_cast<std::size_t>(images);
  }
}

Tables cross_modal_xor(std::size_t n, Rng& rng) {
  Tables t;
  t.task = "binary";
  t.has_embedding = true;
  t.tabular.header = {"id", "patient", "tab_bit", "age", "smoker", "x1", "x2", "label"};
  t.embedding = embedding_table(8);
  static const std::array<std::string, 3> smoker{"no", "unknown", "yes"};
  for_patients(n, rng, [&](std::size_t p, int images) {
    const bool tab_bit = rng.uniform() < 0.5;
    const double age = rng.normal(50.0, 10.0);
    const bool age_missing = rng.uniform() < 0.05;
    const std::string smokes = smoker[rng.index(3)];
    const double x1 = rng.normal(), x2 = rng.normal();
    for (int i = 0; i < images; ++i) {
      const bool emb_bit = rng.uniform() < 0.5;
      const std::string id = row_id(p, i);
      t.tabular.rows.push_back({id, patient_id(p), tab_bit ? "yes" : "no", age_missing ? "" : format_double(age),
                                smokes, format_double(x1), format_double(x2), (tab_bit != emb_bit) ? "pos" : "neg"});
      std::vector<std::string> e{id, format_double((emb_bit ? 1.0 : -1.0) + rng.normal(0.0, 0.25))};
      for (int j = 1; j < 8; ++j) e.push_back(format_double(rng.normal()));
      t.embedding.rows.push_back(std::move(e));
    }
  });
  return t;
}

Tables ambiguous_half(std::size_t n, Rng& rng) {
  Tables t;
  t.has_embedding = true;
  t.tabular.header = {"id", "patient", "t0", "t1", "t2", "site", "label"};
  t.embedding = embedding_table(6);
  static const std::array<std::string, 4> names{"A", "B", "C", "D"};
  static const std::array<std::string, 2> sites{"north", "south"};
  for_patients(n, rng, [&](std::size_t p, int images) {
    const std::size_t c = rng.index(4);
    const bool ab = c < 2;
    // t0: {A,B} vs {C,D}; t1: A vs B, uninformative for C and D.
    const double t0 = rng.normal(ab ? -2.0 : 2.0, 1.0);
    const double t1 = ab ? rng.normal(c == 0 ? -2.0 : 2.0, 1.0) : rng.normal();
    const double t2 = rng.normal();
    const std::string site = sites[rng.index(2)];
    for (int i = 0; i < images; ++i) {
      const std::string id = row_id(p, i);
      t.tabular.rows.push_back({id, patient_id(p), format_double(t0), format_double(t1), format_double(t2), site,
                                names[c]});
      // e0: C vs D, uninformative for A and B.
      const double e0 = ab ? rng.normal() : rng.normal(c == 2 ? -2.0 : 2.0, 1.0);
      std::vector<std::string> e{id, format_double(e0)};
      for (int j = 1; j < 6; ++j) e.push_back(format_double(rng.normal()));
      t.embedding.rows.push_back(std::move(e));
    }
  });
  return t;
}

Tables exchangeable(std::size_t n, Rng& rng) {
  Tables t;
  t.tabular.header = {"id", "patient", "x0", "x1", "x2", "x3", "label"};
  static const std::array<double, 3> prior{0.5, 0.3, 0.2};
  static const std::array<std::array<double, 4>, 3> mu{{{0.0, 0.0, 0.0, 0.0},
                                                        {1.5, 0.0, 0.5, 0.0},
                                                        {0.0, 1.5, 0.0, 0.5}}};
  for (std::size_t r = 0; r < n; ++r) {
    const double u = rng.uniform();
    const std::size_t c = u < prior[0] ? 0 : (u < prior[0] + prior[1] ? 1 : 2);
    std::vector<std::string> row{row_id(r, 0), patient_id(r)};
    for (double m : mu[c]) row.push_back(format_double(rng.normal(m, 1.0)));
    row.push_back("c" + std::to_string(c));
    t.tabular.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace

fs::path make_synthetic(SyntheticKind kind, std::size_t n, std::uint64_t seed, const fs::path& dir) {
  if (n < 40) throw ConfigError("synthetic datasets need n >= 40");
  Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(kind)}));
  Tables t;
  switch (kind) {
    case SyntheticKind::cross_modal_xor: t = cross_modal_xor(n, rng); break;
    case SyntheticKind::ambiguous_half: t = ambiguous_half(n, rng); break;
    case SyntheticKind::exchangeable: t = exchangeable(n, rng); break;
  }
  fs::create_directories(dir);
  write_csv(dir / "tabular.csv", t.tabular);
  nlohmann::json embeddings = nlohmann::json::object();
  if (t.has_embedding) {
    write_csv(dir / "emb.csv", t.embedding);
    embeddings["emb"] = "emb.csv";
  }
  const nlohmann::json manifest = {{"tabular_path", "tabular.csv"}, {"embedding_paths", embeddings},
                                   {"label_column", "label"},       {"group_column", "patient"},
                                   {"id_column", "id"},             {"task", t.task}};
  const fs::path path = dir / "manifest.json";
  std::ofstream out(path);
  if (!out) throw MissingFile(path.string());
  out << manifest.dump(2) << '\n';
  return path;
}

}  // namespace mmfuse
