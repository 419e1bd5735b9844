#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "mmfuse/csv.hpp"
#include "mmfuse/dataset.hpp"
#include "mmfuse/errors.hpp"
#include "test_util.hpp"

using namespace mmfuse;
namespace fs = std::filesystem;

namespace {

// Small two-source dataset on disk: 6 rows, 3 patients, 2 classes.
fs::path write_small_dataset(const std::string& name, const std::string& emb_override = "") {
  auto dir = testutil::scratch(name);
  testutil::write_file(dir / "tab.csv",
                       "id,patient,label,age,smoker\n"
                       "a,p1,pos,50,yes\n"
                       "b,p1,pos,,no\n"
                       "c,p2,neg,40,unknown\n"
                       "d,p2,neg,30,no\n"
                       "e,p3,pos,60,yes\n"
                       "f,p3,neg,20,no\n");
  testutil::write_file(dir / "emb.csv", emb_override.empty() ? "id,e0,e1\n"
                                                               "f,6,0.6\n"
                                                               "e,5,0.5\n"
                                                               "d,4,0.4\n"
                                                               "c,3,0.3\n"
                                                               "b,2,0.2\n"
                                                               "a,1,0.1\n"
                                                             : emb_override);
  testutil::write_file(dir / "manifest.json", R"({"tabular_path":"tab.csv","embedding_paths":{"img":"emb.csv"},
    "label_column":"label","group_column":"patient","id_column":"id","task":"binary"})");
  return dir;
}

std::set<std::string> groups_of(const std::vector<std::size_t>& rows, const std::vector<std::string>& g) {
  std::set<std::string> out;
  for (auto r : rows) out.insert(g[r]);
  return out;
}

}  // namespace

TEST_CASE("manifest loads with one embedding source") {
  auto dir = write_small_dataset("manifest_ok");
  const auto m = load_manifest(dir / "manifest.json");
  CHECK(m.embedding_paths.size() == 1);
  CHECK(m.task == Task::binary);
  CHECK(m.tabular_path == dir / "tab.csv");
}

TEST_CASE("manifest errors") {
  auto dir = write_small_dataset("manifest_bad");
  testutil::write_file(dir / "no_label.json", R"({"tabular_path":"tab.csv","embedding_paths":{},
    "group_column":"patient","id_column":"id","task":"binary"})");
  CHECK_THROWS_AS(load_manifest(dir / "no_label.json"), SchemaError);
  testutil::write_file(dir / "no_emb.json", R"({"tabular_path":"tab.csv","embedding_paths":{"img":"missing.csv"},
    "label_column":"label","group_column":"patient","id_column":"id","task":"binary"})");
  CHECK_THROWS_AS(load_manifest(dir / "no_emb.json"), MissingFile);
  CHECK_THROWS_AS(load_manifest(dir / "absent.json"), MissingFile);
}

TEST_CASE("load_dataset aligns embeddings by id and keeps missing cells") {
  auto dir = write_small_dataset("load_ok");
  const auto d = load_dataset(load_manifest(dir / "manifest.json"));
  REQUIRE(d.size() == 6);
  CHECK(d.class_names == std::vector<std::string>{"neg", "pos"});
  CHECK(d.y == std::vector<int>{1, 1, 0, 0, 1, 0});
  const auto& e = d.embeddings.at("img");
  for (std::size_t r = 0; r < 6; ++r) CHECK(e(r, 0) == static_cast<double>(r + 1));
  // age, smoker{no, unknown, yes}
  CHECK(d.tabular.cols() == 4);
  CHECK(std::isnan(d.tabular(1, 0)));
  CHECK_NOTHROW(d.validate());
}

TEST_CASE("mismatched embedding ids are named in the error") {
  auto dir = write_small_dataset("load_mismatch", "id,e0\na,1\nb,2\nc,3\nd,4\ne,5\nz,6\n");
  try {
    load_dataset(load_manifest(dir / "manifest.json"));
    FAIL("expected SchemaError");
  } catch (const SchemaError& err) {
    const std::string msg = err.what();
    CHECK(msg.find("z") != std::string::npos);
  }
}

TEST_CASE("one-hot encoding and unseen categories") {
  const auto schema = TabularSchema::from_json(
      {{"columns", {{{"name", "bleed"}, {"kind", "categorical"}, {"categories", {"yes", "no", "unknown"}}}}}});
  const auto table = parse_csv("bleed\nno\nmaybe\nunknown\n");
  const Matrix x = encode_tabular(table, schema);
  CHECK(x == Matrix{{0, 1, 0}, {0, 0, 0}, {0, 0, 1}});
  CHECK_THROWS_AS(encode_tabular(parse_csv("bleed,extra\nno,1\n"), schema), UnknownColumn);
  const std::vector<std::string> ignore{"extra"};
  CHECK(encode_tabular(parse_csv("bleed,extra\nno,1\n"), schema, ignore) == Matrix{{0, 1, 0}});
}

TEST_CASE("retained clinical schema encodes to 27 columns") {
  nlohmann::json cols = nlohmann::json::array();
  cols.push_back({{"name", "age"}, {"kind", "numeric"}});
  cols.push_back({{"name", "region"},
                  {"kind", "categorical"},
                  {"categories",
                   {"abdomen", "arm", "back", "chest", "ear", "face", "foot", "forearm", "hand", "lip", "neck",
                    "nose", "scalp", "thigh"}}});
  for (const char* v : {"itch", "grew", "hurt", "changed", "bleed", "elevation"})
    cols.push_back({{"name", v}, {"kind", "categorical"}, {"categories", {"no", "yes", "unknown"}}, {"reference", "no"}});
  const auto schema = TabularSchema::from_json({{"columns", cols}});
  CHECK(schema.width() == 27);
  const auto table = parse_csv(
      "age,region,itch,grew,hurt,changed,bleed,elevation\n"
      "55,face,yes,no,unknown,no,no,yes\n"
      "71,back,unknown,yes,no,no,yes,no\n");
  const Matrix x = encode_tabular(table, schema);
  CHECK(x.cols() == 27);
  CHECK(schema.feature_names().size() == 27);
  // Every categorical block is one-hot or all-zero at the reference level.
  double row0 = 0.0;
  for (std::size_t c = 1; c < 27; ++c) row0 += x(0, c);
  CHECK(row0 == 1 + 3);
  CHECK(TabularSchema::from_json(schema.to_json()).width() == 27);
}

TEST_CASE("encoded width is numeric plus total categories") {
  const auto table = parse_csv("a,b,c\n1,x,u\n2,y,u\n,z,v\n");
  const auto schema = infer_schema(table);
  CHECK(schema.width() == 1 + 3 + 2);
  CHECK(encode_tabular(table, schema).cols() == 6);
  auto a = encode_tabular(table, schema), b = encode_tabular(table, schema);
  CHECK(std::isnan(a(2, 0)));  // missing numeric stays NaN for the imputer
  a(2, 0) = b(2, 0) = 0.0;
  CHECK(a == b);
}

TEST_CASE("ten samples in five pair groups give one group per fold") {
  const std::vector<int> y{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  const std::vector<std::string> g{"g0", "g0", "g1", "g1", "g2", "g2", "g3", "g3", "g4", "g4"};
  for (std::uint64_t seed : {0u, 1u, 7u}) {
    const auto split = grouped_stratified_kfold(y, g, 5, seed);
    REQUIRE(split.folds.size() == 5);
    std::set<std::string> seen;
    for (const auto& f : split.folds) {
      CHECK(f.test.size() == 2);
      const auto gs = groups_of(f.test, g);
      CHECK(gs.size() == 1);
      seen.insert(gs.begin(), gs.end());
    }
    CHECK(seen.size() == 5);
  }
}

TEST_CASE("folds partition the rows and keep groups disjoint") {
  Rng rng(3);
  std::vector<int> y;
  std::vector<std::string> g;
  for (int p = 0; p < 60; ++p) {
    const int label = static_cast<int>(rng.index(3));
    const std::size_t m = 1 + rng.index(3);
    for (std::size_t i = 0; i < m; ++i) {
      y.push_back(label);
      g.push_back("p" + std::to_string(p));
    }
  }
  const auto split = grouped_stratified_kfold(y, g, 5, 11);
  std::vector<int> hits(y.size(), 0);
  for (std::size_t i = 0; i < split.folds.size(); ++i) {
    for (auto r : split.folds[i].test) ++hits[r];
    const auto gi = groups_of(split.folds[i].test, g);
    for (std::size_t j = i + 1; j < split.folds.size(); ++j) {
      const auto gj = groups_of(split.folds[j].test, g);
      std::vector<std::string> both;
      std::set_intersection(gi.begin(), gi.end(), gj.begin(), gj.end(), std::back_inserter(both));
      CHECK(both.empty());
    }
    const auto gt = groups_of(split.folds[i].train, g);
    for (const auto& name : gi) CHECK(gt.count(name) == 0);
  }
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK(to_json(split) == to_json(grouped_stratified_kfold(y, g, 5, 11)));
}

TEST_CASE("invalid k") {
  const std::vector<int> y{0, 1, 0, 1};
  const std::vector<std::string> g{"a", "b", "c", "d"};
  CHECK_THROWS_AS(grouped_stratified_kfold(y, g, 1, 0), InvalidK);
  CHECK_THROWS_AS(grouped_stratified_kfold(y, g, 5, 0), InvalidK);
}

TEST_CASE("validation carve-out sizes") {
  std::vector<int> y(100);
  std::vector<std::string> g(100);
  std::vector<std::size_t> rows(100);
  for (std::size_t i = 0; i < 100; ++i) {
    y[i] = static_cast<int>(i % 2);
    g[i] = std::to_string(i);
    rows[i] = i;
  }
  for (std::uint64_t seed : {0u, 5u, 9u}) {
    const auto [train, valid] = split_train_valid(rows, y, g, 0.2, seed);
    CHECK(valid.size() == 20);
    CHECK(train.size() == 80);
    int ones = 0;
    for (auto r : valid) ones += y[r];
    const int zeros = static_cast<int>(valid.size()) - ones;
    CHECK(std::abs(ones - zeros) <= 1);
    CHECK(split_train_valid(rows, y, g, 0.2, seed) == std::make_pair(train, valid));
  }
}

TEST_CASE("degenerate carve-outs") {
  std::vector<int> y{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  std::vector<std::string> g{"0", "1", "2", "3", "4", "5", "6", "7", "8", "9"};
  std::vector<std::size_t> rows{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK_THROWS_AS(split_train_valid(rows, y, g, 0.999, 0), DegenerateSplit);
  CHECK_THROWS_AS(split_train_valid(rows, y, g, 0.0, 0), DegenerateSplit);
  CHECK_THROWS_AS(split_train_valid(rows, y, g, 1.0, 0), DegenerateSplit);
}

TEST_CASE("make_folds keeps validation groups out of train and test") {
  MultimodalDataset d;
  for (int p = 0; p < 40; ++p)
    for (int i = 0; i < 1 + p % 2; ++i) {
      d.y.push_back(p % 3 == 0 ? 1 : 0);
      d.groups.push_back("p" + std::to_string(p));
    }
  const auto split = make_folds(d, 5, 0.2, 4);
  for (const auto& f : split.folds) {
    const auto gt = groups_of(f.train, d.groups), gv = groups_of(f.valid, d.groups), gs = groups_of(f.test, d.groups);
    CHECK(!gv.empty());
    for (const auto& name : gv) {
      CHECK(gt.count(name) == 0);
      CHECK(gs.count(name) == 0);
    }
    CHECK(f.train.size() + f.valid.size() + f.test.size() == d.size());
  }
  CHECK(to_json(split) == to_json(make_folds(d, 5, 0.2, 4)));
}
