#include "qunits/search.hpp"

#include <cmath>

#include "doctest.h"
#include "support.hpp"

using namespace qunits;

namespace {

struct Pipeline {
  Dataset dataset;
  ValueIndex values;
  std::vector<QunitDefinition> defs;
  InvertedIndex index;
};

Pipeline fixture_pipeline() {
  Dataset dataset = test::fixture_dataset();
  ValueIndex values = ValueIndex::build(dataset);
  auto defs =
      parse_definitions(test::read_file(test::fixture_dir() + "/definitions.qdef"));
  auto instances = materialize(defs, dataset);
  InvertedIndex index = InvertedIndex::build(instances);
  return Pipeline{std::move(dataset), std::move(values), std::move(defs),
                  std::move(index)};
}

}  // namespace

TEST_CASE("build_index counts documents and frequencies") {
  Dataset dataset = test::fixture_dataset();
  auto defs =
      parse_definitions(test::read_file(test::fixture_dir() + "/definitions.qdef"));

  SUBCASE("empty corpus") {
    InvertedIndex index = InvertedIndex::build({});
    CHECK(index.doc_count() == 0);
    CHECK(index.dump().empty());
  }
  SUBCASE("clooney appears in one of the three cast instances") {
    std::vector<QunitDefinition> cast_only;
    for (const auto& def : defs) {
      if (def.id == "cast_of_movie") cast_only.push_back(def);
    }
    InvertedIndex index = InvertedIndex::build(materialize(cast_only, dataset));
    CHECK(index.doc_count() == 3);
    CHECK(index.df("clooney") == 1);
    // "cast" is the label of every instance: df = N forces idf = ln 2.
    CHECK(index.df("cast") == 3);
    CHECK(index.idf("cast") == doctest::Approx(std::log(2.0)));
  }
  SUBCASE("duplicate instance ids are rejected") {
    RenderedInstance a;
    a.instance_id = "d/x";
    a.definition_id = "d";
    a.index_tokens = {"t"};
    CHECK_THROWS_AS(InvertedIndex::build({a, a}), IntegrityError);
  }
}

TEST_CASE("dump_index golden output") {
  RenderedInstance a;
  a.instance_id = "d1/a";
  a.definition_id = "d1";
  a.index_tokens = {"x", "y", "x"};
  RenderedInstance b;
  b.instance_id = "d2/b";
  b.definition_id = "d2";
  b.index_tokens = {"y"};
  InvertedIndex index = InvertedIndex::build({a, b});
  CHECK(index.dump() == "x\t1\td1/a:2\ny\t2\td1/a:1;d2/b:1\n");
}

TEST_CASE("segment ranks full-coverage segmentations first") {
  Dataset dataset = test::fixture_dataset();
  ValueIndex values = ValueIndex::build(dataset);
  const Schema& schema = dataset.schema();

  SUBCASE("star wars cast") {
    auto segs = segment("star wars cast", values, schema);
    REQUIRE(!segs.empty());
    const auto& top = segs.front();
    CHECK(top.score == doctest::Approx(1.0));
    REQUIRE(top.segments.size() == 2);
    CHECK(top.segments[0].element.str() == "movie.title");
    CHECK(top.segments[1].element.str() == "cast");
    CHECK(top.segments[1].element.is_table());
  }
  SUBCASE("george clooney movies maps the plural to the movie table") {
    auto segs = segment("george clooney movies", values, schema);
    const auto& top = segs.front();
    CHECK(top.score == doctest::Approx(1.0));
    REQUIRE(top.segments.size() == 2);
    CHECK(top.segments[0].element.str() == "person.name");
    CHECK(top.segments[1].element.str() == "movie");
  }
  SUBCASE("unrecognized queries fall back to one free-text segment") {
    auto segs = segment("zzz qqq", values, schema);
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].score == 0.0);
    REQUIRE(segs[0].segments.size() == 1);
    CHECK_FALSE(segs[0].segments[0].is_value);
  }
  SUBCASE("every segmentation partitions the query tokens in order") {
    for (const auto& query :
         {"star wars cast", "george clooney batman", "batman tunisia scifi jedi",
          "zzz star wars", "movies movies movies"}) {
      auto tokens = tokenize(query);
      for (const auto& seg : segment(query, values, schema)) {
        std::size_t pos = 0;
        for (const auto& s : seg.segments) {
          CHECK(s.begin == pos);
          CHECK(s.end > s.begin);
          CHECK(std::vector<std::string>(tokens.begin() + s.begin,
                                         tokens.begin() + s.end) == s.tokens);
          pos = s.end;
        }
        CHECK(pos == tokens.size());
      }
    }
  }
}

TEST_CASE("match_definitions scores Jaccard overlap weighted by utility") {
  Dataset dataset = test::fixture_dataset();
  ValueIndex values = ValueIndex::build(dataset);
  auto segs = segment("star wars cast", values, dataset.schema());

  QunitDefinition cast_def;
  cast_def.id = "cast_of_movie";
  cast_def.base.tables = {"person", "cast", "movie"};
  cast_def.base.anchor = ColumnRef{"movie", "title"};
  cast_def.conversion.label = "cast";
  cast_def.conversion.groups = {ForEachGroup{"person", {ColumnRef{"person", "name"}}}};
  cast_def.utility = 1.0;

  QunitDefinition genre_def;
  genre_def.id = "genre_of_movie";
  genre_def.base.tables = {"movie", "genre"};
  genre_def.base.anchor = ColumnRef{"movie", "title"};
  genre_def.conversion.label = "genre";
  genre_def.conversion.groups = {ForEachGroup{"genre", {ColumnRef{"genre", "name"}}}};
  genre_def.utility = 1.0;

  auto matches = match_definitions(segs.front(), {cast_def, genre_def});
  REQUIRE(matches.size() == 2);
  CHECK(matches[0].definition_id == "cast_of_movie");
  CHECK(matches[0].jaccard == doctest::Approx(2.0 / 5.0));
  CHECK(matches[1].definition_id == "genre_of_movie");
  CHECK(matches[1].jaccard == doctest::Approx(1.0 / 5.0));

  SUBCASE("no definitions, no matches") {
    CHECK(match_definitions(segs.front(), {}).empty());
  }
  SUBCASE("identical definitions tie-break by id") {
    auto twin = cast_def;
    twin.id = "aa_twin";
    auto m = match_definitions(segs.front(), {cast_def, twin});
    CHECK(m[0].definition_id == "aa_twin");
    CHECK(m[0].score == doctest::Approx(m[1].score));
  }
}

TEST_CASE("search returns the star wars cast instance first") {
  auto p = fixture_pipeline();
  SearchConfig config;

  auto results = search("star wars cast", p.index, p.defs, p.values, config);
  REQUIRE(!results.empty());
  CHECK(results[0].instance_id == "cast_of_movie/star wars");
  CHECK(results[0].definition_id == "cast_of_movie");

  // Frozen from the hand-computed fixture arithmetic.
  CHECK(results[0].defmatch == doctest::Approx(0.4 * 0.75));
  double idf_star = std::log(1.0 + 12.0 / 6.0);
  double idf_cast = std::log(1.0 + 12.0 / 3.0);
  double expected_tfidf = 2 * idf_star + idf_cast;
  CHECK(results[0].tfidf == doctest::Approx(expected_tfidf));
  CHECK(results[0].combined ==
        doctest::Approx(0.5 * 0.3 + 0.5 * (expected_tfidf / (expected_tfidf + 1))));
}

TEST_CASE("search behavior across alpha and degenerate inputs") {
  auto p = fixture_pipeline();

  SUBCASE("empty index returns nothing") {
    InvertedIndex empty = InvertedIndex::build({});
    SearchConfig config;
    CHECK(search("star wars cast", empty, p.defs, p.values, config).empty());
  }
  SUBCASE("alpha = 0 orders purely by tf-idf") {
    SearchConfig config;
    config.alpha = 0.0;
    auto results = search("star wars cast", p.index, p.defs, p.values, config);
    for (std::size_t i = 1; i < results.size(); ++i) {
      CHECK(results[i - 1].tfidf >= results[i].tfidf);
    }
  }
  SUBCASE("alpha = 1 orders purely by definition match") {
    SearchConfig config;
    config.alpha = 1.0;
    auto results = search("star wars cast", p.index, p.defs, p.values, config);
    for (std::size_t i = 1; i < results.size(); ++i) {
      CHECK(results[i - 1].defmatch >= results[i].defmatch);
    }
    CHECK(results[0].definition_id == "person_profile");
  }
  SUBCASE("query with no matching tokens or values ranks by tie-break") {
    SearchConfig config;
    auto results = search("zzz qqq", p.index, p.defs, p.values, config);
    for (const auto& r : results) {
      CHECK(r.tfidf == 0.0);
      CHECK(r.defmatch == 0.0);
    }
    for (std::size_t i = 1; i < results.size(); ++i) {
      CHECK(results[i - 1].instance_id <= results[i].instance_id);
    }
  }
  SUBCASE("repeated searches are identical") {
    SearchConfig config;
    auto a = search("george clooney movies", p.index, p.defs, p.values, config);
    auto b = search("george clooney movies", p.index, p.defs, p.values, config);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].instance_id == b[i].instance_id);
      CHECK(a[i].combined == b[i].combined);
    }
  }
}

TEST_CASE("duplicating a query term in one instance raises its tf-idf") {
  auto p = fixture_pipeline();
  SearchConfig config;
  auto before = search("star wars cast", p.index, p.defs, p.values, config);

  auto instances = materialize(p.defs, p.dataset);
  for (auto& instance : instances) {
    if (instance.instance_id == "cast_of_movie/star wars") {
      instance.index_tokens.push_back("cast");
    }
  }
  InvertedIndex bumped = InvertedIndex::build(instances);
  auto after = search("star wars cast", bumped, p.defs, p.values, config);

  double tfidf_before = 0.0, tfidf_after = 0.0;
  for (const auto& r : before) {
    if (r.instance_id == "cast_of_movie/star wars") tfidf_before = r.tfidf;
  }
  for (const auto& r : after) {
    if (r.instance_id == "cast_of_movie/star wars") tfidf_after = r.tfidf;
  }
  CHECK(tfidf_after > tfidf_before);
  CHECK(after[0].instance_id == "cast_of_movie/star wars");
}

TEST_CASE("explain reports the same combined score as search") {
  auto p = fixture_pipeline();
  SearchConfig config;
  for (const auto& query : {"star wars cast", "george clooney", "batman", "zzz"}) {
    auto results = search(query, p.index, p.defs, p.values, config);
    auto ex = explain(query, p.index, p.defs, p.values, config);
    REQUIRE(ex.results.size() == results.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
      CHECK(ex.results[i].instance_id == results[i].instance_id);
      CHECK(ex.results[i].combined == results[i].combined);
    }
    CHECK(!ex.segmentations.empty());
  }
}
