#include "qunits/store.hpp"

#include "doctest.h"
#include "support.hpp"

using namespace qunits;

TEST_CASE("tokenize lowercases and splits on non-alphanumerics") {
  CHECK(tokenize("George Clooney!") == std::vector<std::string>{"george", "clooney"});
  CHECK(tokenize("  star-wars_1977 ") == std::vector<std::string>{"star", "wars", "1977"});
  CHECK(tokenize("") == std::vector<std::string>{});
}

TEST_CASE("schema parse builds the fixture: 6 tables, 5 FK edges") {
  Schema schema = test::fixture_schema();
  CHECK(schema.tables().size() == 6);
  CHECK(schema.fk_edges().size() == 5);
  CHECK(schema.table("movie").primary_key == "id");
  CHECK(schema.fk_degree("movie") == 4);
  CHECK(schema.fk_degree("info") == 1);
  CHECK(schema.is_entity_table("movie"));
  CHECK(schema.is_entity_table("person"));
  CHECK_FALSE(schema.is_entity_table("cast"));
  CHECK(schema.neighbors("cast") == std::vector<std::string>{"movie", "person"});
}

TEST_CASE("schema parse rejects bad input") {
  CHECK_THROWS_AS(Schema::parse(""), ParseError);
  CHECK_THROWS_AS(Schema::parse("table t\ncol a int\n"), IntegrityError);  // no pk
  CHECK_THROWS_AS(
      Schema::parse("table cast\ncol id int pk\ncol movie_id int\n"
                    "fk cast.movie_id -> film.id\n"),
      IntegrityError);  // unknown FK target table
  CHECK_THROWS_AS(Schema::parse("table t\ncol id int pk\ntable t\ncol id int pk\n"),
                  IntegrityError);  // duplicate table
}

TEST_CASE("ingest parses rows and enforces keys") {
  Schema schema = Schema::parse(
      "table person\ncol id int pk\ncol name text\n");
  Dataset dataset(schema);
  dataset.ingest_table("person", "id\tname\n1\ta\n2\tb\n3\tc\n");
  dataset.finalize();
  CHECK(dataset.cardinality("person") == 3);

  SUBCASE("wrong field count reports the line number") {
    Dataset bad(schema);
    try {
      bad.ingest_table("person", "id\tname\n1\ta\n2\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  SUBCASE("duplicate primary key") {
    Dataset bad(schema);
    CHECK_THROWS_AS(bad.ingest_table("person", "id\tname\n7\ta\n7\tb\n"), IntegrityError);
  }
}

TEST_CASE("finalize checks referential integrity") {
  Schema schema = Schema::parse(
      "table movie\ncol id int pk\ncol title text\n"
      "table genre\ncol id int pk\ncol movie_id int\ncol name text\n"
      "fk genre.movie_id -> movie.id\n");
  Dataset dataset(schema);
  dataset.ingest_table("movie", "id\ttitle\n1\tx\n");
  dataset.ingest_table("genre", "id\tmovie_id\tname\n1\t9\tdrama\n");
  CHECK_THROWS_AS(dataset.finalize(), IntegrityError);
}

TEST_CASE("fixture dataset loads and satisfies referential integrity") {
  Dataset dataset = test::fixture_dataset();
  CHECK(dataset.finalized());
  CHECK(dataset.total_rows() == 18);
  for (const auto& table : dataset.schema().tables()) {
    CHECK(dataset.cardinality(table.name) == 3);
  }
}

TEST_CASE("value index maps token sequences to schema elements") {
  Dataset dataset = test::fixture_dataset();
  ValueIndex index = ValueIndex::build(dataset);

  const auto* clooney = index.lookup(tokenize("george clooney"), 0, 2);
  REQUIRE(clooney != nullptr);
  CHECK(clooney->front().str() == "person.name");

  SUBCASE("a value in two columns lists both elements, entity table first") {
    const auto* batman = index.lookup(tokenize("batman"), 0, 1);
    REQUIRE(batman != nullptr);
    REQUIRE(batman->size() == 2);
    CHECK((*batman)[0].str() == "movie.title");
    CHECK((*batman)[1].str() == "cast.role");
  }
  SUBCASE("table names are indexed") {
    const auto* cast = index.lookup(tokenize("cast"), 0, 1);
    REQUIRE(cast != nullptr);
    CHECK(cast->front().is_table());
  }
  SUBCASE("empty dataset indexes only table names") {
    Schema schema = Schema::parse("table movie\ncol id int pk\ncol title text\n");
    Dataset empty(schema);
    empty.ingest_table("movie", "id\ttitle\n");
    empty.finalize();
    ValueIndex idx = ValueIndex::build(empty);
    CHECK(idx.size() == 1);
    CHECK(idx.lookup(tokenize("movie"), 0, 1) != nullptr);
  }
  SUBCASE("integer key columns are not indexed") {
    CHECK(index.lookup(tokenize("1"), 0, 1) == nullptr);
  }
}

TEST_CASE("match_values picks leftmost-longest, non-overlapping") {
  Dataset dataset = test::fixture_dataset();
  ValueIndex index = ValueIndex::build(dataset);

  SUBCASE("george clooney movies") {
    auto matches = match_values(tokenize("george clooney movies"), index);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].begin == 0);
    CHECK(matches[0].end == 2);
    CHECK(matches[0].element.str() == "person.name");
    CHECK(matches[0].matched_text == "george clooney");
  }
  SUBCASE("star wars cast resolves the value then the table") {
    auto matches = match_values(tokenize("star wars cast"), index);
    REQUIRE(matches.size() == 2);
    CHECK(matches[0].element.str() == "movie.title");
    CHECK(matches[0].begin == 0);
    CHECK(matches[0].end == 2);
    CHECK(matches[1].element.str() == "cast");
    CHECK(matches[1].element.is_table());
    CHECK(matches[1].begin == 2);
    CHECK(matches[1].end == 3);
  }
  SUBCASE("no match yields the empty list") {
    CHECK(match_values(tokenize("zzz qqq"), index).empty());
  }
  SUBCASE("ambiguous single value resolves to the entity table") {
    auto matches = match_values(tokenize("batman"), index);
    REQUIRE(matches.size() == 1);
    CHECK(matches[0].element.str() == "movie.title");
  }
}

TEST_CASE("match_values invariants: disjoint, sorted, reconstructs the query") {
  Dataset dataset = test::fixture_dataset();
  ValueIndex index = ValueIndex::build(dataset);

  const std::vector<std::string> queries = {
      "star wars cast",       "george clooney batman",   "tom hanks castaway",
      "batman george clooney", "scifi star wars tunisia", "zzz star wars zzz",
  };
  for (const auto& query : queries) {
    auto tokens = tokenize(query);
    auto matches = match_values(tokens, index);
    std::size_t prev_end = 0;
    for (const auto& m : matches) {
      CHECK(m.begin >= prev_end);
      CHECK(m.begin < m.end);
      CHECK(m.end <= tokens.size());
      prev_end = m.end;
    }
    // Repeated calls are identical.
    auto again = match_values(tokens, index);
    REQUIRE(again.size() == matches.size());
    for (std::size_t i = 0; i < matches.size(); ++i) {
      CHECK(again[i].begin == matches[i].begin);
      CHECK(again[i].element.str() == matches[i].element.str());
    }
  }

  SUBCASE("a query that is exactly one stored value matches fully") {
    for (const auto& value : {"george clooney", "star wars", "tunisia", "jedi"}) {
      auto tokens = tokenize(value);
      auto matches = match_values(tokens, index);
      REQUIRE(matches.size() == 1);
      CHECK(matches[0].begin == 0);
      CHECK(matches[0].end == tokens.size());
    }
  }
}

TEST_CASE("representative text column is the highest-distinct-ratio text column") {
  Dataset dataset = test::fixture_dataset();
  CHECK(*representative_text_column(dataset, "movie") == "title");
  CHECK(*representative_text_column(dataset, "person") == "name");
  CHECK(*representative_text_column(dataset, "cast") == "role");
}
