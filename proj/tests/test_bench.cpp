#include "qunits/bench.hpp"

#include "doctest.h"
#include "support.hpp"

using namespace qunits;

TEST_CASE("extract_templates aggregates typed patterns by frequency") {
  Dataset dataset = test::fixture_dataset();
  ValueIndex index = ValueIndex::build(dataset);
  const Schema& schema = dataset.schema();

  SUBCASE("queries sharing a pattern merge and sum") {
    QueryLog log{{"george clooney movies", 3}, {"tom hanks movies", 2}};
    auto templates = extract_templates(log, index, schema);
    REQUIRE(templates.size() == 1);
    CHECK(templates[0].str() == "[person.name] movies");
    CHECK(templates[0].frequency == 5);
  }
  SUBCASE("empty log") {
    CHECK(extract_templates({}, index, schema).empty());
  }
  SUBCASE("untypable query becomes an all-literal template") {
    QueryLog log{{"space transponders", 1}};
    auto templates = extract_templates(log, index, schema);
    REQUIRE(templates.size() == 1);
    CHECK(templates[0].str() == "space transponders");
    CHECK(templates[0].slot_count() == 0);
  }
  SUBCASE("frequency mass is conserved") {
    QueryLog log{{"star wars", 4}, {"batman", 2}, {"star wars cast", 3},
                 {"space transponders", 1}};
    long total = 0;
    for (const auto& [q, f] : log) total += f;
    long sum = 0;
    for (const auto& t : extract_templates(log, index, schema)) sum += t.frequency;
    CHECK(sum == total);
  }
}

TEST_CASE("gold map parsing") {
  auto gold = parse_gold_map(test::read_file(test::fixture_dir() + "/gold.tsv"));
  REQUIRE(gold.count("[movie.title] cast") == 1);
  const auto& spec = gold.at("[movie.title] cast");
  CHECK(spec.definition_id == "cast_of_movie");
  CHECK(spec.required == std::set<std::string>{"person.name"});
  CHECK(spec.forbidden == std::set<std::string>{"genre.name", "info.plot"});
  CHECK_THROWS_AS(parse_gold_map("t\td\trequired:a\tforbidden:a\n"), IntegrityError);
  CHECK_THROWS_AS(parse_gold_map("only two\tfields\n"), ParseError);
}

TEST_CASE("make_benchmark samples per-template queries deterministically") {
  Dataset dataset = test::fixture_dataset();
  ValueIndex index = ValueIndex::build(dataset);
  const Schema& schema = dataset.schema();
  auto gold = parse_gold_map(test::read_file(test::fixture_dir() + "/gold.tsv"));
  auto log = parse_query_log(test::read_file(test::fixture_dir() + "/querylog.tsv"));
  auto templates = extract_templates(log, index, schema);

  BenchmarkConfig config;  // desk default: top 3 templates, 2 queries each
  auto bench = make_benchmark(templates, log, config, gold, index, schema);
  CHECK(bench.queries.size() == 6);
  for (const auto& bq : bench.queries) {
    CHECK(type_query(bq.text, index, schema).str() == bq.template_str);
    CHECK(!bq.gold.anchor_value.empty());
  }

  SUBCASE("same seed, same benchmark") {
    auto again = make_benchmark(templates, log, config, gold, index, schema);
    REQUIRE(again.queries.size() == bench.queries.size());
    for (std::size_t i = 0; i < bench.queries.size(); ++i) {
      CHECK(again.queries[i].text == bench.queries[i].text);
    }
  }
  SUBCASE("missing gold template is skipped with a warning") {
    std::map<std::string, GoldSpec> empty_gold;
    auto b = make_benchmark(templates, log, config, empty_gold, index, schema);
    CHECK(b.queries.empty());
    CHECK(b.warnings.size() == 3);
  }
}

TEST_CASE("score_result implements the three-level rubric") {
  GoldSpec gold;
  gold.definition_id = "movie_overview";
  gold.anchor_value = "star wars";
  gold.required = {"genre.name", "locations.place"};
  gold.forbidden = {"info.plot"};

  SUBCASE("exact match scores 1.0") {
    AlgoResult result;
    result.has_result = true;
    result.anchor = "star wars";
    result.elements = {"movie.title", "genre.name", "locations.place"};
    auto scored = score_result(result, gold);
    CHECK(scored.score == 1.0);
    CHECK(scored.branch == ScoreBranch::Correct);
  }
  SUBCASE("correct anchor, one required element missing: 0.5, incomplete") {
    AlgoResult result;
    result.has_result = true;
    result.anchor = "star wars";
    result.elements = {"genre.name"};
    auto scored = score_result(result, gold);
    CHECK(scored.score == 0.5);
    CHECK(scored.branch == ScoreBranch::Incomplete);
  }
  SUBCASE("correct anchor, all required plus forbidden: 0.5, excessive") {
    AlgoResult result;
    result.has_result = true;
    result.anchor = "star wars";
    result.elements = {"genre.name", "locations.place", "info.plot"};
    auto scored = score_result(result, gold);
    CHECK(scored.score == 0.5);
    CHECK(scored.branch == ScoreBranch::Excessive);
  }
  SUBCASE("wrong anchor scores 0") {
    AlgoResult result;
    result.has_result = true;
    result.anchor = "batman";
    result.elements = {"genre.name", "locations.place"};
    auto scored = score_result(result, gold);
    CHECK(scored.score == 0.0);
    CHECK(scored.branch == ScoreBranch::Incorrect);
  }
  SUBCASE("correct anchor with nothing beyond it scores 0") {
    AlgoResult result;
    result.has_result = true;
    result.anchor = "star wars";
    result.elements = {"movie.title"};
    auto scored = score_result(result, gold);
    CHECK(scored.score == 0.0);
    CHECK(scored.branch == ScoreBranch::Uninformative);
  }
}

TEST_CASE("run_comparison aggregates per-query scores into means") {
  Benchmark bench;
  for (int i = 0; i < 4; ++i) {
    BenchQuery q;
    q.text = "query " + std::to_string(i);
    q.gold.definition_id = "d";
    q.gold.anchor_value = "a";
    q.gold.required = {"x.y"};
    bench.queries.push_back(q);
  }

  Adapter perfect = [](const std::string&) {
    AlgoResult r;
    r.has_result = true;
    r.anchor = "a";
    r.elements = {"x.y"};
    return r;
  };
  Adapter empty = [](const std::string&) { return AlgoResult{}; };

  auto report = run_comparison(bench, {{"perfect", perfect}, {"empty", empty}});
  CHECK(report.means[0] == doctest::Approx(1.0));
  CHECK(report.means[1] == doctest::Approx(0.0));

  SUBCASE("means are invariant under query permutation") {
    Benchmark shuffled = bench;
    std::swap(shuffled.queries[0], shuffled.queries[3]);
    std::swap(shuffled.queries[1], shuffled.queries[2]);
    auto report2 = run_comparison(shuffled, {{"perfect", perfect}, {"empty", empty}});
    CHECK(report2.means[0] == doctest::Approx(report.means[0]));
    CHECK(report2.means[1] == doctest::Approx(report.means[1]));
  }
  SUBCASE("a throwing adapter scores zero and is logged") {
    Adapter broken = [](const std::string&) -> AlgoResult {
      throw std::runtime_error("boom");
    };
    auto report3 = run_comparison(bench, {{"broken", broken}});
    CHECK(report3.means[0] == doctest::Approx(0.0));
    bool logged = false;
    for (const auto& note : report3.notes) {
      if (note.find("failed") != std::string::npos) logged = true;
    }
    CHECK(logged);
  }
  SUBCASE("report prints queries, algorithms, and a means row") {
    auto tsv = report.to_tsv();
    CHECK(tsv.find("query\tperfect\tempty\n") == 0);
    CHECK(tsv.find("\nmean\t1.0000\t0.0000\n") != std::string::npos);
  }
}

TEST_CASE("the synthetic log generator hits the documented shape") {
  Dataset dataset = test::fixture_dataset();
  ValueIndex index = ValueIndex::build(dataset);

  auto generated = generate_query_log(dataset, index, desk_log_shape(), 42);
  long total = long(generated.entries.size());
  REQUIRE(total > 0);

  auto pct = [&](QueryCategory c) {
    auto it = generated.counts.find(c);
    long n = it == generated.counts.end() ? 0 : it->second;
    return 100.0 * double(n) / double(total);
  };
  CHECK(pct(QueryCategory::SingleEntity) >= 34.0);
  CHECK(pct(QueryCategory::EntityAttribute) >= 18.0);
  CHECK(pct(QueryCategory::EntityAttribute) <= 22.0);
  CHECK(pct(QueryCategory::TwoEntity) <= 4.0);
  CHECK(pct(QueryCategory::TwoEntity) > 0.0);

  SUBCASE("every generated query categorizes as intended") {
    const Schema& schema = dataset.schema();
    std::map<QueryCategory, int> recount;
    for (const auto& [query, freq] : generated.entries) {
      recount[categorize(type_query(query, index, schema))] += 1;
    }
    CHECK(recount == generated.counts);
  }
  SUBCASE("generation is deterministic in the seed") {
    auto again = generate_query_log(dataset, index, desk_log_shape(), 42);
    CHECK(serialize_query_log(again.entries) ==
          serialize_query_log(generated.entries));
  }
  SUBCASE("the committed fixture log is the seed-42 desk output") {
    auto fixture = test::read_file(test::fixture_dir() + "/querylog.tsv");
    CHECK(fixture == serialize_query_log(generated.entries));
  }
  SUBCASE("the rich shape supports 14 templates with 2 queries each") {
    auto rich = generate_query_log(dataset, index, rich_log_shape(), 42);
    const Schema& schema = dataset.schema();
    std::map<std::string, std::set<std::string>> queries_per_template;
    for (const auto& [query, freq] : rich.entries) {
      queries_per_template[type_query(query, index, schema).str()].insert(query);
    }
    int multi = 0;
    for (const auto& [tmpl, queries] : queries_per_template) {
      if (queries.size() >= 2) ++multi;
    }
    CHECK(multi >= 14);
  }
}
