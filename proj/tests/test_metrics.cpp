#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "attnplaus/errors.hpp"
#include "attnplaus/maps_io.hpp"
#include "attnplaus/metrics.hpp"
#include "attnplaus/rng.hpp"

using namespace attnplaus;

namespace {

SentencePair simple_pair(const std::string& id, std::size_t n, std::size_t m,
                         std::vector<std::uint8_t> ph, std::vector<std::uint8_t> hh) {
  SentencePair p;
  p.pair_id = id;
  for (std::size_t i = 0; i < n; ++i)
    p.premise.push_back(Token{"p" + std::to_string(i), "p" + std::to_string(i), false, {}});
  for (std::size_t j = 0; j < m; ++j)
    p.hypothesis.push_back(Token{"h" + std::to_string(j), "h" + std::to_string(j), false, {}});
  p.premise_highlight = std::move(ph);
  p.hypothesis_highlight = std::move(hh);
  return p;
}

}  // namespace

TEST_CASE("binarize") {
  CHECK(binarize({0.2, 0.7}, 0.5) == std::vector<std::uint8_t>{0, 1});
  CHECK(binarize({0.2, 0.7}, 0.0) == std::vector<std::uint8_t>{1, 1});
  CHECK(binarize({0.2, 1.0}, 1.0) == std::vector<std::uint8_t>{0, 1});
  CHECK_THROWS_AS(binarize({0.5}, -0.1), RangeError);
  CHECK_THROWS_AS(binarize({0.5}, 1.1), RangeError);
}

TEST_CASE("default grid") {
  auto grid = make_default_grid();
  CHECK(grid.size() == 518);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == 1.0);
  CHECK(std::is_sorted(grid.begin(), grid.end()));
  for (double checkpoint : {0.4, 0.5, 0.6, 0.7, 0.8, 0.9})
    CHECK(std::count(grid.begin(), grid.end(), checkpoint) == 1);
}

TEST_CASE("roc hand enumeration") {
  RocCurve c = roc_curve({0.9, 0.8, 0.1}, {1, 1, 0}, {0.05, 0.5, 0.95});
  REQUIRE(c.points.size() == 4);  // inf anchor + 3
  CHECK(std::isinf(c.points[0].epsilon));
  CHECK(c.points[0].tpr == 0.0);
  CHECK(c.points[0].fpr == 0.0);
  CHECK(c.points[1].epsilon == 0.95);
  CHECK(c.points[1].tpr == 0.0);
  CHECK(c.points[1].fpr == 0.0);
  CHECK(c.points[2].epsilon == 0.5);
  CHECK(c.points[2].tpr == 1.0);
  CHECK(c.points[2].fpr == 0.0);
  CHECK(c.points[3].epsilon == 0.05);
  CHECK(c.points[3].tpr == 1.0);
  CHECK(c.points[3].fpr == 1.0);
  CHECK(auc(c) == doctest::Approx(1.0));
}

TEST_CASE("roc perfect and chance") {
  auto grid = make_default_grid();
  RocCurve perfect = roc_curve({1, 1, 0, 0}, {1, 1, 0, 0}, grid);
  bool hits_corner = false;
  for (const auto& p : perfect.points)
    if (p.fpr == 0.0 && p.tpr == 1.0) hits_corner = true;
  CHECK(hits_corner);
  CHECK(auc(perfect) == doctest::Approx(1.0));

  RocCurve chance = roc_curve({0.3, 0.3, 0.3, 0.3}, {1, 0, 1, 0}, grid);
  CHECK(auc(chance) == doctest::Approx(0.5));
  for (const auto& p : chance.points) CHECK(p.tpr == doctest::Approx(p.fpr));
}

TEST_CASE("roc degenerate truth") {
  CHECK_THROWS_AS(roc_curve({0.5, 0.6}, {0, 0}, {0.5}), DegenerateTruth);
  CHECK_THROWS_AS(roc_curve({0.5, 0.6}, {1, 1}, {0.5}), DegenerateTruth);
  CHECK_THROWS_AS(roc_curve({0.5}, {1, 0}, {0.5}), DimensionError);
}

TEST_CASE("roc monotone as epsilon falls") {
  DetRng rng(3);
  auto grid = make_default_grid();
  for (int trial = 0; trial < 20; ++trial) {
    std::size_t n = 5 + rng.next_index(40);
    std::vector<double> scores(n);
    std::vector<std::uint8_t> truth(n);
    bool has0 = false, has1 = false;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = rng.next_double();
      truth[i] = rng.bernoulli(0.4) ? 1 : 0;
      (truth[i] ? has1 : has0) = true;
    }
    if (!has0 || !has1) continue;
    RocCurve c = roc_curve(scores, truth, grid);
    for (std::size_t k = 1; k < c.points.size(); ++k) {
      CHECK(c.points[k].tpr >= c.points[k - 1].tpr);
      CHECK(c.points[k].fpr >= c.points[k - 1].fpr);
    }
  }
}

TEST_CASE("auc pair-count example") {
  CHECK(auc_scores({0.9, 0.8, 0.1}, {1, 1, 0}) == doctest::Approx(1.0));
  // one concordant, one tie: (1 + 0.5) / 2
  CHECK(auc_scores({0.7, 0.7, 0.2}, {1, 0, 0}) == doctest::Approx(0.75));
}

TEST_CASE("auc trapezoid equals pair counting on random instances") {
  DetRng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t n = 4 + rng.next_index(17);
    std::vector<double> scores(n);
    std::vector<std::uint8_t> truth(n);
    bool has0 = false, has1 = false;
    for (std::size_t i = 0; i < n; ++i) {
      // quantized so ties actually happen
      scores[i] = rng.next_index(8) / 7.0;
      truth[i] = rng.bernoulli(0.5) ? 1 : 0;
      (truth[i] ? has1 : has0) = true;
    }
    if (!has0 || !has1) continue;
    std::vector<double> grid = scores;  // all distinct score values
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    double a1 = auc(roc_curve(scores, truth, grid));
    double a2 = auc_scores(scores, truth);
    CHECK(std::fabs(a1 - a2) < 1e-9);
  }
}

TEST_CASE("average ranks") {
  CHECK(average_ranks({10, 20, 20, 30}) == std::vector<double>{1.0, 2.5, 2.5, 4.0});
  CHECK(average_ranks({5, 5, 5}) == std::vector<double>{2.0, 2.0, 2.0});
  CHECK(average_ranks({3, 1, 2}) == std::vector<double>{3.0, 1.0, 2.0});
}

TEST_CASE("pearson examples") {
  CHECK(pearson_r({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
  CHECK(pearson_r({1, 2, 3, 4}, {1, 3, 2, 4}) == doctest::Approx(0.8));
  CHECK_THROWS_AS(pearson_r({1, 1, 1}, {1, 2, 3}), UndefinedCorrelation);
  CHECK_THROWS_AS(pearson_r({1, 2}, {1, 2}), UndefinedCorrelation);
  CHECK_THROWS_AS(pearson_r({1, 2, 3}, {1, 2}), DimensionError);
}

TEST_CASE("pearson exact permutation p") {
  Correlation c = pearson({1, 2, 3, 4}, {1, 3, 2, 4});
  CHECK(c.coefficient == doctest::Approx(0.8));
  // permutations of y with |r| >= 0.8: 4 at +0.8 and above, 4 mirrored
  CHECK(c.p_value == doctest::Approx(8.0 / 24.0));

  Correlation perfect = pearson({1, 2, 3, 4}, {2, 4, 6, 8});
  CHECK(perfect.coefficient == doctest::Approx(1.0));
  CHECK(perfect.p_value == doctest::Approx(2.0 / 24.0));  // identity and reversal
}

TEST_CASE("spearman examples") {
  CHECK(spearman_rho({1, 2, 3, 4}, {10, 100, 1000, 10000}) == doctest::Approx(1.0));
  CHECK(spearman_rho({1, 2, 3}, {3, 1, 2}) == doctest::Approx(-0.5));
  CHECK_THROWS_AS(spearman_rho({1, 2, 3}, {7, 7, 7}), UndefinedCorrelation);
}

TEST_CASE("pearson affine invariance, spearman monotone invariance") {
  DetRng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t n = 5 + rng.next_index(15);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform(-3, 3);
      y[i] = rng.uniform(-3, 3);
    }
    double r = pearson_r(x, y);
    double rho = spearman_rho(x, y);

    double a = rng.uniform(0.1, 5.0), b = rng.uniform(-10, 10);
    std::vector<double> xa(n), ymono(n);
    for (std::size_t i = 0; i < n; ++i) {
      xa[i] = a * x[i] + b;
      ymono[i] = std::exp(0.8 * y[i]) + y[i];  // strictly increasing
    }
    CHECK(pearson_r(xa, y) == doctest::Approx(r).epsilon(1e-10));
    CHECK(spearman_rho(x, ymono) == doctest::Approx(rho).epsilon(1e-12));
    CHECK(spearman_rho(xa, y) == doctest::Approx(rho).epsilon(1e-12));
  }
}

TEST_CASE("permutation p tracks t approximation") {
  DetRng rng(31);
  for (int trial = 0; trial < 15; ++trial) {
    std::vector<double> x(7), y(7);
    for (std::size_t i = 0; i < 7; ++i) {
      x[i] = rng.uniform(0, 1);
      y[i] = rng.uniform(0, 1);
    }
    Correlation c = pearson(x, y);
    double p_t = corr_t_p_value(c.coefficient, 7);
    CHECK(std::fabs(c.p_value - p_t) < 0.1);
  }
}

TEST_CASE("t p-value behaves") {
  CHECK(corr_t_p_value(0.0, 100) == doctest::Approx(1.0));
  CHECK(corr_t_p_value(1.0, 100) == 0.0);
  double p_strong = corr_t_p_value(0.5, 10000);
  CHECK(p_strong < 1e-10);
  double p_weak = corr_t_p_value(0.05, 20);
  CHECK(p_weak > 0.5);
  // symmetric in sign
  CHECK(corr_t_p_value(-0.3, 50) == doctest::Approx(corr_t_p_value(0.3, 50)));
}

TEST_CASE("to_distribution") {
  CHECK(to_distribution({1, 0, 1, 0}) == std::vector<double>{0.5, 0, 0.5, 0});
  CHECK(to_distribution({0, 0, 0}) ==
        std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3});
  std::vector<double> soft = {0.2, 0.3, 0.5};
  CHECK(to_distribution(soft) == soft);
  CHECK_THROWS_AS(to_distribution({}), EmptyVector);
  CHECK_THROWS_AS(to_distribution({-1, 2}), RangeError);
}

TEST_CASE("js divergence") {
  std::vector<double> p = {0.25, 0.25, 0.5};
  CHECK(js_divergence(p, p) == 0.0);
  CHECK(std::fabs(js_divergence({1, 0}, {0, 1}) - std::log(2.0)) < 1e-12);
  CHECK_THROWS_AS(js_divergence({1, 0}, {0.5, 0.25, 0.25}), DimensionError);
  CHECK_THROWS_AS(js_divergence({0.9, 0.2}, {0.5, 0.5}), RangeError);

  DetRng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t n = 2 + rng.next_index(6);
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform(0, 1);
      b[i] = rng.uniform(0, 1);
    }
    a = to_distribution(a);
    b = to_distribution(b);
    double ab = js_divergence(a, b);
    CHECK(ab >= 0.0);
    CHECK(ab <= std::log(2.0));
    CHECK(js_divergence(b, a) == doctest::Approx(ab).epsilon(1e-12));
  }
}

TEST_CASE("per_instance stats") {
  std::vector<AttentionMap> cand = {
      {"a", {0.1, 0.9, 0.3}, {0.5, 0.2, 0.8, 0.1}},
      {"b", {0.4, 0.4}, {0.9, 0.1, 0.5}},  // premise too short -> one skip
  };
  PerInstanceStats same = per_instance_stats(cand, cand);
  CHECK(same.skipped == 1);
  CHECK(same.premise.size() + same.hypothesis.size() == 2 * 2 - 1);
  for (const auto& s : same.premise) {
    CHECK(s.js == doctest::Approx(0.0));
    CHECK(s.spearman == doctest::Approx(1.0));
    CHECK(s.pearson == doctest::Approx(1.0));
  }

  std::vector<AttentionMap> constant_ref = {
      {"a", {0.5, 0.5, 0.5}, {0.5, 0.2, 0.8, 0.1}},
      {"b", {0.4, 0.4}, {0.9, 0.1, 0.5}},
  };
  PerInstanceStats skipping = per_instance_stats(cand, constant_ref);
  CHECK(skipping.skipped == 2);  // short premise of b + constant premise of a

  std::vector<AttentionMap> wrong_order = {cand[1], cand[0]};
  CHECK_THROWS_AS(per_instance_stats(cand, wrong_order), SchemaError);
}

TEST_CASE("rescale by sentence max") {
  std::vector<AttentionMap> maps = {{"a", {0.2, 0.4}, {0, 0, 0}}};
  auto scaled = rescale_by_sentence_max(maps);
  CHECK(scaled[0].premise == std::vector<double>{0.5, 1.0});
  CHECK(scaled[0].hypothesis == std::vector<double>{0, 0, 0});
  // already min-max scaled input is untouched
  std::vector<AttentionMap> mm = {{"a", {0.0, 0.5, 1.0}, {1.0}}};
  CHECK(rescale_by_sentence_max(mm)[0].premise == mm[0].premise);
}

TEST_CASE("align maps to corpus order") {
  Dataset d;
  d.pairs.push_back(simple_pair("a", 2, 2, {0, 1}, {1, 0}));
  d.pairs.push_back(simple_pair("b", 3, 2, {0, 0, 1}, {0, 1}));

  std::vector<AttentionMap> maps = {
      {"b", {0.1, 0.2, 0.3}, {0.4, 0.5}},
      {"a", {0.6, 0.7}, {0.8, 0.9}},
      {"extra", {0.5}, {0.5}},
  };
  auto aligned = align_maps(d, maps);
  REQUIRE(aligned.size() == 2);
  CHECK(aligned[0].pair_id == "a");
  CHECK(aligned[1].pair_id == "b");

  std::vector<AttentionMap> missing = {maps[0]};
  CHECK_THROWS_AS(align_maps(d, missing), SchemaError);

  std::vector<AttentionMap> wrong_len = {{"a", {0.6}, {0.8, 0.9}}, maps[0]};
  CHECK_THROWS_AS(align_maps(d, wrong_len), DimensionError);

  std::vector<AttentionMap> dup = {maps[0], maps[0]};
  CHECK_THROWS_AS(align_maps(d, dup), SchemaError);
}

TEST_CASE("auc_vs_epsilon crafted table") {
  std::vector<AttentionMap> heur = {{"a", {1.0, 0.5, 0.0}, {1.0, 0.0}}};
  std::vector<AttentionMap> human = {{"a", {1, 1, 0}, {1, 0}}};
  std::vector<AttentionMap> model = {{"a", {0.2, 0.9, 0.1}, {0.3, 0.8}}};

  AucEpsilonTable t = auc_vs_epsilon(heur, human, &model, {0.25, 0.75});
  REQUIRE(t.rows.size() == 2);
  REQUIRE(t.rows[0].auc_human.has_value());
  CHECK(*t.rows[0].auc_human == doctest::Approx(1.0));
  CHECK(*t.rows[0].auc_model == doctest::Approx(2.0 / 3.0));
  CHECK(*t.rows[1].auc_human == doctest::Approx(5.0 / 6.0));
  CHECK(*t.rows[1].auc_model == doctest::Approx(1.0 / 3.0));
  CHECK(t.fraction_human_better == doctest::Approx(1.0));
  CHECK(t.undefined_points == 0);

  // epsilon 0 selects every token: pseudo-truth degenerate, row excluded
  AucEpsilonTable t2 = auc_vs_epsilon(heur, human, &model, {0.0, 0.25, 0.75});
  CHECK(t2.undefined_points == 1);
  CHECK(!t2.rows[0].auc_human.has_value());
  CHECK(t2.fraction_human_better == doctest::Approx(1.0));

  AucEpsilonTable no_model = auc_vs_epsilon(heur, human, nullptr, {0.25, 0.75});
  CHECK(std::isnan(no_model.fraction_human_better));
  CHECK(no_model.rows[0].auc_human.has_value());
  CHECK(!no_model.rows[0].auc_model.has_value());
}

TEST_CASE("auc_vs_epsilon fraction matches its own rows") {
  DetRng rng(53);
  std::vector<AttentionMap> heur, human, model;
  for (int k = 0; k < 8; ++k) {
    std::size_t n = 3 + rng.next_index(6), m = 3 + rng.next_index(6);
    AttentionMap h{"p" + std::to_string(k), {}, {}}, u = h, mo = h;
    for (std::size_t i = 0; i < n; ++i) {
      h.premise.push_back(rng.next_double());
      u.premise.push_back(rng.bernoulli(0.3) ? 1.0 : 0.0);
      mo.premise.push_back(rng.next_double());
    }
    for (std::size_t j = 0; j < m; ++j) {
      h.hypothesis.push_back(rng.next_double());
      u.hypothesis.push_back(rng.bernoulli(0.3) ? 1.0 : 0.0);
      mo.hypothesis.push_back(rng.next_double());
    }
    heur.push_back(h);
    human.push_back(u);
    model.push_back(mo);
  }
  AucEpsilonTable t = auc_vs_epsilon(heur, human, &model, make_default_grid());
  std::size_t defined = 0, better = 0;
  for (const auto& row : t.rows) {
    if (!row.auc_human.has_value()) continue;
    ++defined;
    if (*row.auc_human > *row.auc_model) ++better;
  }
  CHECK(defined + t.undefined_points == t.rows.size());
  CHECK(t.fraction_human_better ==
        doctest::Approx(static_cast<double>(better) / defined));
}

TEST_CASE("evaluate on self-consistent maps") {
  Dataset d;
  d.pairs.push_back(simple_pair("a", 3, 4, {0, 1, 0}, {0, 0, 1, 0}));
  d.pairs.push_back(simple_pair("b", 4, 3, {1, 0, 0, 0}, {0, 1, 0}));
  std::vector<AttentionMap> cand = masks_as_maps(d);

  EvalReport r = evaluate(d, cand, nullptr, make_default_grid());
  CHECK(r.pair_count == 2);
  CHECK(r.auc_value == doctest::Approx(1.0));
  // exactly one highlight per sentence: normalized human mask equals the
  // candidate, so the correlation is perfect
  CHECK(r.global.pearson_general.coefficient == doctest::Approx(1.0));
  CHECK(r.global.spearman_general.coefficient == doctest::Approx(1.0));
  CHECK(r.global.pearson_general.p_value < 1e-3);
  CHECK(r.per_instance.skipped == 0);
  for (const auto& s : r.per_instance.premise) {
    CHECK(s.js == doctest::Approx(0.0));
    CHECK(s.pearson == doctest::Approx(1.0));
  }

  std::vector<AttentionMap> misordered = {cand[1], cand[0]};
  CHECK_THROWS_AS(evaluate(d, misordered, nullptr, make_default_grid()), SchemaError);
}

TEST_CASE("maps jsonl round trip") {
  std::vector<AttentionMap> maps = {
      {"a", {0.125, 0.5, 1.0}, {0.0, 0.25}},
      {"b", {0.3333333333333333}, {1.0, 0.0, 0.7}},
  };
  write_maps_jsonl(maps, "tmp_maps.jsonl");
  auto back = read_maps_jsonl("tmp_maps.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[0].pair_id == "a");
  CHECK(back[0].premise == maps[0].premise);
  CHECK(back[1].hypothesis == maps[1].hypothesis);

  // byte-stable output
  write_maps_jsonl(maps, "tmp_maps2.jsonl");
  std::ifstream f1("tmp_maps.jsonl"), f2("tmp_maps2.jsonl");
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  std::remove("tmp_maps.jsonl");
  std::remove("tmp_maps2.jsonl");
}

TEST_CASE("maps jsonl rejects bad input") {
  auto write = [](const std::string& body) {
    std::ofstream out("tmp_badmaps.jsonl", std::ios::binary);
    out << body;
  };
  write("{\"pair_id\": \"a\", \"premise\": [0.5], \"hypothesis\": [1]}\nnot json\n");
  CHECK_THROWS_AS(read_maps_jsonl("tmp_badmaps.jsonl"), FormatError);
  write("{\"pair_id\": \"a\", \"premise\": [-0.5], \"hypothesis\": [1]}\n");
  CHECK_THROWS_AS(read_maps_jsonl("tmp_badmaps.jsonl"), FormatError);
  write("{\"pair_id\": \"a\", \"premise\": [0.5]}\n");
  CHECK_THROWS_AS(read_maps_jsonl("tmp_badmaps.jsonl"), FormatError);
  write("");
  CHECK_THROWS_AS(read_maps_jsonl("tmp_badmaps.jsonl"), DataError);
  std::remove("tmp_badmaps.jsonl");
  CHECK_THROWS_AS(read_maps_jsonl("tmp_badmaps.jsonl"), IoError);
}

TEST_CASE("report json and roc csv") {
  Dataset d;
  d.pairs.push_back(simple_pair("a", 3, 3, {0, 1, 0}, {1, 0, 0}));
  d.pairs.push_back(simple_pair("b", 3, 3, {0, 0, 1}, {0, 1, 0}));
  std::vector<AttentionMap> cand = masks_as_maps(d);
  EvalReport r = evaluate(d, cand, nullptr, {0.0, 0.5, 1.0});

  std::string json_text = report_to_json(r);
  CHECK(json_text.find("\"auc\"") != std::string::npos);
  CHECK(json_text.find("\"epsilon\": \"inf\"") != std::string::npos);
  CHECK(json_text.find("\"fraction_human_better\": null") != std::string::npos);
  CHECK(json_text.find("\"global_correlation\"") != std::string::npos);

  std::string csv = roc_to_csv(r.roc);
  CHECK(csv.rfind("epsilon,tpr,fpr\n", 0) == 0);
  CHECK(csv.find("inf,0,0\n") != std::string::npos);
  CHECK(report_to_json(r) == json_text);  // deterministic
}
