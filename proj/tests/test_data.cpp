#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "helpers.hpp"
#include "mpn/data.hpp"

using namespace mpn;

namespace {

Dataset random_dataset(Rng& rng, std::size_t n) {
  Dataset ds;
  ds.meta = DatasetMeta{3, 5, 2, 2, 1, {"a", "b"}, DataSource::synthetic};
  for (std::size_t i = 0; i < n; ++i) ds.samples.push_back(testing::random_sample(rng, ds.meta.model_dims()));
  return ds;
}

std::string serialize(const Dataset& ds) {
  std::ostringstream out;
  write_dataset(out, ds);
  return out.str();
}

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("round trip is bit-exact") {
    Rng rng(1);
    Dataset ds = random_dataset(rng, 7);
    ds.samples[0].z(0, 0) = 0.1 + 0.2;
    ds.samples[0].c(1, 0) = -1e-300;
    const std::string text = serialize(ds);
    std::istringstream in(text);
    const Dataset back = read_dataset(in);
    CHECK(back.meta == ds.meta);
    CHECK(back.samples == ds.samples);
    CHECK(serialize(back) == text);

    const auto dir = testing::scratch_dir("data_roundtrip");
    save_dataset(dir / "d.jsonl", ds);
    CHECK(load_dataset(dir / "d.jsonl").samples == ds.samples);
  }

  TEST_CASE("empty dataset keeps its header") {
    Rng rng(2);
    const Dataset ds = random_dataset(rng, 0);
    std::istringstream in(serialize(ds));
    const Dataset back = read_dataset(in);
    CHECK(back.samples.empty());
    CHECK(back.meta == ds.meta);
  }

  TEST_CASE("segment labels must agree with stepwise labels") {
    Rng rng(3);
    Dataset ds = random_dataset(rng, 2);
    ds.samples[1].o_true(0, 1) = 1.0;
    ds.samples[1].y_true[1] = 0.0;
    try {
      validate_sample(ds.meta, ds.samples[1], 1);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("1") != std::string::npos);
      CHECK(msg.find("segment label") != std::string::npos);
    }
    std::istringstream in(serialize(ds));
    CHECK_THROWS_AS(read_dataset(in), DataError);
  }

  TEST_CASE("other validation rules") {
    Rng rng(4);
    const Dataset ds = random_dataset(rng, 1);
    Sample s = ds.samples[0];
    s.z = Matrix(2, 2);
    CHECK_THROWS_AS(validate_sample(ds.meta, s, 0), DataError);
    s = ds.samples[0];
    s.c(0, 0) = std::nan("");
    CHECK_THROWS_AS(validate_sample(ds.meta, s, 0), DataError);
    s = ds.samples[0];
    s.o_true(0, 0) = 0.5;
    CHECK_THROWS_AS(validate_sample(ds.meta, s, 0), DataError);

    std::istringstream bad_header("{\"format\":\"other\"}\n");
    CHECK_THROWS_AS(read_dataset(bad_header), DataError);
    std::istringstream nothing("");
    CHECK_THROWS_AS(read_dataset(nothing), DataError);
    DatasetMeta m = ds.meta;
    m.history = 5;
    CHECK_THROWS_AS(m.validate(), DataError);
  }

  TEST_CASE("segment labels from stepwise labels") {
    CHECK(segment_from_stepwise(Matrix{{0, 1, 0}, {0, 1, 1}}) == Vector{0, 1, 1});
    CHECK(segment_from_stepwise(Matrix(3, 2)) == Vector{0, 0});
  }

  TEST_CASE("split") {
    Rng rng(5);
    std::vector<Sample> samples;
    for (int i = 0; i < 1000; ++i) {
      Sample s;
      s.y_true = {static_cast<double>(i)};
      samples.push_back(s);
    }
    const auto sp = split(samples, {500, 100, 400}, 3);
    CHECK(sp.train.size() == 500);
    CHECK(sp.validation.size() == 100);
    CHECK(sp.test.size() == 400);
    std::set<double> ids;
    for (const auto* part : {&sp.train, &sp.validation, &sp.test}) {
      for (const auto& s : *part) ids.insert(s.y_true[0]);
    }
    CHECK(ids.size() == 1000);
    const auto again = split(samples, {500, 100, 400}, 3);
    CHECK(again.train == sp.train);
    CHECK(again.test == sp.test);
    CHECK_FALSE(split(samples, {500, 100, 400}, 4).train == sp.train);
    CHECK_THROWS_AS(split(samples, {900, 100, 1}, 3), DataError);
  }

  TEST_CASE("pad_mean") {
    const Matrix z{{1, 5}, {3, 5}};
    CHECK(pad_mean(z, 2) == z);
    const Matrix p = pad_mean(z, 4);
    CHECK(p == Matrix{{1, 5}, {3, 5}, {2, 5}, {2, 5}});
    CHECK_THROWS(pad_mean(z, 1));
  }

  TEST_CASE("class_stats") {
    std::vector<Sample> healthy(4);
    for (auto& s : healthy) s.y_true = {0, 0, 0};
    CHECK(class_stats(healthy) == std::vector<std::size_t>{0, 0, 0});
    std::vector<Sample> hand(3);
    hand[0].y_true = {1, 0, 1};
    hand[1].y_true = {1, 0, 0};
    hand[2].y_true = {0, 0, 1};
    CHECK(class_stats(hand) == std::vector<std::size_t>{2, 0, 2});
    Rng rng(6);
    const Dataset ds = random_dataset(rng, 30);
    for (auto c : class_stats(ds.samples)) CHECK(c <= 30);
    CHECK(segment_matrix(hand) == Matrix{{1, 0, 1}, {1, 0, 0}, {0, 0, 1}});
  }

  TEST_CASE("source names") {
    for (auto s : {DataSource::synthetic, DataSource::phm_adapter, DataSource::har_adapter}) {
      CHECK(data_source_from_string(to_string(s)) == s);
    }
    CHECK_THROWS_AS(data_source_from_string("csv"), DataError);
  }
}
