#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "helpers.hpp"
#include "mpn/model_io.hpp"

using namespace mpn;

namespace {

ModelFile sample_file(std::uint64_t seed) {
  Rng rng(seed);
  ModelFile f;
  f.model = testing::random_model(rng, MpnDims{3, 2, 1, 4, 7}, 2.0);
  f.model.b_g[0] = 0.1 + 0.2;
  f.model.b_g[1] = -std::numeric_limits<double>::denorm_min();
  LabelClassifier svm{ClassifierKind::svm,
                      {LabelRule{false, 0, 1.25, -0.3, 0, 0}, LabelRule{true, 0.5, 0, 0, 0, 0},
                       LabelRule{false, 0, 1.0 / 3.0, 1e-17, 0, 0}}};
  LabelClassifier nm{ClassifierKind::nearest_mean,
                     {LabelRule{false, 0, 0, 0, -1.5, 2.75}, LabelRule{}, LabelRule{}}};
  f.classifiers = {{"segment.svm", svm}, {"segment.threshold_zero", {ClassifierKind::threshold_zero, {}}},
                   {"segment.nearest_mean", nm}};
  return f;
}

std::string text_of(const ModelFile& f) {
  std::ostringstream out;
  write_model(out, f);
  return out.str();
}

}  // namespace

TEST_SUITE("model_io") {
  TEST_CASE("round trip is bit-exact") {
    for (std::uint64_t seed : {1, 2, 3}) {
      const ModelFile f = sample_file(seed);
      const std::string text = text_of(f);
      std::istringstream in(text);
      const ModelFile back = read_model(in);
      CHECK(back == f);
      CHECK(text_of(back) == text);
    }
    const auto dir = testing::scratch_dir("model_io");
    const ModelFile f = sample_file(4);
    save_model(dir / "m.txt", f);
    CHECK(load_model(dir / "m.txt") == f);
  }

  TEST_CASE("layout") {
    const std::string text = text_of(sample_file(5));
    CHECK(text.rfind("mpn-model 1\ndims 3 2 1 4 7\n", 0) == 0);
    std::size_t tensors = 0;
    for (std::size_t pos = text.find("\ntensor "); pos != std::string::npos; pos = text.find("\ntensor ", pos + 1)) {
      ++tensors;
    }
    CHECK(tensors == 17);
    CHECK(text.size() >= 4);
    CHECK(text.substr(text.size() - 4) == "end\n");
  }

  TEST_CASE("find by role") {
    const ModelFile f = sample_file(6);
    REQUIRE(f.find("segment.nearest_mean") != nullptr);
    CHECK(f.find("segment.nearest_mean")->kind == ClassifierKind::nearest_mean);
    CHECK(f.find("step.svm") == nullptr);
  }

  TEST_CASE("doubles") {
    for (double v : {0.0, -0.0, 1.0 / 3.0, 1e300, -2.5e-310, 0.1}) {
      const double back = parse_double(format_double(v));
      CHECK(std::signbit(back) == std::signbit(v));
      CHECK(back == v);
    }
    CHECK_THROWS_AS(parse_double("1.5x"), FormatError);
    CHECK_THROWS_AS(parse_double(""), FormatError);
  }

  TEST_CASE("malformed files are rejected") {
    const std::string good = text_of(sample_file(7));
    auto rejects = [](const std::string& text) {
      std::istringstream in(text);
      CHECK_THROWS_AS(read_model(in), FormatError);
    };
    rejects("");
    rejects("mpn-model 2\n");
    rejects(good.substr(0, good.size() / 2));
    std::string wrong_shape = good;
    wrong_shape.replace(wrong_shape.find("dims 3"), 6, "dims 2");
    rejects(wrong_shape);
    CHECK_THROWS(load_model(testing::scratch_dir("model_io_missing") / "absent.txt"));
  }
}
