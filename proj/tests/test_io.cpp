#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "wchaos/io.hpp"

using namespace wchaos;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("shortest round-trip number formatting") {
  const double values[] = {0.0,
                           1.0,
                           -1.0,
                           0.1,
                           1.0 / 3.0,
                           2.0 / 3.0,
                           1e-300,
                           1e300,
                           -4.9406564584124654e-324,
                           3.141592653589793,
                           1234567890123456.0,
                           std::numeric_limits<double>::max(),
                           std::numeric_limits<double>::min()};
  for (double v : values) {
    const std::string s = fmt_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }

  CHECK(fmt_double(0.1) == "0.1");
  CHECK(fmt_double(3.0) == "3");
  CHECK(fmt_double(-0.5) == "-0.5");
  CHECK(fmt_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(fmt_double(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(fmt_double(std::numeric_limits<double>::quiet_NaN()) == "nan");

  CHECK(fmt_u64(0) == "0");
  CHECK(fmt_u64(std::numeric_limits<std::uint64_t>::max()) ==
        "18446744073709551615");
  CHECK(fmt_bool(true) == "true");
  CHECK(fmt_bool(false) == "false");
}

TEST_CASE("csv escaping") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("1.25") == "1.25");
  CHECK(csv_escape("") == "");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_escape("two\nlines") == "\"two\nlines\"");
  CHECK(csv_escape(" padded") == "\" padded\"");
  CHECK(csv_escape("padded ") == "\"padded \"");
}

TEST_CASE("csv writer layout") {
  std::ostringstream out;
  CsvWriter w(out);
  w.meta("seed", "42");
  w.meta("rerun", "wchaos stein --config c.cfg --seed 42 --out <DIR>");
  w.header({"functional", "kind", "value"});
  w.row({"F1", "first_order", "0.125"});
  w.row({"F1", "second,order", "0.25"});
  CHECK(out.str() ==
        "# seed: 42\n"
        "# rerun: wchaos stein --config c.cfg --seed 42 --out <DIR>\n"
        "functional,kind,value\n"
        "F1,first_order,0.125\n"
        "F1,\"second,order\",0.25\n");

  std::ostringstream sink;
  CsvWriter bad(sink);
  CHECK_THROWS_AS(bad.row({"x"}), std::logic_error);
  bad.header({"a", "b"});
  CHECK_THROWS_AS(bad.meta("k", "v"), std::logic_error);
  CHECK_THROWS_AS(bad.header({"a"}), std::logic_error);
  CHECK_THROWS_AS(bad.row({"only-one"}), std::logic_error);
}

TEST_CASE("config parsing") {
  const std::string text =
      "# experiment settings\n"
      "\n"
      "seed = 42\n"
      "replicas = 2000   # inline comment\n"
      "hurst = 0.3\n"
      "label = \"second # chaos\"\n"
      "bare = canonical\n"
      "verbose = false\n"
      "t_grid = [16, 32, 64.5]\n"
      "empty_list = []\n"
      "big = 18446744073709551615\n"
      "neg = -7\n";
  const Config cfg = Config::parse_string(text, "test.cfg");

  CHECK(cfg.name() == "test.cfg");
  CHECK(cfg.size() == 10);
  CHECK(cfg.get_u64("seed") == 42);
  CHECK(cfg.get_int("replicas") == 2000);
  CHECK(cfg.get_double("hurst") == 0.3);
  CHECK(cfg.get_string("label") == "second # chaos");
  CHECK(cfg.get_string("bare") == "canonical");
  CHECK(cfg.get_bool("verbose") == false);
  CHECK(cfg.get_double_list("t_grid") ==
        std::vector<double>{16.0, 32.0, 64.5});
  CHECK(cfg.get_double_list("empty_list").empty());
  CHECK(cfg.get_u64("big") == 18446744073709551615ull);
  CHECK(cfg.get_int("neg") == -7);
  CHECK(cfg.get_double("neg") == -7.0);

  CHECK(cfg.has("seed"));
  CHECK_FALSE(cfg.has("missing"));
  CHECK(cfg.get_u64_or("missing", 7) == 7);
  CHECK(cfg.get_string_or("missing", "d") == "d");
  CHECK(cfg.get_double_or("hurst", 0.5) == 0.3);
  CHECK(cfg.get_bool_or("missing", true) == true);
  CHECK(cfg.get_int_or("neg", 0) == -7);
  CHECK(cfg.get_double_list_or("missing", {1.0}) == std::vector<double>{1.0});

  cfg.require_known({"seed", "replicas", "hurst", "label", "bare", "verbose",
                     "t_grid", "empty_list", "big", "neg"});
}

TEST_CASE("config errors carry the source line") {
  auto parse = [](const std::string& text) {
    return Config::parse_string(text, "bad.cfg");
  };

  CHECK_THROWS_WITH(parse("a = 1\nno equals sign\n"),
                    ContainsSubstring("bad.cfg:2:") &&
                        ContainsSubstring("key = value"));
  CHECK_THROWS_WITH(parse("2x = 5\n"), ContainsSubstring("bad.cfg:1:") &&
                                           ContainsSubstring("invalid key"));
  CHECK_THROWS_WITH(parse("\n\nkey =\n"), ContainsSubstring("bad.cfg:3:") &&
                                              ContainsSubstring("empty value"));
  CHECK_THROWS_WITH(parse("k = 1\nk = 2\n"),
                    ContainsSubstring("bad.cfg:2:") &&
                        ContainsSubstring("duplicate key") &&
                        ContainsSubstring("line 1"));

  const Config cfg = parse("x = abc\ns = \"open\nlist = 1, 2\nfrac = 1.5z\n");
  CHECK_THROWS_WITH(cfg.get_int("x"), ContainsSubstring("bad.cfg:1:") &&
                                          ContainsSubstring("integer"));
  CHECK_THROWS_WITH(cfg.get_u64("frac"), ContainsSubstring("bad.cfg:4:"));
  CHECK_THROWS_WITH(cfg.get_double("frac"),
                    ContainsSubstring("bad.cfg:4:") &&
                        ContainsSubstring("expected a number"));
  CHECK_THROWS_WITH(cfg.get_string("s"),
                    ContainsSubstring("unterminated string"));
  CHECK_THROWS_WITH(cfg.get_double_list("list"),
                    ContainsSubstring("bad.cfg:3:") &&
                        ContainsSubstring("[..] list"));
  CHECK_THROWS_WITH(cfg.get_bool("x"), ContainsSubstring("true or false"));
  CHECK_THROWS_WITH(cfg.get_u64("missing"),
                    ContainsSubstring("missing required key 'missing'"));
  CHECK_THROWS_WITH(cfg.require_known({"x", "s", "list"}),
                    ContainsSubstring("bad.cfg:4:") &&
                        ContainsSubstring("unknown key"));

  const Config gaps = parse("l = [1,,2]\n");
  CHECK_THROWS_WITH(gaps.get_double_list("l"),
                    ContainsSubstring("empty list element"));
  CHECK_THROWS_WITH(parse("u64 = -3\n").get_u64("u64"),
                    ContainsSubstring("non-negative"));
}

TEST_CASE("tensor json round trip uses 1-based tuples") {
  SymTensor f(2, 3);
  f.set({0, 1}, 0.5);
  f.set({2, 2}, -1.25);

  const Json j = tensor_to_json(f);
  CHECK(j["order"] == 2);
  CHECK(j["dim"] == 3);
  REQUIRE(j["entries"].size() == 2);
  CHECK(j["entries"][0]["tuple"] == Json::array({1, 2}));
  CHECK(j["entries"][0]["value"] == 0.5);
  CHECK(j["entries"][1]["tuple"] == Json::array({3, 3}));

  const SymTensor back = tensor_from_json(j);
  CHECK(back.order() == f.order());
  CHECK(back.dim() == f.dim());
  CHECK(back.coeffs() == f.coeffs());

  // Tuples may arrive in any index order; they name the same coefficient.
  const Json unsorted = Json::parse(R"({"order": 2, "dim": 3,
      "entries": [{"tuple": [2, 1], "value": 0.5}]})");
  CHECK(tensor_from_json(unsorted).at({0, 1}) == 0.5);

  // Order-0 tensors carry a single scalar with an empty tuple.
  const Json scalar = Json::parse(R"({"order": 0, "dim": 1,
      "entries": [{"tuple": [], "value": 2.5}]})");
  CHECK(tensor_from_json(scalar).at({}) == 2.5);
}

TEST_CASE("tensor json rejects malformed input") {
  auto bad = [](const char* s) { return tensor_from_json(Json::parse(s)); };

  CHECK_THROWS_WITH(bad(R"({"order": -1, "dim": 2, "entries": []})"),
                    ContainsSubstring("order -1"));
  CHECK_THROWS_WITH(bad(R"({"order": 9, "dim": 2, "entries": []})"),
                    ContainsSubstring("order 9"));
  CHECK_THROWS_WITH(bad(R"({"order": 1, "dim": 0, "entries": []})"),
                    ContainsSubstring("dim 0"));
  CHECK_THROWS_WITH(bad(R"({"order": 1, "dim": 513, "entries": []})"),
                    ContainsSubstring("dim 513"));
  CHECK_THROWS_WITH(bad(R"({"order": 1, "dim": 2})"),
                    ContainsSubstring("entries"));
  CHECK_THROWS_WITH(bad(R"({"dim": 2, "entries": []})"),
                    ContainsSubstring("order"));
  CHECK_THROWS_WITH(
      bad(R"({"order": 2, "dim": 2, "entries": [{"tuple": [1], "value": 1}]})"),
      ContainsSubstring("tuple length 1"));
  CHECK_THROWS_WITH(
      bad(R"({"order": 1, "dim": 2, "entries": [{"tuple": [0], "value": 1}]})"),
      ContainsSubstring("index 0"));
  CHECK_THROWS_WITH(
      bad(R"({"order": 1, "dim": 2, "entries": [{"tuple": [3], "value": 1}]})"),
      ContainsSubstring("index 3"));
  CHECK_THROWS_WITH(
      bad(R"({"order": 1, "dim": 2,
              "entries": [{"tuple": [1.5], "value": 1}]})"),
      ContainsSubstring("integers"));
  CHECK_THROWS_WITH(
      bad(R"({"order": 1, "dim": 2, "entries": [{"tuple": [1]}]})"),
      ContainsSubstring("value"));
  CHECK_THROWS_WITH(
      bad(R"({"order": 2, "dim": 2,
              "entries": [{"tuple": [1, 2], "value": 1},
                          {"tuple": [2, 1], "value": 2}]})"),
      ContainsSubstring("duplicate tuple"));
  CHECK_THROWS_WITH(tensor_from_json(Json::parse("[1, 2]")),
                    ContainsSubstring("expected an object"));

  Json inf_entry = Json::parse(R"({"order": 1, "dim": 1,
      "entries": [{"tuple": [1], "value": 0}]})");
  inf_entry["entries"][0]["value"] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH(tensor_from_json(inf_entry),
                    ContainsSubstring("non-finite"));
}

TEST_CASE("functional json round trip") {
  ChaosVector F(3);
  SymTensor f1(1, 3);
  f1.set({0}, 1.0);
  f1.set({2}, -0.5);
  SymTensor f2(2, 3);
  f2.set({0, 1}, 0.25);
  F.add_term(1, f1);
  F.add_term(2, f2);

  const Json j = chaos_to_json(F);
  CHECK(j["dim"] == 3);
  REQUIRE(j["terms"].size() == 2);
  CHECK(j["terms"][0]["q"] == 1);
  CHECK(j["terms"][1]["q"] == 2);

  const ChaosVector back = chaos_from_json(j);
  CHECK(back.dim() == 3);
  REQUIRE(back.terms().size() == 2);
  CHECK(back.terms().at(1).coeffs() == f1.coeffs());
  CHECK(back.terms().at(2).coeffs() == f2.coeffs());

  auto bad = [](const char* s) { return chaos_from_json(Json::parse(s)); };
  CHECK_THROWS_WITH(bad(R"({"dim": 2, "terms": [
      {"q": 1, "tensor": {"order": 2, "dim": 2, "entries": []}}]})"),
                    ContainsSubstring("order 2 != term q 1"));
  CHECK_THROWS_WITH(bad(R"({"dim": 2, "terms": [
      {"q": 1, "tensor": {"order": 1, "dim": 3, "entries": []}}]})"),
                    ContainsSubstring("dim 3 != functional dim 2"));
  CHECK_THROWS_WITH(bad(R"({"dim": 2, "terms": [
      {"q": 1, "tensor": {"order": 1, "dim": 2, "entries": []}},
      {"q": 1, "tensor": {"order": 1, "dim": 2, "entries": []}}]})"),
                    ContainsSubstring("duplicate chaos order 1"));
  CHECK_THROWS_WITH(bad(R"({"dim": 2})"), ContainsSubstring("terms"));
}

TEST_CASE("named functional files") {
  ChaosVector F1 = ChaosVector::pure(1, [] {
    SymTensor f(1, 2);
    f.set({0}, 1.0);
    return f;
  }());
  ChaosVector F2 = ChaosVector::pure(2, [] {
    SymTensor f(2, 2);
    f.set({0, 1}, 0.5);
    return f;
  }());

  const std::vector<NamedFunctional> fs = {{"first", F1}, {"pair", F2}};
  const Json j = functionals_to_json(fs);
  const std::vector<NamedFunctional> back = functionals_from_json(j);
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == "first");
  CHECK(back[1].id == "pair");
  CHECK(back[0].F.terms().at(1).coeffs() == F1.terms().at(1).coeffs());
  CHECK(back[1].F.terms().at(2).coeffs() == F2.terms().at(2).coeffs());

  auto bad = [](const char* s) {
    return functionals_from_json(Json::parse(s));
  };
  CHECK_THROWS_WITH(bad(R"({"functionals": []})"),
                    ContainsSubstring("no functionals"));
  CHECK_THROWS_WITH(bad(R"({"functionals": [{"dim": 1, "terms": []}]})"),
                    ContainsSubstring("missing string 'id'"));
  CHECK_THROWS_WITH(
      bad(R"({"functionals": [
          {"id": "a", "dim": 1, "terms": []},
          {"id": "a", "dim": 1, "terms": []}]})"),
      ContainsSubstring("duplicate functional id 'a'"));
  CHECK_THROWS_WITH(bad(R"([1])"), ContainsSubstring("functionals"));
}

TEST_CASE("file helpers report the path") {
  const std::string path = "io_test_tmp.json";
  write_text_file(path, R"({"functionals": [{"id": "e1", "dim": 2,
      "terms": [{"q": 1, "tensor": {"order": 1, "dim": 2,
      "entries": [{"tuple": [1], "value": 1.0}]}}]}]})");
  const Json j = load_json_file(path);
  const auto fs = functionals_from_json(j);
  CHECK(fs.size() == 1);
  CHECK(fs[0].F.variance() == 1.0);

  write_text_file(path, "{ not json");
  CHECK_THROWS_WITH(load_json_file(path), ContainsSubstring(path));
  CHECK_THROWS_WITH(load_json_file("does_not_exist.json"),
                    ContainsSubstring("does_not_exist.json"));
  CHECK_THROWS_WITH(Config::parse_file("does_not_exist.cfg"),
                    ContainsSubstring("does_not_exist.cfg"));
  std::remove(path.c_str());

  const std::string cfg_path = "io_test_tmp.cfg";
  write_text_file(cfg_path, "seed = 9\n");
  const Config cfg = Config::parse_file(cfg_path);
  CHECK(cfg.name() == cfg_path);
  CHECK(cfg.get_u64("seed") == 9);
  std::remove(cfg_path.c_str());
}
