#include <catch2/catch_amalgamated.hpp>

#include "hjreach/activation.hpp"

using namespace hjreach;

TEST_CASE("structure strings from the experiment tables parse") {
  const ActivationSchedule s = parse_structure("ssrsl");
  REQUIRE(s.layers == std::vector<Activation>{Activation::kSine, Activation::kSine,
                                              Activation::kRectifier,
                                              Activation::kSine,
                                              Activation::kAffine});

  const ActivationSchedule r = parse_structure("rrrrl");
  REQUIRE(r.size() == 5);
  for (std::size_t i = 0; i < 4; ++i) REQUIRE(r[i] == Activation::kRectifier);
  REQUIRE(r[4] == Activation::kAffine);

  const ActivationSchedule s6 = parse_structure("sssssl");
  REQUIRE(s6.size() == 6);
  for (std::size_t i = 0; i < 5; ++i) REQUIRE(s6[i] == Activation::kSine);
  REQUIRE(s6[5] == Activation::kAffine);
}

TEST_CASE("malformed structure strings are rejected with the position") {
  REQUIRE_THROWS_AS(parse_structure("ssrs"), ScheduleParseError);
  REQUIRE_THROWS_AS(parse_structure(""), ScheduleParseError);
  REQUIRE_THROWS_AS(parse_structure("l"), ScheduleParseError);
  REQUIRE_THROWS_AS(parse_structure("s"), ScheduleParseError);
  REQUIRE_THROWS_WITH(parse_structure("slr"), Catch::Matchers::ContainsSubstring("position 1"));
  REQUIRE_THROWS_WITH(parse_structure("sxl"), Catch::Matchers::ContainsSubstring("position 1"));
  REQUIRE_THROWS_WITH(parse_structure("ssr"), Catch::Matchers::ContainsSubstring("position 2"));
}

TEST_CASE("parse then render is the identity on all valid strings") {
  // exhaustive over lengths 2..7: any s/r body plus the trailing 'l'
  for (int body_len = 1; body_len <= 6; ++body_len) {
    for (int bits = 0; bits < (1 << body_len); ++bits) {
      std::string str;
      for (int i = 0; i < body_len; ++i) str += (bits >> i) & 1 ? 's' : 'r';
      str += 'l';
      CAPTURE(str);
      REQUIRE(render_structure(parse_structure(str)) == str);
    }
  }
}
