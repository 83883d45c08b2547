#include <optional>

#include <gtest/gtest.h>

#include "random_inputs.hpp"
#include "signdet/label_map.hpp"

using namespace signdet;

TEST(LabelMap, AlphabetOrder) {
  const LabelMap m = LabelMap::alphabet();
  const LabelMap back = parse_label_map(write_label_map(m));
  EXPECT_EQ(back, m);
  ASSERT_EQ(back.size(), 26u);
  EXPECT_EQ(back.entries().front(), (LabelEntry{"A", 1}));
  EXPECT_EQ(back.entries().back(), (LabelEntry{"Z", 26}));
  EXPECT_EQ(back.require_id("Q"), 17);
  EXPECT_EQ(back.name_of(26), "Z");
}

TEST(LabelMap, SingleEntry) {
  const LabelMap m = parse_label_map("item {\n  name: \"A\"\n  id: 1\n}\n");
  EXPECT_EQ(m.size(), 1u);
  EXPECT_EQ(m.require_id("A"), 1);
}

TEST(LabelMap, AcceptsCommentsAndAnyFieldOrder) {
  const LabelMap m = parse_label_map("# hand signs\nitem { id: 2 name: 'B' }\nitem {\n id: 1\n name: \"A\" }\n");
  EXPECT_EQ(m.names(), (std::vector<std::string>{"A", "B"}));
}

TEST(LabelMap, Errors) {
  auto kind_of = [](const std::string& text) -> std::optional<ErrorKind> {
    try {
      parse_label_map(text);
    } catch (const Error& e) {
      return e.kind();
    }
    return std::nullopt;
  };
  EXPECT_EQ(kind_of("item { name: \"A\" id: 3 }\nitem { name: \"B\" id: 3 }"), ErrorKind::ValidationError);
  EXPECT_EQ(kind_of("item { name: \"A\" id: 1 }\nitem { name: \"A\" id: 2 }"), ErrorKind::ValidationError);
  EXPECT_EQ(kind_of("item { name: \"A\" id: 1 }\nitem { name: \"B\" id: 3 }"), ErrorKind::ValidationError);
  EXPECT_EQ(kind_of("item { name: \"A\" id: 1"), ErrorKind::ParseError);
  EXPECT_EQ(kind_of("item { name: \"A\" }"), ErrorKind::ValidationError);
  EXPECT_EQ(kind_of("item { name: \"A\" id: 1-2 }"), ErrorKind::ParseError);
  EXPECT_THROW(LabelMap::alphabet().require_id("Ω"), Error);
  EXPECT_THROW(LabelMap::alphabet().name_of(27), Error);
}

TEST(LabelMap, RandomRoundTrips) {
  Rng rng(70);
  for (int t = 0; t < 1000; ++t) {
    const LabelMap m = random_label_map(rng);
    ASSERT_EQ(parse_label_map(write_label_map(m)), m);
  }
}
