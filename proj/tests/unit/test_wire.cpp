#include <gtest/gtest.h>

#include "oracles.hpp"
#include "signdet/random.hpp"
#include "signdet/wire.hpp"

using namespace signdet;

TEST(Varint, ThreeHundred) {
  std::vector<std::uint8_t> out;
  wire::put_varint(out, 300);
  EXPECT_EQ(out, (std::vector<std::uint8_t>{0xAC, 0x02}));
  EXPECT_EQ(out, oracle::varint(300));
}

TEST(Varint, MatchesOracleAndRoundTrips) {
  Rng rng(30);
  std::vector<std::uint64_t> values{0, 1, 127, 128, 16383, 16384, ~std::uint64_t{0}};
  for (int i = 0; i < 2000; ++i) values.push_back(rng.next() >> rng.below(64));
  for (std::uint64_t v : values) {
    std::vector<std::uint8_t> out;
    wire::put_varint(out, v);
    ASSERT_EQ(out, oracle::varint(v)) << v;
    wire::Reader r(out);
    EXPECT_EQ(r.varint(), v);
    EXPECT_TRUE(r.done());
  }
}

TEST(Reader, FieldsAndOffsets) {
  std::vector<std::uint8_t> msg;
  wire::put_tag(msg, 1, wire::WireType::Varint);
  wire::put_varint(msg, 150);
  wire::put_bytes(msg, 2, std::string_view("hi"));
  wire::put_tag(msg, 3, wire::WireType::Fixed32);
  wire::put_fixed32(msg, 0x3F800000u);
  EXPECT_EQ(msg, (std::vector<std::uint8_t>{0x08, 0x96, 0x01, 0x12, 0x02, 'h', 'i', 0x1D, 0, 0, 0x80, 0x3F}));

  wire::Reader r(msg, 100);
  auto f = r.next();
  EXPECT_EQ(f.number, 1u);
  EXPECT_EQ(f.varint, 150u);
  f = r.next();
  EXPECT_EQ(f.number, 2u);
  EXPECT_EQ(f.offset, 105u);
  EXPECT_EQ(std::string(f.payload.begin(), f.payload.end()), "hi");
  f = r.next();
  EXPECT_EQ(f.type, wire::WireType::Fixed32);
  EXPECT_EQ(f.varint, 0x3F800000u);
  EXPECT_TRUE(r.done());
}

TEST(Reader, MalformedInputReportsOffset) {
  auto message_of = [](std::vector<std::uint8_t> bytes) -> std::string {
    try {
      wire::Reader r(bytes, 40);
      while (!r.done()) r.next();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::DecodeError);
      return e.what();
    }
    return "";
  };
  EXPECT_NE(message_of({0x08, 0x96}).find("byte 42"), std::string::npos);
  EXPECT_NE(message_of({0x12, 0x05, 'a'}).find("overruns"), std::string::npos);
  EXPECT_NE(message_of({0x0B}).find("wire type 3 at byte 40"), std::string::npos);
  EXPECT_NE(message_of({0x00, 0x01}).find("field number 0"), std::string::npos);
  std::vector<std::uint8_t> long_varint(11, 0xFF);
  long_varint.insert(long_varint.begin(), 0x08);
  EXPECT_NE(message_of(long_varint).find("longer than 10"), std::string::npos);
}
