#include <optional>

#include <gtest/gtest.h>

#include "random_inputs.hpp"
#include "signdet/voc_xml.hpp"

using namespace signdet;

namespace {

const char* kFixture = R"(<annotation>
  <folder>A</folder>
  <filename>A.1.jpg</filename>
  <path>/data/A/A.1.jpg</path>
  <source><database>Unknown</database></source>
  <size><width>640</width><height>480</height><depth>3</depth></size>
  <segmented>0</segmented>
  <object>
    <name>A</name>
    <pose>Unspecified</pose>
    <truncated>0</truncated>
    <difficult>0</difficult>
    <bndbox><xmin>120</xmin><ymin>80</ymin><xmax>360</xmax><ymax>400</ymax></bndbox>
  </object>
</annotation>
)";

std::optional<ErrorKind> kind_of(const std::string& xml) {
  try {
    parse_voc_xml(xml);
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

}  // namespace

TEST(VocXml, Fixture) {
  const Annotation a = parse_voc_xml(kFixture);
  EXPECT_EQ(a.filename, "A.1.jpg");
  EXPECT_EQ(a.folder, "A");
  EXPECT_EQ(a.width, 640);
  EXPECT_EQ(a.height, 480);
  ASSERT_EQ(a.objects.size(), 1u);
  EXPECT_EQ(a.objects[0].name, "A");
  EXPECT_EQ(a.objects[0].box, (PixelBox{120, 80, 360, 400}));
  EXPECT_EQ(parse_voc_xml(write_voc_xml(a)), a);
  EXPECT_DOUBLE_EQ(normalize_box(a.objects[0].box, a.width, a.height).xmin, 0.1875);
}

TEST(VocXml, ZeroObjects) {
  Annotation a;
  a.filename = "empty.ppm";
  a.width = 10;
  a.height = 20;
  const Annotation back = parse_voc_xml(write_voc_xml(a));
  EXPECT_EQ(back, a);
  EXPECT_TRUE(back.objects.empty());
}

TEST(VocXml, Errors) {
  std::string inverted = kFixture;
  inverted.replace(inverted.find("<xmin>120"), 9, "<xmin>400");
  EXPECT_EQ(kind_of(inverted), ErrorKind::ValidationError);
  std::string outside = kFixture;
  outside.replace(outside.find("<xmax>360"), 9, "<xmax>641");
  EXPECT_EQ(kind_of(outside), ErrorKind::ValidationError);
  EXPECT_EQ(kind_of("<annotation><filename>x"), ErrorKind::ParseError);
  std::string no_size = kFixture;
  no_size.erase(no_size.find("<size>"), no_size.find("</size>") + 7 - no_size.find("<size>"));
  EXPECT_EQ(kind_of(no_size), ErrorKind::SchemaError);
  std::string not_int = kFixture;
  not_int.replace(not_int.find("<width>640"), 10, "<width>6x0");
  EXPECT_EQ(kind_of(not_int), ErrorKind::SchemaError);
  EXPECT_EQ(kind_of("<other/>"), ErrorKind::SchemaError);
}

TEST(VocXml, ValidationNamesTheField) {
  Annotation a = parse_voc_xml(kFixture);
  a.objects.push_back({"B", {5, 5, 5, 9}});
  const auto errs = annotation_errors(a);
  ASSERT_EQ(errs.size(), 1u);
  EXPECT_EQ(errs[0].field, "object[1].bndbox");
  EXPECT_THROW(write_voc_xml(a), Error);
}

TEST(VocXml, RandomRoundTrips) {
  Rng rng(60);
  for (int t = 0; t < 1000; ++t) {
    const LabelMap labels = random_label_map(rng, 5);
    const Annotation a = random_annotation(rng, labels);
    ASSERT_EQ(parse_voc_xml(write_voc_xml(a)), a) << write_voc_xml(a);
  }
}
