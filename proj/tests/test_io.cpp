#include <gtest/gtest.h>

#include <random>

#include "scene_fixtures.hpp"

using namespace particlesynth;

namespace {

GraymapMask random_graymap(std::mt19937_64& gen, int w, int h) {
  GraymapMask g(w, h);
  for (auto& v : g.ids) v = static_cast<std::uint16_t>(gen());
  return g;
}

Scene l3_scene(std::uint64_t seed, int size = 256) {
  StageSpec st;
  st.stage = Stage::kL3;
  st.classes = kAllClasses;
  return compose_l3(fixture::small_catalog(), {60, 50, 40, 20, 10, 3, 2, 1}, st, fixture::setup(seed, size));
}

}  // namespace

TEST(Pgm, GoldenBytes) {
  GraymapMask g(2, 2);
  g.ids = {0, 1, 2, 3};
  const std::string expect = std::string("P5\n2 2\n65535\n") + std::string("\x00\x00\x00\x01\x00\x02\x00\x03", 8);
  EXPECT_EQ(encode_pgm(g), expect);
}

TEST(Pgm, BigEndianSamples) {
  GraymapMask g(1, 1);
  g.ids = {0x1234};
  const std::string bytes = encode_pgm(g);
  EXPECT_EQ(static_cast<unsigned char>(bytes[bytes.size() - 2]), 0x12);
  EXPECT_EQ(static_cast<unsigned char>(bytes[bytes.size() - 1]), 0x34);
}

TEST(Pgm, FileRoundTrip) {
  const auto dir = oracle::scratch_dir("pgm");
  std::mt19937_64 gen(1);
  for (int i = 0; i < 10; ++i) {
    const GraymapMask g = random_graymap(gen, 1 + static_cast<int>(gen() % 50), 1 + static_cast<int>(gen() % 50));
    write_pgm(g, dir / "g.pgm");
    EXPECT_EQ(read_pgm(dir / "g.pgm"), g);
  }
}

TEST(Pgm, DistinctErrors) {
  GraymapMask g(3, 3);
  const std::string good = encode_pgm(g);
  auto code_of = [](const std::string& bytes) {
    try {
      decode_pgm(bytes);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::kInvariant;
  };
  EXPECT_EQ(code_of(good.substr(0, good.size() - 3)), Errc::kTruncatedPayload);
  EXPECT_EQ(code_of("P5\n3 3\n255\n" + std::string(9, '\0')), Errc::kUnsupportedMaxval);
  EXPECT_EQ(code_of("P6\n3 3\n65535\n"), Errc::kMalformedHeader);
  EXPECT_EQ(code_of("P5\n3\n"), Errc::kMalformedHeader);
  EXPECT_EQ(code_of("P5 0 3 65535\n"), Errc::kMalformedHeader);
  try {
    decode_pgm(good.substr(0, good.size() - 1));
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("truncated payload"), std::string::npos);
  }
  // comments are tolerated in the header
  EXPECT_EQ(decode_pgm("P5\n# note\n1 1\n65535\n" + std::string("\x00\x07", 2)).ids[0], 7);
}

TEST(Pgm, MaskReaderAcceptsEightBit) {
  const auto dir = oracle::scratch_dir("maskpgm");
  write_file(dir / "m.pgm", "P5\n2 1\n255\n" + std::string("\x00\xff", 2));
  const BinaryMask m = read_mask_pgm(dir / "m.pgm");
  EXPECT_FALSE(m.get(0, 0));
  EXPECT_TRUE(m.get(1, 0));
}

TEST(Png, RoundTripNoise) {
  const auto dir = oracle::scratch_dir("png");
  std::mt19937_64 gen(2);
  RgbImage img(64, 64);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(gen());
  write_png(img, dir / "a.png");
  EXPECT_EQ(read_png_rgb(dir / "a.png"), img);
  RgbaImage rgba(17, 9);
  for (auto& v : rgba.data()) v = static_cast<std::uint8_t>(gen());
  write_png(rgba, dir / "b.png");
  EXPECT_EQ(read_png_rgba(dir / "b.png"), rgba);
}

TEST(Png, ZeroDimensionRejected) {
  const auto dir = oracle::scratch_dir("png0");
  EXPECT_THROW(write_png(RgbImage(), dir / "z.png"), Error);
  EXPECT_THROW(RgbImage(0, 4), Error);
  EXPECT_THROW(read_png_rgb(dir / "missing.png"), Error);
}

TEST(Rle, RunAtRasterStart) {
  BinaryMask m(4, 4);
  m.set(0, 0);
  m.set(1, 0);
  m.set(2, 0);
  const RunList r = rle_encode(m);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0], (particlesynth::Run{0, 3}));
  EXPECT_EQ(rle_decode(r, 4, 4), m);
}

TEST(Rle, RunsMergeAcrossRowEnds) {
  BinaryMask m(3, 2);
  m.set(2, 0);
  m.set(0, 1);
  EXPECT_EQ(rle_encode(m), (RunList{{2, 2}}));
}

TEST(Rle, RandomRoundTripAndIntersection) {
  std::mt19937_64 gen(3);
  for (int i = 0; i < 30; ++i) {
    const BinaryMask a = oracle::random_blob(gen, 40, 30);
    const BinaryMask b = oracle::random_blob(gen, 40, 30);
    const RunList ra = rle_encode(a);
    const RunList rb = rle_encode(b);
    EXPECT_EQ(rle_decode(ra, 40, 30), a);
    EXPECT_EQ(run_area(ra), a.area());
    EXPECT_EQ(run_intersection(ra, rb), oracle::pixel_iou_num(a, b));
  }
}

TEST(Rle, DecodeValidates) {
  EXPECT_THROW(rle_decode(RunList{{10, 10}}, 4, 4), Error);
  EXPECT_THROW(rle_decode(RunList{{0, 3}, {2, 1}}, 4, 4), Error);
}

TEST(Render, EmptySceneIsBackground) {
  Scene s;
  s.width = 40;
  s.height = 30;
  const Background bg = Background::textured(make_belt_texture(16, 16, 1), "belt");
  EXPECT_EQ(composite_rgb(s, bg, fixture::small_catalog()), bg.render(40, 30));
  const GraymapMask g = rasterize_graymap(s);
  EXPECT_TRUE(std::all_of(g.ids.begin(), g.ids.end(), [](auto v) { return v == 0; }));
}

TEST(Render, BackgroundTilesToroidally) {
  const RgbImage tex = make_belt_texture(7, 5, 2);
  const RgbImage out = Background::textured(tex, "t").render(20, 12);
  for (int y = 0; y < 12; ++y) {
    for (int x = 0; x < 20; ++x) {
      for (int k = 0; k < 3; ++k) ASSERT_EQ(out.px(x, y)[k], tex.px(x % 7, y % 5)[k]);
    }
  }
}

TEST(Render, SpritesPaintedInZOrder) {
  const Scene s = l3_scene(4, 192);
  const Background bg = Background::flat({10, 20, 30});
  const RgbImage rgb = composite_rgb(s, bg, fixture::small_catalog());
  const GraymapMask g = rasterize_graymap(s);
  std::vector<AugmentedParticle> sprites;
  for (const auto& inst : s.instances) sprites.push_back(apply(fixture::small_catalog().at(inst.asset_id), inst.augment));
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      const std::uint16_t id = g.at(x, y);
      const std::uint8_t* px = rgb.px(x, y);
      if (id == 0) {
        ASSERT_EQ(px[0], 10);
        ASSERT_EQ(px[1], 20);
        ASSERT_EQ(px[2], 30);
        continue;
      }
      const auto& inst = s.instances[id - 1];
      const std::uint8_t* src = sprites[id - 1].sprite.px(x - inst.position.x, y - inst.position.y);
      for (int k = 0; k < 3; ++k) ASSERT_EQ(px[k], src[k]);
    }
  }
}

TEST(Render, GraymapHistogramEqualsVisibleArea) {
  const Scene s = l3_scene(5);
  const GraymapMask g = rasterize_graymap(s);
  std::vector<std::uint64_t> hist(s.instances.size() + 1, 0);
  for (auto v : g.ids) ++hist[v];
  std::uint64_t nonzero = 0;
  for (const auto& inst : s.instances) {
    EXPECT_EQ(hist[inst.instance_id], inst.visible_area);
    nonzero += inst.visible_area;
  }
  EXPECT_EQ(g.ids.size() - hist[0], nonzero);
}

TEST(Render, MissingAssetNamed) {
  Scene s = l3_scene(6, 128);
  ASSERT_FALSE(s.instances.empty());
  s.instances[0].asset_id = "ghost";
  try {
    composite_rgb(s, Background::flat({0, 0, 0}), fixture::small_catalog());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kMissingAsset);
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
}

TEST(Render, GraymapOverflow) {
  Scene s;
  s.width = s.height = 300;
  BinaryMask dot(1, 1);
  dot.set(0, 0);
  for (std::uint32_t i = 0; i < 65536; ++i) {
    PlacedInstance inst;
    inst.instance_id = i + 1;
    inst.mask = dot;
    inst.position = {static_cast<int>(i % 300), static_cast<int>(i / 300)};
    s.instances.push_back(std::move(inst));
  }
  EXPECT_THROW(rasterize_graymap(s), Error);
  s.instances.pop_back();
  EXPECT_NO_THROW(rasterize_graymap(s));
}

TEST(Overlay, EmptyGraymapKeepsImageAndPaletteIsStable) {
  std::mt19937_64 gen(4);
  RgbImage img(20, 10);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(gen());
  EXPECT_EQ(overlay(img, GraymapMask(20, 10)), img);
  GraymapMask g(20, 10);
  g.ids[5] = 7;
  EXPECT_EQ(overlay(img, g), overlay(img, g));
  EXPECT_EQ(palette_color(7), palette_color(7));
  EXPECT_NE(palette_color(7), palette_color(8));
  EXPECT_THROW(overlay(img, GraymapMask(3, 3)), Error);
}

TEST(Metadata, RoundTripAndCrossConsistency) {
  const auto dir = oracle::scratch_dir("meta");
  const Scene s = l3_scene(7);
  const ImageRecord r = make_record(s, "img_00000", "L3-heavy", 0.5);
  write_metadata(r, dir / "img.json");
  const ImageRecord back = read_metadata(dir / "img.json");
  EXPECT_EQ(back, r);
  // decoding the amodal masks and repainting by z reproduces the graymap
  const GraymapMask g = rasterize_graymap(s);
  GraymapMask repaint(s.width, s.height);
  for (const auto& e : back.instances) {
    for (const particlesynth::Run& run : e.rle) {
      for (std::uint64_t i = run.start; i < run.start + run.length; ++i) {
        repaint.ids[i] = static_cast<std::uint16_t>(e.instance_id);
      }
    }
  }
  EXPECT_EQ(repaint, g);
}

TEST(Metadata, WriterRefusesBadVisibility) {
  const auto dir = oracle::scratch_dir("meta_bad");
  ImageRecord r = make_record(l3_scene(8, 128), "x", "L3-heavy", 0.5);
  ASSERT_FALSE(r.instances.empty());
  r.instances[0].visibility += 0.01;
  try {
    write_metadata(r, dir / "x.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kInvariant);
  }
  EXPECT_FALSE(fs::exists(dir / "x.json"));
}

TEST(Metadata, SchemaErrorsCarryFieldPath) {
  const auto dir = oracle::scratch_dir("meta_schema");
  const ImageRecord r = make_record(l3_scene(9, 128), "x", "L3-heavy", 0.5);
  auto j = record_to_json(r);
  j["instances"][0]["visible_area"] = "lots";
  write_file(dir / "x.json", j.dump());
  try {
    read_metadata(dir / "x.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kSchema);
    EXPECT_NE(std::string(e.what()).find("instances[0].visible_area"), std::string::npos);
  }
}

TEST(Metadata, WritesAreByteStable) {
  const auto dir = oracle::scratch_dir("meta_stable");
  const ImageRecord r = make_record(l3_scene(10, 128), "x", "L3-heavy", 0.5);
  write_metadata(r, dir / "a.json");
  write_metadata(r, dir / "b.json");
  EXPECT_EQ(read_file(dir / "a.json"), read_file(dir / "b.json"));
}
