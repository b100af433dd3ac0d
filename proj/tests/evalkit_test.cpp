#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "vee/evalkit.hpp"

using namespace vee;

namespace {

ResultSegment span(std::uint32_t vid, std::int64_t r0, std::int64_t r1) { return {vid, 0, r1 - r0, r0, r1, -r0, 10}; }

CorpusSpec small_spec() {
  CorpusSpec s;
  s.n_videos = 3;
  s.min_frames = 300;
  s.max_frames = 360;
  s.query_min_frames = 150;
  s.query_max_frames = 200;
  s.window_half = 20;
  s.width = 16;
  s.height = 12;
  return s;
}

}  // namespace

TEST(IsCorrect, OverlapOfTruthSpan) {
  const GroundTruthEntry gt{"q", 2, 100, 199, 0, 99};
  EXPECT_TRUE(is_correct(span(2, 100, 199), gt));
  EXPECT_FALSE(is_correct(span(2, 100, 149), gt));
  EXPECT_TRUE(is_correct(span(2, 140, 260), gt));   // exactly 60 of 100 frames
  EXPECT_FALSE(is_correct(span(2, 141, 260), gt));
  EXPECT_FALSE(is_correct(span(3, 100, 199), gt));
}

TEST(IsCorrect, MonotoneAsSpanGrows) {
  const GroundTruthEntry gt{"q", 0, 50, 90, 0, 40};
  bool was = false;
  for (std::int64_t end = 0; end < 150; ++end) {
    const bool now = is_correct(span(0, 40, end), gt);
    EXPECT_TRUE(now || !was);
    was = now;
  }
  EXPECT_TRUE(was);
}

TEST(AveragePrecision, HandComputed) {
  const std::vector<GroundTruthEntry> gt{{"q", 1, 0, 99, 0, 99}, {"q", 2, 0, 99, 0, 99}};
  const std::vector<ResultSegment> ranked{span(1, 0, 99), span(5, 0, 99), span(2, 0, 99)};
  EXPECT_DOUBLE_EQ(average_precision(ranked, gt), (1.0 + 2.0 / 3.0) / 2.0);
  // A second hit on an already claimed entry does not count twice.
  const std::vector<ResultSegment> twice{span(1, 0, 99), span(1, 0, 99)};
  EXPECT_DOUBLE_EQ(average_precision(twice, gt), 0.5);
}

TEST(MeanAveragePrecision, PerfectAndEmpty) {
  const std::vector<GroundTruthEntry> gt{{"a", 1, 0, 9, 0, 9}, {"b", 2, 5, 9, 0, 4}};
  std::map<std::string, std::vector<ResultSegment>> good{{"a", {span(1, 0, 9), span(3, 0, 1)}}, {"b", {span(2, 5, 9)}}};
  EXPECT_DOUBLE_EQ(mean_average_precision(good, gt).mean_ap, 1.0);
  std::map<std::string, std::vector<ResultSegment>> bad{{"a", {span(2, 0, 9)}}, {"b", {}}};
  EXPECT_DOUBLE_EQ(mean_average_precision(bad, gt).mean_ap, 0.0);
}

TEST(MeanAveragePrecision, QueriesWithoutTruthAreExcluded) {
  const std::vector<GroundTruthEntry> gt{{"a", 1, 0, 9, 0, 9}};
  std::map<std::string, std::vector<ResultSegment>> res{{"a", {span(1, 0, 9)}}, {"zzz", {}}};
  const auto m = mean_average_precision(res, gt);
  EXPECT_DOUBLE_EQ(m.mean_ap, 1.0);
  EXPECT_EQ(m.excluded, std::vector<std::string>{"zzz"});
  EXPECT_EQ(m.per_query.size(), 1u);
}

TEST(Corpus, DeterministicPerSeed) {
  const auto a = make_corpus(5, small_spec());
  const auto b = make_corpus(5, small_spec());
  ASSERT_EQ(a.references.size(), 3u);
  EXPECT_EQ(a.references, b.references);
  EXPECT_EQ(a.queries, b.queries);
  EXPECT_EQ(a.truth, b.truth);
  EXPECT_EQ(encode_frame_stream(a.references[1]), encode_frame_stream(b.references[1]));
  EXPECT_NE(make_corpus(6, small_spec()).references, a.references);
}

TEST(Corpus, QueriesAreExactSubclips) {
  const auto c = make_corpus(8, small_spec());
  for (std::size_t i = 0; i < c.queries.size(); ++i) {
    const auto& g = c.truth[i];
    EXPECT_EQ(g.query_id, c.query_ids[i]);
    const auto& ref = c.references[g.video_id].frames;
    ASSERT_EQ(static_cast<std::int64_t>(c.queries[i].frames.size()), g.r_end - g.r_start + 1);
    EXPECT_TRUE(std::equal(c.queries[i].frames.begin(), c.queries[i].frames.end(), ref.begin() + g.r_start));
  }
}

TEST(Corpus, QueryShareExtremaWithSource) {
  const auto c = make_corpus(9, small_spec());
  const FingerprintParams p{20, 8, 3};
  for (std::size_t i = 0; i < c.queries.size(); ++i) {
    const auto& g = c.truth[i];
    const auto ref = fingerprint_video(c.references[g.video_id].frames, p);
    const auto qry = fingerprint_video(c.queries[i].frames, p);
    std::set<std::int64_t> shifted;
    for (const auto& d : qry) shifted.insert(static_cast<std::int64_t>(d.t) + g.r_start);
    std::size_t common = 0;
    for (const auto& d : ref) common += shifted.count(static_cast<std::int64_t>(d.t));
    EXPECT_GE(common, 1u) << c.query_ids[i];
  }
}

TEST(Corpus, EmptyAndInvalidSpecs) {
  auto spec = small_spec();
  spec.n_videos = 0;
  const auto empty = make_corpus(1, spec);
  EXPECT_TRUE(empty.references.empty());
  EXPECT_TRUE(empty.truth.empty());
  spec = small_spec();
  spec.query_min_frames = 2 * spec.window_half;
  EXPECT_THROW(make_corpus(1, spec), InvalidInput);
  spec = small_spec();
  spec.min_frames = spec.query_max_frames - 1;
  EXPECT_THROW(make_corpus(1, spec), InvalidInput);
}

TEST(Distort, IdentityCases) {
  const auto c = make_corpus(2, small_spec());
  const auto& frames = c.queries[0].frames;
  EXPECT_EQ(distort(frames, NoiseDistortion{0.0}, 3), frames);
  EXPECT_EQ(distort(frames, LogoDistortion{4, 4, 0, 0}, 3), frames);
  const auto cropped = distort(frames, CropDistortion{10, 29}, 3);
  ASSERT_EQ(cropped.size(), 20u);
  EXPECT_TRUE(std::equal(cropped.begin(), cropped.end(), frames.begin() + 10));
}

TEST(Distort, BoundsAndDeterminism) {
  const auto c = make_corpus(2, small_spec());
  const auto& frames = c.queries[0].frames;
  EXPECT_THROW(distort(frames, LogoDistortion{10, 0, 7, 2}, 1), InvalidInput);
  EXPECT_THROW(distort(frames, CropDistortion{5, 4}, 1), InvalidInput);
  EXPECT_THROW(distort(frames, CropDistortion{0, frames.size()}, 1), InvalidInput);
  EXPECT_THROW(distort(frames, NoiseDistortion{-1}, 1), InvalidInput);
  EXPECT_EQ(distort(frames, NoiseDistortion{9}, 4), distort(frames, NoiseDistortion{9}, 4));
  EXPECT_NE(distort(frames, NoiseDistortion{9}, 4), distort(frames, NoiseDistortion{9}, 5));
}

TEST(Distort, LogoOnlyChangesGradientsNearPatch) {
  const auto c = make_corpus(4, small_spec());
  const std::vector<Frame> frames(c.queries[0].frames.begin(), c.queries[0].frames.begin() + 5);
  const LogoDistortion logo{5, 3, 4, 3};
  const auto marked = distort(frames, logo, 7);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto before = gradient_magnitudes(frames[i]);
    const auto after = gradient_magnitudes(marked[i]);
    for (std::uint32_t y = 0; y < frames[i].height; ++y) {
      for (std::uint32_t x = 0; x < frames[i].width; ++x) {
        const bool near = x + 1 >= logo.x && x <= logo.x + logo.width && y + 1 >= logo.y && y <= logo.y + logo.height;
        if (!near) { EXPECT_EQ(before[y * frames[i].width + x], after[y * frames[i].width + x]) << x << "," << y; }
      }
    }
  }
}

TEST(GroundTruthText, RoundTripAndErrors) {
  const std::vector<GroundTruthEntry> gt{{"q00", 0, 10, 20, 0, 10}, {"q01", 3, 5, 5, 1, 1}};
  EXPECT_EQ(parse_ground_truth(format_ground_truth(gt)), gt);
  EXPECT_EQ(parse_ground_truth("# header\n\nq\t1\t2\t3\t0\t1\n").size(), 1u);
  EXPECT_THROW(parse_ground_truth("q\t1\t2\n"), InvalidInput);
  EXPECT_THROW(parse_ground_truth("q\t1\t9\t3\t0\t1\n"), InvalidInput);
}

TEST(ResultsText, SevenColumns) {
  const std::vector<ResultSegment> r{{4, 0, 9, 100, 109, -100, 7}};
  EXPECT_EQ(format_results("q1", r), "q1\t4\t0\t9\t100\t109\t7\n");
}

TEST(Evaluate, SelfQueriesScorePerfectly) {
  auto spec = small_spec();
  const auto c = make_corpus(3, spec);
  SearchConfig cfg;
  cfg.window_half = 20;
  cfg.feature_dim = 8;
  cfg.num_centroids = 8;
  cfg.n_conf = 3;
  std::vector<NamedFingerprints> named;
  std::vector<VideoFingerprints> fps;
  for (std::size_t i = 0; i < c.references.size(); ++i) {
    fps.push_back(fingerprint_stream(c.references[i], cfg.fingerprint()));
    named.push_back({c.reference_names[i], fps.back()});
  }
  const auto index = build_index(train_from(fps, cfg), cfg.fingerprint(), named);
  std::vector<LabeledQuery> queries;
  for (std::size_t i = 0; i < c.queries.size(); ++i) queries.push_back({c.query_ids[i], c.queries[i].frames});
  queries.push_back({"stray", c.queries[0].frames});
  const auto report = evaluate(index, queries, c.truth, cfg);
  EXPECT_DOUBLE_EQ(report.mean_ap, 1.0);
  EXPECT_EQ(report.excluded, std::vector<std::string>{"stray"});
  EXPECT_GT(report.peak_queue_length, 0u);
  EXPECT_GT(report.dense_table_bytes, 0u);
  EXPECT_NE(format_report(report).find("mAP\t1.0000"), std::string::npos);
  EXPECT_THROW(evaluate(index, std::span<const LabeledQuery>{}, c.truth, cfg), InvalidInput);
}
