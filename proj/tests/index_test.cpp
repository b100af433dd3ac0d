#include <gtest/gtest.h>

#include <filesystem>
#include <vector>

#include "oracles.hpp"
#include "vee/index.hpp"
#include "vee/random.hpp"

using namespace vee;

namespace {

Codebook tiny_codebook(std::size_t centroids, std::size_t dim) {
  Codebook cb;
  cb.dim = dim;
  cb.seed = 17;
  for (std::size_t i = 0; i < centroids * dim; ++i) {
    cb.centroids.push_back(static_cast<float>(i));
    cb.thresholds.push_back(static_cast<float>(i) * 0.5f);
  }
  return cb;
}

HashCode random_code(Rng& rng, std::uint32_t centroids, std::size_t dim) {
  HashCode h{static_cast<std::uint32_t>(rng.index(centroids)), BitCode(dim)};
  for (std::size_t k = 0; k < dim; ++k) h.b.set(k, rng.index(2) == 1);
  return h;
}

std::vector<Signature> random_signatures(Rng& rng, std::size_t n, std::uint32_t centroids, std::size_t dim) {
  std::vector<Signature> out;
  for (std::uint32_t t = 0; t < n; ++t) out.push_back({t * 3 + static_cast<std::uint32_t>(rng.index(3)), random_code(rng, centroids, dim)});
  return out;
}

InvertedIndex random_index(Rng& rng, std::uint32_t videos, std::uint32_t centroids, std::size_t dim, std::size_t per_video) {
  InvertedIndex idx(tiny_codebook(centroids, dim), 10, 3);
  for (std::uint32_t v = 0; v < videos; ++v) {
    idx.add_video(v * 7 + 1, {"video" + std::to_string(v), per_video * 3, 25, 1},
                  random_signatures(rng, per_video, centroids, dim));
  }
  return idx;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("vee_index_test_" + name);
}

}  // namespace

TEST(InvertedIndex, EmptySignatureListOnlyRegistersVideo) {
  InvertedIndex idx(tiny_codebook(4, 8), 10, 3);
  idx.add_video(3, {"a", 100, 25, 1}, {});
  EXPECT_EQ(idx.posting_count(), 0u);
  ASSERT_EQ(idx.videos().size(), 1u);
  EXPECT_EQ(idx.videos().at(3).name, "a");
}

TEST(InvertedIndex, SignatureLandsInItsCentroidList) {
  InvertedIndex idx(tiny_codebook(9, 8), 10, 3);
  HashCode code{7, BitCode(8)};
  code.b.set(2);
  idx.add_video(1, {"a", 10, 25, 1}, std::vector<Signature>{{5, code}});
  ASSERT_EQ(idx.list(7).size(), 1u);
  EXPECT_EQ(idx.list(7).video_id(0), 1u);
  EXPECT_EQ(idx.list(7).time(0), 5u);
  EXPECT_EQ(BitCode(8, idx.list(7).code(0)), code.b);
  EXPECT_EQ(idx.posting_count(), 1u);
}

TEST(InvertedIndex, ListsStaySortedByVideoThenTime) {
  InvertedIndex idx(tiny_codebook(9, 4), 10, 3);
  const HashCode code{7, BitCode(4)};
  idx.add_video(5, {"late", 10, 25, 1}, std::vector<Signature>{{9, code}, {2, code}});
  idx.add_video(2, {"early", 10, 25, 1}, std::vector<Signature>{{40, code}, {1, code}});
  const auto& l = idx.list(7);
  ASSERT_EQ(l.size(), 4u);
  EXPECT_EQ(std::pair(l.video_id(0), l.time(0)), std::pair(2u, 1u));
  EXPECT_EQ(std::pair(l.video_id(1), l.time(1)), std::pair(2u, 40u));
  EXPECT_EQ(std::pair(l.video_id(2), l.time(2)), std::pair(5u, 2u));
  EXPECT_EQ(std::pair(l.video_id(3), l.time(3)), std::pair(5u, 9u));
}

TEST(InvertedIndex, RejectsDuplicatesAndWritesAfterFreeze) {
  InvertedIndex idx(tiny_codebook(4, 4), 10, 3);
  idx.add_video(1, {"a", 10, 25, 1}, {});
  EXPECT_THROW(idx.add_video(1, {"b", 10, 25, 1}, {}), Conflict);
  EXPECT_THROW(idx.add_video(2, {"a", 10, 25, 1}, {}), Conflict);
  const HashCode code{1, BitCode(4)};
  EXPECT_THROW(idx.add_video(3, {"c", 10, 25, 1}, std::vector<Signature>{{4, code}, {4, code}}), InvalidInput);
  EXPECT_EQ(idx.posting_count(), 0u);
  EXPECT_THROW(idx.add_video(4, {"d", 10, 25, 1}, std::vector<Signature>{{4, HashCode{9, BitCode(4)}}}), InvalidInput);
  idx.freeze();
  EXPECT_THROW(idx.add_video(5, {"e", 10, 25, 1}, {}), ContractViolation);
}

TEST(Knn, EmptyIndexGivesNothing) {
  const InvertedIndex idx(tiny_codebook(4, 8), 10, 3);
  EXPECT_TRUE(idx.knn({2, BitCode(8)}, 0, 10).empty());
}

TEST(Knn, ExactSignatureComesFirstWithFullScore) {
  Rng rng(3);
  auto idx = random_index(rng, 3, 2, 16, 20);
  HashCode probe{1, BitCode(16)};
  for (std::size_t k = 0; k < 16; k += 3) probe.b.set(k);
  idx.add_video(0, {"probe", 100, 25, 1}, std::vector<Signature>{{1, probe}});
  const auto got = idx.knn(probe, 42, 5);
  ASSERT_FALSE(got.empty());
  EXPECT_EQ(got.front().video_id, 0u);
  EXPECT_EQ(got.front().score, 16);
  EXPECT_EQ(got.front().t_q, 42);
}

TEST(Knn, MatchesFullScanOracle) {
  Rng rng(11);
  // 50 postings in one cell.
  const auto idx = random_index(rng, 5, 1, 12, 10);
  ASSERT_EQ(idx.list(0).size(), 50u);
  for (int trial = 0; trial < 50; ++trial) {
    const auto query = random_code(rng, 1, 12);
    EXPECT_EQ(idx.knn(query, trial, 10), oracle::knn(idx, query, trial, 10, 0));
  }
}

TEST(Knn, PropertiesOnRandomIndexes) {
  Rng rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const auto centroids = static_cast<std::uint32_t>(rng.between(1, 6));
    const auto dim = static_cast<std::size_t>(rng.between(1, 20));
    const auto idx = random_index(rng, static_cast<std::uint32_t>(rng.between(0, 5)), centroids, dim,
                                  static_cast<std::size_t>(rng.between(0, 40)));
    for (int q = 0; q < 10; ++q) {
      const auto query = random_code(rng, centroids, dim);
      const auto n_nn = static_cast<std::size_t>(rng.between(1, 30));
      const int tau = static_cast<int>(rng.between(0, static_cast<std::int64_t>(dim) + 1));
      const auto got = idx.knn(query, q, n_nn, tau);
      EXPECT_LE(got.size(), n_nn);
      for (const auto& m : got) {
        EXPECT_GE(m.score, 1);
        EXPECT_GE(m.score, tau);
      }
      EXPECT_EQ(got, oracle::knn(idx, query, q, n_nn, tau));
    }
  }
}

TEST(Knn, RejectsBadArguments) {
  const InvertedIndex idx(tiny_codebook(4, 8), 10, 3);
  EXPECT_THROW(idx.knn({0, BitCode(8)}, 0, 0), InvalidInput);
  EXPECT_THROW(idx.knn({0, BitCode(7)}, 0, 3), InvalidInput);
}

TEST(Persistence, EmptyIndexRoundTrip) {
  const InvertedIndex idx(tiny_codebook(3, 5), 12, 2);
  const auto path = temp_path("empty.veei");
  idx.save(path);
  const auto loaded = InvertedIndex::load(path);
  EXPECT_EQ(loaded, idx);
  EXPECT_TRUE(loaded.frozen());
  EXPECT_EQ(loaded.window_half(), 12u);
  EXPECT_EQ(loaded.min_separation(), 2u);
  std::filesystem::remove(path);
}

TEST(Persistence, ReloadedIndexAnswersIdentically) {
  Rng rng(21);
  const auto idx = random_index(rng, 3, 4, 10, 30);
  const auto path = temp_path("three.veei");
  idx.save(path);
  const auto loaded = InvertedIndex::load(path);
  EXPECT_EQ(loaded, idx);
  for (int q = 0; q < 20; ++q) {
    const auto query = random_code(rng, 4, 10);
    EXPECT_EQ(idx.knn(query, q, 7), loaded.knn(query, q, 7));
  }
  EXPECT_EQ(loaded.serialize(), idx.serialize());
  std::filesystem::remove(path);
}

TEST(Persistence, EveryCorruptedByteIsDetected) {
  Rng rng(5);
  const auto bytes = random_index(rng, 2, 3, 9, 6).serialize();
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    auto bad = bytes;
    bad[i] ^= 0x5a;
    EXPECT_THROW(InvertedIndex::deserialize(bad), LoadError) << "byte " << i;
  }
  // Payload bytes specifically fail the checksum.
  auto bad = bytes;
  bad[io::kSealHeaderSize + 3] ^= 1;
  try {
    InvertedIndex::deserialize(bad);
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_EQ(e.code(), LoadErrc::checksum);
  }
}

TEST(Persistence, DistinctErrorsForTruncationVersionAndMagic) {
  Rng rng(6);
  const auto bytes = random_index(rng, 1, 2, 8, 4).serialize();
  auto expect_code = [](std::vector<std::uint8_t> data, LoadErrc code) {
    try {
      InvertedIndex::deserialize(data);
      ADD_FAILURE() << "expected failure";
    } catch (const LoadError& e) {
      EXPECT_EQ(e.code(), code) << e.what();
    }
  };
  auto truncated = bytes;
  truncated.resize(bytes.size() - 5);
  expect_code(truncated, LoadErrc::truncated);
  expect_code({bytes.begin(), bytes.begin() + 8}, LoadErrc::truncated);
  auto version = bytes;
  version[4] = 2;
  expect_code(version, LoadErrc::version_mismatch);
  auto magic = bytes;
  magic[1] = 'X';
  expect_code(magic, LoadErrc::bad_magic);
  EXPECT_THROW(InvertedIndex::load(temp_path("does-not-exist")), LoadError);
}

TEST(Persistence, FileSizeGrowsLinearlyInPostings) {
  // Fixed header/codebook/video overhead plus 8 + ceil(N_F/8) bytes per posting.
  const std::size_t dim = 12;
  std::vector<std::size_t> sizes;
  for (std::size_t postings : {100u, 200u, 400u}) {
    InvertedIndex idx(tiny_codebook(5, dim), 10, 3);
    Rng rng(postings);
    idx.add_video(0, {"v", postings * 3, 25, 1}, random_signatures(rng, postings, 5, dim));
    sizes.push_back(idx.serialize().size());
  }
  const std::size_t per_posting = 8 + BitCode::byte_size(dim);
  EXPECT_EQ(sizes[1] - sizes[0], 100 * per_posting);
  EXPECT_EQ(sizes[2] - sizes[1], 200 * per_posting);
}
