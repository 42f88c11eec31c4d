#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "autolab/errors.hpp"
#include "autolab/rng.hpp"
#include "autolab/simlab.hpp"
#include "autolab/storage.hpp"

using namespace autolab;

namespace {

std::vector<std::uint8_t> random_bytes(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint8_t> out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng.below(256));
  return out;
}

int levenshtein(const std::string& a, const std::string& b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1), prev[j] + 1,
                         cur[j - 1] + 1});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string random_bases(std::size_t n, Rng& rng) {
  static const char* kBases = "ACGT";
  std::string out(n, 'A');
  for (auto& c : out) c = kBases[rng.below(4)];
  return out;
}

}  // namespace

TEST_CASE("bytes map to bases two bits at a time, big-endian") {
  CHECK(bytes_to_bases({0x1B}) == "ACGT");
  CHECK(bytes_to_bases({0x00}) == "AAAA");
  CHECK(bytes_to_bases({0xFF}) == "TTTT");
  CHECK(bytes_to_bases({}) == "");
  CHECK(bases_to_bytes("ACGT") == std::vector<std::uint8_t>{0x1B});

  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    auto data = random_bytes(1 + seed % 97, seed);
    CHECK(bases_to_bytes(bytes_to_bases(data)) == data);
  }

  CHECK_THROWS_AS(bases_to_bytes("ACG"), ParseError);     // not a whole byte
  CHECK_THROWS_AS(bases_to_bytes("ACGX"), ParseError);    // not a base
}

TEST_CASE("strand indexes are doubled base-4 digits") {
  CHECK(index_sequence(0, 8) == "AAAAAAAA");
  CHECK(index_sequence(1, 8) == "AAAAAACC");
  CHECK(index_sequence(27, 8) == "AACCGGTT");  // 27 = 0,1,2,3 in base 4
  CHECK(index_sequence(255, 8) == "TTTTTTTT");
  CHECK(index_sequence(5, 4) == "CCCC");

  std::set<std::string> seen;
  std::vector<std::string> all;
  for (std::size_t i = 0; i < 256; ++i) {
    all.push_back(index_sequence(i, 8));
    CHECK(all.back().size() == 8);
    seen.insert(all.back());
  }
  CHECK(seen.size() == 256);  // injective over the addressable range

  // doubling keeps every pair of addresses at least two edits apart
  int min_dist = 1 << 20;
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = i + 1; j < all.size(); ++j)
      min_dist = std::min(min_dist, edit_distance_banded(all[i], all[j], 8));
  CHECK(min_dist >= 2);
}

TEST_CASE("encoding chunks data into indexed fixed-length strands") {
  StrandSet empty = encode({}, 8);
  CHECK(empty.header.strand_count == 0);
  CHECK(empty.strands.empty());
  CHECK(empty.header.data_bytes == 0);
  CHECK(empty.header.index_nt == 8);

  StrandSet one = encode({0x1B}, 8);
  REQUIRE(one.header.strand_count == 1);
  CHECK(one.header.data_bytes == 1);
  CHECK(one.header.payload_nt == 8);
  CHECK(one.strands[0] == "AAAAAAAA" "ACGTAAAA");  // index 0 + payload + padding

  StrandSet three = encode({0x1B, 0xFF, 0x00}, 8);
  REQUIRE(three.header.strand_count == 2);  // 12 bases over 8-base payloads
  CHECK(three.strands[0] == "AAAAAAAA" "ACGTTTTT");
  CHECK(three.strands[1] == "AAAAAACC" "AAAAAAAA");
  for (const auto& s : three.strands) CHECK(s.size() == 16);

  CHECK_THROWS_AS(encode({0x01}, 6), ConfigError);   // too short for a byte
  CHECK_THROWS_AS(encode({0x01}, 9), ConfigError);   // odd width
  CHECK(encode(random_bytes(512, 1), 8).header.strand_count == 256);
  CHECK_THROWS_AS(encode(random_bytes(513, 1), 8), PayloadTooLargeError);
}

TEST_CASE("noiseless archives decode back to the exact payload") {
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    auto data = random_bytes(60, seed);
    StrandSet set = encode(data, 8);
    std::vector<std::string> reads;
    for (int copy = 0; copy < 3; ++copy)
      for (const auto& s : set.strands) reads.push_back(s);

    DecodeReport report = decode(reads, set.header);
    CAPTURE(seed);
    REQUIRE(report.data == data);
    CHECK(report.discarded_reads == 0);
    for (std::size_t size : report.cluster_sizes) CHECK(size == 3);
    for (double agreement : report.consensus_agreement)
      CHECK(agreement == doctest::Approx(1.0));
  }
}

TEST_CASE("unattributable reads are discarded, not guessed") {
  auto data = random_bytes(40, 4);  // 20 strands
  StrandSet set = encode(data, 8);
  std::vector<std::string> reads(set.strands);

  // alternating GC is >4 edits from every doubled-digit address: the AA
  // prefix costs 2 and each doubled pair costs at least 1 more
  std::string garbage;
  for (int i = 0; i < 15; ++i) garbage += "GC";
  reads.push_back(garbage);
  DecodeReport report = decode(reads, set.header);
  CHECK(report.data == data);
  CHECK(report.discarded_reads == 1);
}

TEST_CASE("reads equidistant to two addresses are discarded") {
  std::vector<std::uint8_t> data(4, 0x00);  // two all-A payload strands
  StrandSet set = encode(data, 8);
  REQUIRE(set.header.strand_count == 2);

  std::vector<std::string> reads;
  for (int copy = 0; copy < 2; ++copy)
    for (const auto& s : set.strands) reads.push_back(s);
  // one edit from both "AAAAAAAA" and "AAAAAACC": no safe home
  reads.push_back("AAAAAAAC" + std::string(8, 'A'));

  DecodeReport report = decode(reads, set.header);
  CHECK(report.data == data);
  CHECK(report.discarded_reads == 1);
  CHECK(report.cluster_sizes == std::vector<std::size_t>{2, 2});
}

TEST_CASE("a strand with no reads raises with its index") {
  auto data = random_bytes(10, 9);  // five strands
  StrandSet set = encode(data, 8);
  REQUIRE(set.header.strand_count == 5);
  std::vector<std::string> reads;
  for (std::size_t i = 0; i < set.strands.size(); ++i)
    if (i != 3) reads.push_back(set.strands[i]);

  try {
    decode(reads, set.header);
    FAIL("expected UnrecoverableStrandError");
  } catch (const UnrecoverableStrandError& e) {
    CHECK(e.strand_index == 3);
    CHECK(e.kind() == "UnrecoverableStrandError");
  }
}

TEST_CASE("consensus seeding survives an indel-bearing first read") {
  auto data = random_bytes(6, 21);
  StrandSet set = encode(data, 24);
  REQUIRE(set.header.strand_count == 1);
  const std::string& strand = set.strands[0];  // 32 nt

  // same length as the strand, but carrying one deletion and one insertion;
  // plurality voting alone would lock in the shifted segment if this read
  // seeded the template
  std::string shifted = strand.substr(0, 12) + strand.substr(13);
  shifted = shifted.substr(0, 20) + "G" + shifted.substr(20);
  REQUIRE(shifted.size() == strand.size());
  if (shifted == strand) return;  // the indel pair cancelled out; nothing to test

  std::vector<std::string> reads{shifted, strand, strand, strand, strand};
  DecodeReport report = decode(reads, set.header);
  CHECK(report.data == data);
  CHECK(report.cluster_sizes == std::vector<std::size_t>{5});
}

TEST_CASE("a noisy thirty-read cluster recovers the strand almost always") {
  ErrorChannel ch;  // published per-base rates
  auto data = random_bytes(6, 2);
  StrandSet set = encode(data, 24);
  REQUIRE(set.header.strand_count == 1);

  int exact = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    std::vector<std::string> reads;
    for (int r = 0; r < 30; ++r)
      reads.push_back(corrupt(set.strands[0], ch, mix_seed(seed, r)));
    DecodeReport report = decode(reads, set.header);
    exact += report.data == data;
  }
  CHECK(exact >= 99);
}

TEST_CASE("banded edit distance agrees with the full recurrence inside the band") {
  Rng rng(31);
  for (int trial = 0; trial < 3000; ++trial) {
    int band = 1 + static_cast<int>(rng.below(8));
    std::string a = random_bases(rng.below(26), rng);
    std::string b = random_bases(rng.below(26), rng);
    int full = levenshtein(a, b);
    int banded = edit_distance_banded(a, b, band);
    CAPTURE(a);
    CAPTURE(b);
    CAPTURE(band);
    CAPTURE(full);
    CAPTURE(banded);
    int gap = std::abs(static_cast<int>(a.size()) - static_cast<int>(b.size()));
    if (gap > band) {
      CHECK(banded == gap + band);  // cheap lower-bound escape
    } else if (full <= band) {
      CHECK(banded == full);
    } else {
      CHECK(banded > band);  // only the verdict "too far" is guaranteed
    }
  }
  CHECK(edit_distance_banded("", "", 4) == 0);
  CHECK(edit_distance_banded("ACGT", "ACGT", 1) == 0);
  CHECK(edit_distance_banded("ACGT", "AGGT", 1) == 1);
}
