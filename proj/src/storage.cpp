#include "autolab/storage.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <map>
#include <vector>

#include "autolab/errors.hpp"

namespace autolab {

namespace {

constexpr const char* kBases = "ACGT";

int base_index(char c) {
  switch (c) {
    case 'A': return 0;
    case 'C': return 1;
    case 'G': return 2;
    case 'T': return 3;
  }
  throw ParseError(std::string("invalid base '") + c + "'");
}

/// Cost of aligning the whole of `index` against any prefix of `window`.
/// Leading window bases are not free (the index sits at the strand start);
/// trailing window bases cost nothing (the payload follows the index).
int prefix_align_cost(const std::string& index, const std::string& window) {
  const int m = static_cast<int>(index.size());
  const int w = static_cast<int>(window.size());
  std::vector<int> prev(w + 1), cur(w + 1);
  for (int j = 0; j <= w; ++j) prev[j] = j;
  for (int i = 1; i <= m; ++i) {
    cur[0] = i;
    for (int j = 1; j <= w; ++j) {
      int sub = prev[j - 1] + (index[i - 1] == window[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  int best = prev[0];
  for (int j = 1; j <= w; ++j) best = std::min(best, prev[j]);
  return best;
}

/// Banded global alignment of `read` against `tmpl` with traceback; projects
/// read bases onto template positions and records votes.
void align_and_vote(const std::string& tmpl, const std::string& read,
                    std::vector<std::array<int, 4>>& votes) {
  const int n = static_cast<int>(tmpl.size());
  const int m = static_cast<int>(read.size());
  const int band = std::max(4, std::abs(n - m) + 2);
  const int width = 2 * band + 1;
  const int inf = 1 << 28;
  std::vector<int> dp((n + 1) * width, inf);
  auto at = [&](int i, int j) -> int& {
    int off = j - (i - band);
    return dp[i * width + off];
  };
  auto in_band = [&](int i, int j) {
    return j >= 0 && j <= m && j >= i - band && j <= i + band;
  };
  at(0, 0) = 0;
  for (int j = 1; j <= std::min(m, band); ++j) at(0, j) = j;
  for (int i = 1; i <= n; ++i) {
    for (int j = std::max(0, i - band); j <= std::min(m, i + band); ++j) {
      int best = inf;
      if (in_band(i - 1, j - 1) && j >= 1)
        best = std::min(best,
                        at(i - 1, j - 1) + (tmpl[i - 1] == read[j - 1] ? 0 : 1));
      if (in_band(i - 1, j)) best = std::min(best, at(i - 1, j) + 1);
      if (j >= 1 && in_band(i, j - 1)) best = std::min(best, at(i, j - 1) + 1);
      at(i, j) = best;
    }
  }
  // traceback from (n, m)
  int i = n, j = m;
  if (!in_band(n, m) || at(n, m) >= inf) return;  // read too divergent: no votes
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && in_band(i - 1, j - 1) &&
        at(i, j) == at(i - 1, j - 1) + (tmpl[i - 1] == read[j - 1] ? 0 : 1)) {
      votes[i - 1][base_index(read[j - 1])] += 1;
      --i;
      --j;
    } else if (i > 0 && in_band(i - 1, j) && at(i, j) == at(i - 1, j) + 1) {
      --i;  // deletion in read: no vote for this template position
    } else if (j > 0 && in_band(i, j - 1) && at(i, j) == at(i, j - 1) + 1) {
      --j;  // insertion in read: extra base, no template position
    } else {
      break;  // outside band; abandon traceback
    }
  }
}

}  // namespace

std::string bytes_to_bases(const std::vector<std::uint8_t>& data) {
  std::string out;
  out.reserve(data.size() * 4);
  for (std::uint8_t byte : data)
    for (int shift = 6; shift >= 0; shift -= 2)
      out.push_back(kBases[(byte >> shift) & 3]);
  return out;
}

std::vector<std::uint8_t> bases_to_bytes(const std::string& bases) {
  if (bases.size() % 4 != 0)
    throw ParseError("base string length must be a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(bases.size() / 4);
  for (std::size_t i = 0; i < bases.size(); i += 4) {
    int byte = 0;
    for (int k = 0; k < 4; ++k) byte = (byte << 2) | base_index(bases[i + k]);
    out.push_back(static_cast<std::uint8_t>(byte));
  }
  return out;
}

std::string index_sequence(std::size_t index, int index_nt) {
  // Each base-4 digit is written twice, so distinct addresses stay at least
  // two edits apart and a single indel cannot slide one address into another.
  std::string out(index_nt, 'A');
  for (int pos = index_nt - 2; pos >= 0; pos -= 2) {
    out[pos] = out[pos + 1] = kBases[index & 3];
    index >>= 2;
  }
  return out;
}

StrandSet encode(const std::vector<std::uint8_t>& data, int payload_nt) {
  if (payload_nt < 8 || payload_nt % 2 != 0)
    throw ConfigError("payload_nt must be even and at least 8");
  StrandSet set;
  set.header.payload_nt = payload_nt;
  set.header.data_bytes = data.size();
  if (data.empty()) return set;

  std::string bases = bytes_to_bases(data);
  std::size_t count = (bases.size() + payload_nt - 1) / payload_nt;
  std::size_t addressable = 1;
  for (int i = 0; i + 1 < set.header.index_nt; i += 2) addressable *= 4;
  if (count > addressable)
    throw PayloadTooLargeError(std::to_string(count) + " strands exceed the " +
                               std::to_string(addressable) + " addressable by a " +
                               std::to_string(set.header.index_nt) + "nt index");
  set.header.strand_count = count;
  for (std::size_t i = 0; i < count; ++i) {
    std::string payload = bases.substr(i * payload_nt, payload_nt);
    payload.resize(payload_nt, 'A');  // zero padding
    set.strands.push_back(index_sequence(i, set.header.index_nt) + payload);
  }
  return set;
}

int edit_distance_banded(const std::string& a, const std::string& b, int band) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  if (std::abs(n - m) > band) return std::abs(n - m) + band;  // lower bound escape
  const int inf = 1 << 28;
  std::vector<int> prev(m + 1, inf), cur(m + 1, inf);
  for (int j = 0; j <= std::min(m, band); ++j) prev[j] = j;
  for (int i = 1; i <= n; ++i) {
    std::fill(cur.begin(), cur.end(), inf);
    int lo = std::max(1, i - band);
    int hi = std::min(m, i + band);
    if (i - band <= 0) cur[0] = i;
    for (int j = lo; j <= hi; ++j) {
      int best = inf;
      if (prev[j - 1] < inf) best = std::min(best, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1));
      if (prev[j] < inf) best = std::min(best, prev[j] + 1);
      if (cur[j - 1] < inf) best = std::min(best, cur[j - 1] + 1);
      best = std::min(best, inf);
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  return prev[m] >= inf ? band + 1 : prev[m];
}

DecodeReport decode(const std::vector<std::string>& reads, const StorageHeader& header) {
  DecodeReport report;
  if (header.strand_count == 0) return report;
  const int L = header.index_nt + header.payload_nt;

  std::vector<std::string> indexes;
  std::map<std::string, std::size_t> exact;
  for (std::size_t i = 0; i < header.strand_count; ++i) {
    indexes.push_back(index_sequence(i, header.index_nt));
    exact[indexes.back()] = i;
  }

  std::vector<std::vector<const std::string*>> clusters(header.strand_count);
  const int max_index_dist = header.index_nt / 2;
  for (const auto& read : reads) {
    if (read.size() >= static_cast<std::size_t>(header.index_nt)) {
      auto hit = exact.find(read.substr(0, header.index_nt));
      if (hit != exact.end()) {
        clusters[hit->second].push_back(&read);
        continue;
      }
    }
    std::string window = read.substr(
        0, std::min(read.size(), static_cast<std::size_t>(header.index_nt + 6)));
    int best_dist = 1 << 20;
    int second_dist = 1 << 20;
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < indexes.size(); ++i) {
      int d = prefix_align_cost(indexes[i], window);
      if (d < best_dist) {
        second_dist = best_dist;
        best_dist = d;
        best_idx = i;
      } else if (d < second_dist) {
        second_dist = d;
      }
    }
    // A read as close to a second address as to its best one would pollute
    // that cluster's consensus; drop it rather than guess.
    if (best_dist <= max_index_dist && best_dist < second_dist)
      clusters[best_idx].push_back(&read);
    else
      ++report.discarded_reads;
  }

  std::string all_bases;
  report.cluster_sizes.resize(header.strand_count);
  report.consensus_agreement.resize(header.strand_count, 0.0);
  for (std::size_t s = 0; s < header.strand_count; ++s) {
    const auto& cluster = clusters[s];
    report.cluster_sizes[s] = cluster.size();
    if (cluster.empty())
      throw UnrecoverableStrandError(s, "strand " + std::to_string(s) +
                                            " attracted no reads");
    // Initial template: the cluster medoid. Plurality voting repairs
    // substitutions but confirms template indels (aligned reads vote for the
    // shifted bases), so the seed must be the read least likely to carry one.
    const std::string* seedp = cluster.front();
    if (cluster.size() > 1) {
      long best_score = -1;
      int best_len_delta = 0;
      for (const auto* r : cluster) {
        long score = 0;
        for (const auto* o : cluster)
          if (o != r) score += edit_distance_banded(*r, *o, 6);
        int len_delta = std::abs(static_cast<int>(r->size()) - L);
        if (best_score < 0 || score < best_score ||
            (score == best_score && len_delta < best_len_delta)) {
          best_score = score;
          best_len_delta = len_delta;
          seedp = r;
        }
      }
    }
    std::string tmpl = *seedp;
    tmpl.resize(L, 'A');

    double agreement = 0.0;
    for (int round = 0; round < 2; ++round) {
      std::vector<std::array<int, 4>> votes(L, {0, 0, 0, 0});
      for (const auto* r : cluster) align_and_vote(tmpl, *r, votes);
      std::string next = tmpl;
      long agree_sum = 0;
      long vote_sum = 0;
      for (int pos = 0; pos < L; ++pos) {
        int best_base = -1, best_count = 0, total = 0;
        for (int b = 0; b < 4; ++b) {
          total += votes[pos][b];
          if (votes[pos][b] > best_count) {
            best_count = votes[pos][b];
            best_base = b;
          }
        }
        if (best_base >= 0) next[pos] = kBases[best_base];
        agree_sum += best_count;
        vote_sum += total;
      }
      tmpl = next;
      agreement = vote_sum > 0 ? static_cast<double>(agree_sum) / vote_sum : 0.0;
    }
    report.consensus_agreement[s] = agreement;
    all_bases += tmpl.substr(header.index_nt);
  }

  all_bases.resize(header.data_bytes * 4, 'A');
  report.data = bases_to_bytes(all_bases);
  return report;
}

}  // namespace autolab
