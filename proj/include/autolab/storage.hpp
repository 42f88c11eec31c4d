#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace autolab {

/// Out-of-band description of an encoded archive, kept alongside the strands
/// (in the run manifest, not in the DNA itself).
struct StorageHeader {
  std::size_t strand_count = 0;
  std::size_t data_bytes = 0;
  int payload_nt = 0;
  int index_nt = 8;
};

struct StrandSet {
  StorageHeader header;
  std::vector<std::string> strands;  // index prefix + payload, fixed length
};

/// Two bits per base, big-endian within each byte: 00=A 01=C 10=G 11=T.
std::string bytes_to_bases(const std::vector<std::uint8_t>& data);
std::vector<std::uint8_t> bases_to_bytes(const std::string& bases);

/// Fixed-width base-4 strand index, most significant digit first, each digit
/// written twice so distinct addresses stay at least two edits apart.
std::string index_sequence(std::size_t index, int index_nt);

/// Splits data into fixed-size payload chunks, each prefixed with its strand
/// index.  The final chunk is zero-padded.  Throws PayloadTooLargeError when
/// the index width cannot address all strands.
StrandSet encode(const std::vector<std::uint8_t>& data, int payload_nt);

struct DecodeReport {
  std::vector<std::uint8_t> data;
  std::vector<std::size_t> cluster_sizes;       // reads assigned per strand
  std::vector<double> consensus_agreement;      // mean per-base read agreement
  std::size_t discarded_reads = 0;
};

/// Reconstructs the archive from noisy reads: clusters reads by their index
/// prefix (banded edit distance against the known index list), builds a
/// per-cluster consensus at the expected strand length, then reassembles the
/// payload bytes.  Throws UnrecoverableStrandError when a strand attracts no
/// reads.
DecodeReport decode(const std::vector<std::string>& reads, const StorageHeader& header);

/// Banded edit distance between two sequences (unit costs).
int edit_distance_banded(const std::string& a, const std::string& b, int band);

}  // namespace autolab
