#pragma once

// Append-ordered Merkle tree in the RFC 6962 shape: leaves hashed with a 0x00
// prefix, interior nodes with 0x01, unbalanced trees split at the largest
// power of two below n.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsort/bytes.hpp"

namespace vsort::merkle {

inline constexpr std::size_t kMaxEntryBytes = 1024;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AuditPath {
  std::uint64_t leaf_index = 0;
  std::uint64_t tree_size = 0;
  std::vector<Hash32> siblings;  // leaf to root

  friend bool operator==(const AuditPath&, const AuditPath&) = default;
};

Hash32 leaf_hash(std::span<const std::uint8_t> entry);
Hash32 node_hash(const Hash32& left, const Hash32& right);
/// SHA-256 of the empty string.
Hash32 empty_root();

/// Number of siblings on the path of `index` in a tree of `size` leaves.
std::size_t path_length(std::uint64_t index, std::uint64_t size);

/// Level-by-level tree. Each level pairs adjacent nodes and promotes an odd
/// trailing node unchanged, which reproduces the power-of-two split shape.
class Tree {
 public:
  /// Leaf and level hashing run under OpenMP unless `parallel` is false.
  static Tree build(std::span<const Bytes> leaves, bool parallel = true);

  std::uint64_t size() const { return levels_.empty() ? 0 : levels_.front().size(); }
  Hash32 root() const;
  AuditPath audit_path(std::uint64_t index) const;

 private:
  std::vector<std::vector<Hash32>> levels_;
};

Hash32 root(std::span<const Bytes> leaves);
AuditPath audit_path(std::span<const Bytes> leaves, std::uint64_t index);

/// Direct recursive definitions; the serial reference the tree builder is
/// tested against.
Hash32 root_reference(std::span<const Bytes> leaves);
AuditPath audit_path_reference(std::span<const Bytes> leaves, std::uint64_t index);

struct InclusionVerdict {
  bool included = false;
  std::string reason;

  explicit operator bool() const { return included; }
};

InclusionVerdict verify_inclusion(std::span<const std::uint8_t> entry, const AuditPath& path,
                                  const Hash32& expected_root);

}  // namespace vsort::merkle
