#include "vsort/merkle.hpp"

#include <bit>

namespace vsort::merkle {

Hash32 leaf_hash(std::span<const std::uint8_t> entry) {
  if (entry.size() > kMaxEntryBytes)
    throw Error("entry exceeds " + std::to_string(kMaxEntryBytes) + " bytes");
  return Sha256().update(std::uint8_t{0x00}).update(entry).finish();
}

Hash32 node_hash(const Hash32& left, const Hash32& right) {
  return Sha256().update(std::uint8_t{0x01}).update(left).update(right).finish();
}

Hash32 empty_root() { return sha256(std::string_view{}); }

std::size_t path_length(std::uint64_t index, std::uint64_t size) {
  std::size_t len = 0;
  while (size > 1) {
    if ((index ^ 1) < size) ++len;
    index >>= 1;
    size = (size + 1) / 2;
  }
  return len;
}

Tree Tree::build(std::span<const Bytes> leaves, bool parallel) {
  Tree t;
  if (leaves.empty()) return t;
  const auto n = static_cast<std::int64_t>(leaves.size());
  for (const auto& leaf : leaves)
    if (leaf.size() > kMaxEntryBytes) throw Error("entry exceeds maximum size");

  std::vector<Hash32> level(leaves.size());
#pragma omp parallel for if (parallel) schedule(static)
  for (std::int64_t i = 0; i < n; ++i) level[i] = leaf_hash(leaves[i]);
  t.levels_.push_back(std::move(level));

  while (t.levels_.back().size() > 1) {
    const auto& below = t.levels_.back();
    const auto pairs = static_cast<std::int64_t>(below.size() / 2);
    std::vector<Hash32> above((below.size() + 1) / 2);
#pragma omp parallel for if (parallel) schedule(static)
    for (std::int64_t i = 0; i < pairs; ++i) above[i] = node_hash(below[2 * i], below[2 * i + 1]);
    if (below.size() % 2) above.back() = below.back();
    t.levels_.push_back(std::move(above));
  }
  return t;
}

Hash32 Tree::root() const { return levels_.empty() ? empty_root() : levels_.back().front(); }

AuditPath Tree::audit_path(std::uint64_t index) const {
  if (index >= size()) throw Error("leaf index out of range");
  AuditPath path{index, size(), {}};
  for (std::size_t l = 0; l + 1 < levels_.size(); ++l) {
    const auto sibling = index ^ 1;
    if (sibling < levels_[l].size()) path.siblings.push_back(levels_[l][sibling]);
    index >>= 1;
  }
  return path;
}

Hash32 root(std::span<const Bytes> leaves) { return Tree::build(leaves).root(); }

AuditPath audit_path(std::span<const Bytes> leaves, std::uint64_t index) {
  return Tree::build(leaves).audit_path(index);
}

namespace {

std::size_t split_point(std::size_t n) { return std::bit_floor(n - 1); }

void reference_path(std::span<const Bytes> leaves, std::uint64_t index,
                    std::vector<Hash32>& out) {
  if (leaves.size() <= 1) return;
  const std::size_t k = split_point(leaves.size());
  if (index < k) {
    reference_path(leaves.first(k), index, out);
    out.push_back(root_reference(leaves.subspan(k)));
  } else {
    reference_path(leaves.subspan(k), index - k, out);
    out.push_back(root_reference(leaves.first(k)));
  }
}

}  // namespace

Hash32 root_reference(std::span<const Bytes> leaves) {
  if (leaves.empty()) return empty_root();
  if (leaves.size() == 1) return leaf_hash(leaves.front());
  const std::size_t k = split_point(leaves.size());
  return node_hash(root_reference(leaves.first(k)), root_reference(leaves.subspan(k)));
}

AuditPath audit_path_reference(std::span<const Bytes> leaves, std::uint64_t index) {
  if (index >= leaves.size()) throw Error("leaf index out of range");
  AuditPath path{index, leaves.size(), {}};
  reference_path(leaves, index, path.siblings);
  return path;
}

InclusionVerdict verify_inclusion(std::span<const std::uint8_t> entry, const AuditPath& path,
                                  const Hash32& expected_root) {
  if (entry.size() > kMaxEntryBytes) return {false, "oversized-entry"};
  if (path.tree_size == 0 || path.leaf_index >= path.tree_size)
    return {false, "index-out-of-range"};

  std::uint64_t fn = path.leaf_index;
  std::uint64_t sn = path.tree_size - 1;
  Hash32 r = leaf_hash(entry);
  for (const auto& p : path.siblings) {
    if (sn == 0) return {false, "path-too-long"};
    if ((fn & 1) || fn == sn) {
      r = node_hash(p, r);
      while (!(fn & 1) && fn != 0) {
        fn >>= 1;
        sn >>= 1;
      }
    } else {
      r = node_hash(r, p);
    }
    fn >>= 1;
    sn >>= 1;
  }
  if (sn != 0) return {false, "path-too-short"};
  if (r != expected_root) return {false, "root-mismatch"};
  return {true, {}};
}

}  // namespace vsort::merkle
