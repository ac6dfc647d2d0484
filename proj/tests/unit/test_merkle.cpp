#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "vsort/merkle.hpp"
#include "vsort/transcript.hpp"

using namespace vsort;
using namespace vsort::merkle;

namespace {

std::vector<Bytes> make_leaves(std::size_t n) {
  std::vector<Bytes> leaves;
  for (std::size_t i = 0; i < n; ++i) leaves.push_back(to_bytes("entry-" + std::to_string(i)));
  return leaves;
}

std::size_t ceil_log2(std::size_t n) {
  std::size_t r = 0;
  while ((std::size_t{1} << r) < n) ++r;
  return r;
}

}  // namespace

TEST_CASE("leaf and node hashing") {
  // SHA-256 of the single byte 0x00.
  CHECK(to_hex(leaf_hash({})) == "6e340b9cffb37a989ca544e6bb780a2c78901d3fb33738768511a30617afa01d");
  CHECK(leaf_hash(to_bytes("x")) == leaf_hash(to_bytes("x")));

  // A leaf whose bytes look like two child hashes still hashes differently.
  const Hash32 l = leaf_hash(to_bytes("l")), r = leaf_hash(to_bytes("r"));
  Bytes fake(l.begin(), l.end());
  append(fake, r);
  CHECK(leaf_hash(fake) != node_hash(l, r));

  CHECK_THROWS_AS(leaf_hash(Bytes(1025)), Error);
  CHECK_NOTHROW(leaf_hash(Bytes(1024)));
}

TEST_CASE("roots") {
  CHECK(root({}) == sha256(std::string_view{}));
  const std::vector<Bytes> one{to_bytes("a")};
  CHECK(root(one) == leaf_hash(to_bytes("a")));
  const std::vector<Bytes> abc{to_bytes("a"), to_bytes("b"), to_bytes("c")};
  // Reference script value.
  CHECK(to_hex(root(abc)) == "36642e73c2540ab121e3a6bf9545b0a24982cd830eb13d3cd19de3ce6c021ec1");
  CHECK(root(abc) == node_hash(node_hash(leaf_hash(abc[0]), leaf_hash(abc[1])), leaf_hash(abc[2])));
}

TEST_CASE("level builder matches the recursive reference") {
  for (std::size_t n = 0; n <= 70; ++n) {
    const auto leaves = make_leaves(n);
    CAPTURE(n);
    const auto parallel = Tree::build(leaves, true);
    const auto serial = Tree::build(leaves, false);
    CHECK(parallel.root() == root_reference(leaves));
    CHECK(serial.root() == root_reference(leaves));
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(parallel.audit_path(i) == audit_path_reference(leaves, i));
    }
  }
  const auto big = make_leaves(1000);
  CHECK(Tree::build(big).root() == root_reference(big));
}

TEST_CASE("audit paths") {
  SUBCASE("structure-forced cases") {
    const auto one = make_leaves(1);
    CHECK(audit_path(one, 0).siblings.empty());
    const auto two = make_leaves(2);
    const auto p = audit_path(two, 0);
    REQUIRE(p.siblings.size() == 1);
    CHECK(p.siblings[0] == leaf_hash(two[1]));
    const auto five = make_leaves(5);
    CHECK(audit_path(five, 3).siblings.size() == 3);
    CHECK(audit_path(five, 4).siblings.size() == 1);
  }
  SUBCASE("out of range") {
    CHECK_THROWS_AS(audit_path(make_leaves(3), 3), Error);
    CHECK_THROWS_AS(audit_path({}, 0), Error);
  }
}

TEST_CASE("exhaustive round trip for n <= 64") {
  for (std::size_t n = 1; n <= 64; ++n) {
    const auto leaves = make_leaves(n);
    const auto tree = Tree::build(leaves);
    const auto r = tree.root();
    std::size_t max_len = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto path = tree.audit_path(i);
      CAPTURE(n);
      CAPTURE(i);
      CHECK(verify_inclusion(leaves[i], path, r));
      CHECK(path.siblings.size() == path_length(i, n));
      CHECK(path.siblings.size() <= ceil_log2(n) + 1);
      max_len = std::max(max_len, path.siblings.size());
    }
    CHECK(max_len == ceil_log2(n));
  }
}

TEST_CASE("inclusion soundness") {
  const auto leaves = make_leaves(13);
  const auto tree = Tree::build(leaves);
  const auto r = tree.root();
  const auto path = tree.audit_path(6);

  CHECK_FALSE(verify_inclusion(to_bytes("someone else"), path, r));

  auto truncated = path;
  truncated.siblings.pop_back();
  CHECK_FALSE(verify_inclusion(leaves[6], truncated, r));

  auto extended = path;
  extended.siblings.push_back(r);
  CHECK_FALSE(verify_inclusion(leaves[6], extended, r));

  auto zero_size = path;
  zero_size.tree_size = 0;
  CHECK(verify_inclusion(leaves[6], zero_size, r).reason == "index-out-of-range");

  std::mt19937_64 rng(1);
  for (int i = 0; i < 300; ++i) {
    auto p = path;
    Bytes entry = leaves[6];
    switch (i % 3) {
      case 0:
        entry[rng() % entry.size()] ^= static_cast<std::uint8_t>(1 + rng() % 255);
        break;
      case 1: {
        auto& s = p.siblings[rng() % p.siblings.size()];
        s[rng() % 32] ^= static_cast<std::uint8_t>(1 + rng() % 255);
        break;
      }
      case 2:
        p.leaf_index = (p.leaf_index + 1 + rng() % 12) % 13;
        break;
    }
    CHECK_FALSE(verify_inclusion(entry, p, r));
  }
}

TEST_CASE("tree_size is only bound through the path shape") {
  // The root does not commit to n, so a size with the same sibling layout
  // for this index still verifies; callers must compare tree_size with the
  // published n (the receipt check does). Any size that changes the layout fails.
  const auto leaves = make_leaves(13);
  const auto tree = Tree::build(leaves);
  const auto path = tree.audit_path(6);
  int rejected = 0;
  for (std::uint64_t size = 1; size <= 64; ++size) {
    if (size == 13) continue;
    auto p = path;
    p.tree_size = size;
    const bool ok = static_cast<bool>(verify_inclusion(leaves[6], p, tree.root()));
    if (!ok) ++rejected;
    else CHECK(path_length(6, size) == path.siblings.size());
  }
  CHECK(rejected > 0);
}

TEST_CASE("leaf order matters") {
  std::mt19937_64 rng(4);
  auto leaves = make_leaves(20);
  const auto r = root(leaves);
  for (int i = 0; i < 20; ++i) {
    auto shuffled = leaves;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    if (shuffled == leaves) continue;
    CHECK(root(shuffled) != r);
  }
  // Duplicates are allowed and distinguished by position.
  const std::vector<Bytes> dup{to_bytes("same"), to_bytes("same"), to_bytes("other")};
  const auto t = Tree::build(dup);
  CHECK(verify_inclusion(dup[0], t.audit_path(0), t.root()));
  CHECK(verify_inclusion(dup[1], t.audit_path(1), t.root()));
}

TEST_CASE("audit path JSON wire format") {
  const auto leaves = make_leaves(5);
  const auto p = audit_path(leaves, 3);
  const auto j = to_json(p);
  CHECK(j.dump().rfind("{\"leaf_index\":3,\"tree_size\":5,\"siblings\":[\"", 0) == 0);
  CHECK(audit_path_from_json(nlohmann::json::parse(j.dump())) == p);
  CHECK_THROWS_AS(audit_path_from_json(nlohmann::json::parse(R"({"leaf_index":0})")), FormatError);
  CHECK_THROWS_AS(
      audit_path_from_json(nlohmann::json::parse(R"({"leaf_index":0,"tree_size":1,"siblings":["ab"]})")),
      FormatError);
}
