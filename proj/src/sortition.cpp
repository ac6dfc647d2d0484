#include "vsort/sortition.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace vsort::sortition {

namespace fs = std::filesystem;
using classgroup::QuadraticForm;

void Config::validate() const {
  if (sortition_id.empty()) throw Error("invalid-config", "sortition_id must not be empty");
  if (closes_at <= opens_at) throw Error("invalid-config", "closes_at must be after opens_at");
  if (k == 0) throw Error("invalid-config", "winner count k must be positive");
  if (discriminant_bits < 16) throw Error("invalid-config", "discriminant_bits must be >= 16");
}

ordered_json to_json(const Config& c) {
  ordered_json j;
  j["sortition_id"] = c.sortition_id;
  j["opens_at"] = c.opens_at;
  j["closes_at"] = c.closes_at;
  j["T"] = c.T;
  j["discriminant_bits"] = c.discriminant_bits;
  j["k"] = c.k;
  return j;
}

Config config_from_json(const nlohmann::json& j) {
  Config c;
  try {
    c.sortition_id = j.at("sortition_id").get<std::string>();
    c.opens_at = j.at("opens_at").get<std::int64_t>();
    c.closes_at = j.at("closes_at").get<std::int64_t>();
    c.T = j.at("T").get<std::uint64_t>();
    c.discriminant_bits = j.value("discriminant_bits", vdf::kDefaultDiscriminantBits);
    c.k = j.value("k", std::uint64_t{1});
  } catch (const nlohmann::json::exception& e) {
    throw Error("invalid-config", std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

// --- winner selection -------------------------------------------------------

namespace {

class HashStream {
 public:
  explicit HashStream(const Hash32& seed) : seed_(seed) {}

  std::uint64_t next_u64() {
    if (offset_ == block_.size()) {
      Bytes input(seed_.begin(), seed_.end());
      append_le64(input, counter_++);
      block_ = sha256(input);
      offset_ = 0;
    }
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{block_[offset_ + i]} << (8 * i);
    offset_ += 8;
    return v;
  }

  /// Uniform in [0, bound) by rejecting the top 2^64 mod bound values.
  std::uint64_t uniform(std::uint64_t bound) {
    const std::uint64_t excess = (0 - bound) % bound;  // 2^64 mod bound
    const std::uint64_t last_ok = std::numeric_limits<std::uint64_t>::max() - excess;
    for (;;) {
      const std::uint64_t x = next_u64();
      if (x <= last_ok) return x % bound;
    }
  }

 private:
  Hash32 seed_;
  Hash32 block_{};
  std::size_t offset_ = 32;
  std::uint64_t counter_ = 0;
};

}  // namespace

Hash32 winner_seed(const QuadraticForm& y) {
  Bytes input = to_bytes("seed");
  classgroup::encode_form(input, y);
  return sha256(input);
}

std::vector<std::uint64_t> select_winners_from_seed(const Hash32& seed, std::uint64_t n,
                                                    std::uint64_t k) {
  if (k == 0 || k > n) throw Error("invalid-k", "winner count must satisfy 1 <= k <= n");
  HashStream stream(seed);
  // Sparse partial Fisher-Yates: only displaced positions are stored.
  std::unordered_map<std::uint64_t, std::uint64_t> moved;
  auto at = [&](std::uint64_t i) {
    auto it = moved.find(i);
    return it == moved.end() ? i : it->second;
  };
  std::vector<std::uint64_t> winners;
  winners.reserve(k);
  for (std::uint64_t i = 0; i < k; ++i) {
    const std::uint64_t j = i + stream.uniform(n - i);
    const std::uint64_t vi = at(i);
    const std::uint64_t vj = at(j);
    moved[i] = vj;
    moved[j] = vi;
    winners.push_back(vj);
  }
  std::sort(winners.begin(), winners.end());
  return winners;
}

std::vector<std::uint64_t> select_winners(const QuadraticForm& y, std::uint64_t n,
                                          std::uint64_t k) {
  return select_winners_from_seed(winner_seed(y), n, k);
}

// --- result generation ------------------------------------------------------

Transcript build_transcript(const Config& config, std::span<const Entry> entries,
                            const signing::SigningKey& key, const vdf::EvalOptions& options) {
  config.validate();
  if (entries.empty()) throw Error("empty-registry", "no registrations to draw from");
  if (config.k > entries.size())
    throw Error("invalid-k", "more winners requested than registrations");

  std::vector<Bytes> leaves;
  leaves.reserve(entries.size());
  for (const auto& e : entries) leaves.push_back(e.x_u);
  const Hash32 x_root = merkle::root(leaves);

  const vdf::Params params = vdf::make_params(x_root, config.T, config.discriminant_bits);
  vdf::Output out;
  try {
    out = vdf::eval(params, options);
  } catch (const vdf::Cancelled&) {
    throw Error("evaluation-cancelled", "evaluation was cancelled");
  }

  Transcript t;
  t.sortition_id = config.sortition_id;
  t.T = config.T;
  t.discriminant_bits = config.discriminant_bits;
  t.k = config.k;
  t.n = entries.size();
  t.x_root = x_root;
  t.d_magnitude = -params.d.value();
  t.d_iterations = out.d_iterations;
  t.y = classgroup::encode_form(out.y);
  t.proof = classgroup::encode_form(out.proof);
  t.challenge_iterations = out.challenge_iterations;
  t.winners = select_winners(out.y, t.n, t.k);
  sign(t, key);
  return t;
}

// --- verification -----------------------------------------------------------

bool VerificationReport::valid() const {
  return !checks.empty() &&
         std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const CheckResult* VerificationReport::find(std::string_view name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

CheckResult check_discriminant(const Transcript& t, bool strict) {
  CheckResult c{"discriminant", false, {}};
  if (t.discriminant_bits < 16) {
    c.reason = "bad-encoding: discriminant_bits below 16";
    return c;
  }
  const Bytes seed = vdf::discriminant_seed(t.x_root);
  const auto params = vdf::discriminant_prime_params(t.discriminant_bits);
  try {
    if (strict) {
      auto full = hashprime::hash_to_prime(seed, params);
      if (full.iterations != t.d_iterations) {
        c.reason = "hint-invalid: published " + std::to_string(t.d_iterations) +
                   ", search found " + std::to_string(full.iterations);
        return c;
      }
      if (full.prime != t.d_magnitude) {
        c.reason = "mismatch: d is not H_prime(x_root)";
        return c;
      }
    } else {
      mpz_class p = hashprime::hash_to_prime_with_hint(seed, params, t.d_iterations);
      if (p != t.d_magnitude) {
        c.reason = "mismatch: d is not H_prime(x_root)";
        return c;
      }
    }
  } catch (const hashprime::HintInvalid& e) {
    c.reason = std::string("hint-invalid: ") + e.what();
    return c;
  } catch (const hashprime::Error& e) {
    c.reason = e.what();
    return c;
  }
  c.passed = true;
  return c;
}

struct DecodedOutput {
  std::optional<vdf::Params> params;
  std::optional<vdf::Output> output;
  std::string error;
};

DecodedOutput decode_output(const Transcript& t) {
  DecodedOutput r;
  try {
    classgroup::Discriminant d(-t.d_magnitude);
    auto y = classgroup::decode_form(t.y, d);
    auto proof = classgroup::decode_form(t.proof, d);
    r.params = vdf::Params{d, t.T, t.discriminant_bits, t.d_iterations};
    r.output = vdf::Output{std::move(y), std::move(proof), t.d_iterations, t.challenge_iterations};
  } catch (const classgroup::Error& e) {
    r.error = std::string("bad-encoding: ") + e.what();
  }
  return r;
}

}  // namespace

VerificationReport verify_transcript(const Transcript& t, bool strict) {
  VerificationReport report;

  report.checks.push_back({"signature", verify_signature(t), {}});
  if (!report.checks.back().passed) report.checks.back().reason = "signature does not verify";

  report.checks.push_back(check_discriminant(t, strict));

  const DecodedOutput decoded = decode_output(t);
  CheckResult vdf_check{"vdf", false, {}};
  if (!decoded.output) {
    vdf_check.reason = decoded.error;
  } else {
    auto verdict = vdf::verify(*decoded.params, *decoded.output, strict);
    vdf_check.passed = verdict.accepted();
    if (!verdict.accepted())
      vdf_check.reason = std::string(vdf::to_string(verdict.reason)) + ": " + verdict.detail;
  }
  report.checks.push_back(std::move(vdf_check));

  CheckResult winners{"winners", false, {}};
  if (!decoded.output) {
    winners.reason = decoded.error;
  } else if (t.k == 0 || t.k > t.n) {
    winners.reason = "invalid k/n";
  } else if (select_winners(decoded.output->y, t.n, t.k) != t.winners) {
    winners.reason = "winners do not match the PRNG seeded by y";
  } else {
    winners.passed = true;
  }
  report.checks.push_back(std::move(winners));
  return report;
}

InclusionReport verify_receipt_inclusion(const Receipt& receipt, std::span<const std::uint8_t> x_u,
                                         const merkle::AuditPath& path, const Transcript& t) {
  if (!verify_signature(receipt, t.server_pubkey)) return {false, "receipt signature invalid"};
  if (receipt.sortition_id != t.sortition_id) return {false, "receipt is for another sortition"};
  if (x_u.size() > merkle::kMaxEntryBytes) return {false, "oversized-entry"};
  if (merkle::leaf_hash(x_u) != receipt.entry_hash)
    return {false, "entry does not match receipt hash"};
  if (path.leaf_index != receipt.leaf_index) return {false, "path is for a different index"};
  if (path.tree_size != t.n) return {false, "path tree size differs from transcript n"};
  auto v = merkle::verify_inclusion(x_u, path, t.x_root);
  if (!v) return {false, "inclusion proof failed: " + v.reason};
  return {true, {}};
}

// --- calibration ------------------------------------------------------------

std::uint64_t recommended_T(double steps_per_second, double target_seconds) {
  return static_cast<std::uint64_t>(std::ceil(steps_per_second * target_seconds * 1.1));
}

Calibration calibrate(double target_seconds, unsigned bits) {
  if (!(target_seconds > 0)) throw Error("invalid-config", "target duration must be positive");
  const Bytes seed = to_bytes("calibration");
  vdf::Params params = vdf::make_params(seed, 0, bits);
  using clock = std::chrono::steady_clock;
  auto burst = [&] {
    const auto start = clock::now();
    vdf::eval(params);
    return std::chrono::duration<double>(clock::now() - start).count();
  };
  params.T = 256;
  double best = burst();
  while (best < 0.25 && params.T < (1ull << 30)) {
    params.T *= 2;
    best = burst();
  }
  // Fastest of a few repeats: scheduler noise only ever slows a burst down.
  for (int i = 0; i < 3; ++i) best = std::min(best, burst());
  const double rate = static_cast<double>(params.T) / best;
  return {recommended_T(rate, target_seconds), rate};
}

// --- protocol state ---------------------------------------------------------

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::pending:
      return "pending";
    case Phase::registration:
      return "registration";
    case Phase::closed:
      return "closed";
    case Phase::evaluating:
      return "evaluating";
    case Phase::published:
      return "published";
  }
  return "unknown";
}

namespace {

constexpr const char* kLogName = "entries.jsonl";
constexpr const char* kTranscriptName = "transcript.json";

std::optional<Transcript> read_transcript_file(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return transcript_from_json(nlohmann::json::parse(ss.str()));
}

void write_file_atomically(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw Error("io", "cannot write " + tmp.string());
  std::size_t off = 0;
  while (off < contents.size()) {
    const auto w = ::write(fd, contents.data() + off, contents.size() - off);
    if (w <= 0) {
      ::close(fd);
      throw Error("io", "short write to " + tmp.string());
    }
    off += static_cast<std::size_t>(w);
  }
  ::fsync(fd);
  ::close(fd);
  fs::rename(tmp, path);
}

}  // namespace

Sortition::Sortition(Config config, signing::SigningKey key,
                     std::optional<std::filesystem::path> data_dir)
    : config_(std::move(config)), key_(std::move(key)), data_dir_(std::move(data_dir)) {
  config_.validate();
  if (!data_dir_) return;
  fs::create_directories(*data_dir_);
  load_log();
  const fs::path log = *data_dir_ / kLogName;
  log_fd_ = ::open(log.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (log_fd_ < 0) throw Error("io", "cannot open entry log " + log.string());
  if (auto t = read_transcript_file(*data_dir_ / kTranscriptName)) adopt(std::move(*t));
}

Sortition::~Sortition() {
  if (log_fd_ >= 0) ::close(log_fd_);
}

void Sortition::load_log() {
  const fs::path log = *data_dir_ / kLogName;
  if (!fs::exists(log)) return;
  std::ifstream in(log, std::ios::binary);
  std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  std::size_t good_end = 0;
  while (pos < contents.size()) {
    const auto nl = contents.find('\n', pos);
    const bool complete = nl != std::string::npos;
    const std::string line = contents.substr(pos, complete ? nl - pos : std::string::npos);
    try {
      if (!complete) throw std::runtime_error("unterminated record");
      auto j = nlohmann::json::parse(line);
      Entry e{j.at("index").get<std::uint64_t>(), from_base64(j.at("x_u").get<std::string>()),
              j.at("received_at").get<std::int64_t>()};
      if (e.index != entries_.size())
        throw Error("corrupt-log", "entry log indices are not dense at " + std::to_string(e.index));
      entries_.push_back(std::move(e));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& ex) {
      // A torn final record was never acknowledged; anything else is corruption.
      if (complete && contents.find('\n', nl + 1) != std::string::npos)
        throw Error("corrupt-log", std::string("unreadable entry log record: ") + ex.what());
      break;
    }
    pos = nl + 1;
    good_end = pos;
  }
  if (good_end != contents.size()) fs::resize_file(log, good_end);
}

void Sortition::append_log(const Entry& e) {
  if (log_fd_ < 0) return;
  ordered_json j;
  j["index"] = e.index;
  j["x_u"] = to_base64(e.x_u);
  j["received_at"] = e.received_at;
  const std::string line = j.dump() + "\n";
  if (::write(log_fd_, line.data(), line.size()) != static_cast<ssize_t>(line.size()) ||
      ::fsync(log_fd_) != 0)
    throw Error("io", "failed to persist registration");
}

void Sortition::adopt(Transcript t) {
  if (t.n > entries_.size() || t.n == 0)
    throw Error("corrupt-state", "transcript n does not match the entry log");
  std::vector<Bytes> leaves;
  leaves.reserve(t.n);
  for (std::uint64_t i = 0; i < t.n; ++i) leaves.push_back(entries_[i].x_u);
  merkle::Tree tree = merkle::Tree::build(leaves);
  if (tree.root() != t.x_root)
    throw Error("corrupt-state", "transcript root does not match the entry log");
  tree_ = std::move(tree);
  transcript_ = std::move(t);
}

Receipt Sortition::register_entry(std::span<const std::uint8_t> x_u, std::int64_t now) {
  if (x_u.size() > merkle::kMaxEntryBytes)
    throw Error("oversized-entry",
                "entry exceeds " + std::to_string(merkle::kMaxEntryBytes) + " bytes");
  std::lock_guard lock(mu_);
  if (transcript_ || evaluating_ || now < config_.opens_at || now >= config_.closes_at)
    throw Error("window-closed", "registration window is closed");
  Entry e{entries_.size(), Bytes(x_u.begin(), x_u.end()), now};
  append_log(e);
  entries_.push_back(std::move(e));

  Receipt r{config_.sortition_id, entries_.back().index, merkle::leaf_hash(x_u), now, {}};
  sign(r, key_);
  return r;
}

Transcript Sortition::finalize(std::int64_t now, const vdf::EvalOptions& options) {
  std::vector<Entry> snapshot;
  {
    std::lock_guard lock(mu_);
    if (transcript_) return *transcript_;
    if (now < config_.closes_at)
      throw Error("window-open", "registration window has not closed yet");
    if (entries_.empty()) throw Error("empty-registry", "no registrations to draw from");
    if (evaluating_.exchange(true)) throw Error("evaluating", "evaluation already running");
    snapshot = entries_;
  }
  Transcript t;
  try {
    t = build_transcript(config_, snapshot, key_, options);
    if (data_dir_) write_file_atomically(*data_dir_ / kTranscriptName, serialize(t));
  } catch (...) {
    evaluating_ = false;
    throw;
  }
  std::lock_guard lock(mu_);
  adopt(t);
  evaluating_ = false;
  return t;
}

Phase Sortition::phase(std::int64_t now) const {
  std::lock_guard lock(mu_);
  if (transcript_) return Phase::published;
  if (evaluating_) return Phase::evaluating;
  if (now < config_.opens_at) return Phase::pending;
  if (now < config_.closes_at) return Phase::registration;
  return Phase::closed;
}

std::uint64_t Sortition::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::vector<Entry> Sortition::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::optional<Transcript> Sortition::transcript() const {
  std::lock_guard lock(mu_);
  return transcript_;
}

merkle::AuditPath Sortition::audit_path(std::uint64_t index) const {
  std::lock_guard lock(mu_);
  if (!transcript_) throw Error("not-finalized", "sortition has not been finalized");
  if (index >= transcript_->n) throw Error("unknown-index", "no entry with that index");
  return tree_->audit_path(index);
}

bool Sortition::reload_transcript() {
  if (!data_dir_) return false;
  {
    std::lock_guard lock(mu_);
    if (transcript_) return true;
  }
  auto t = read_transcript_file(*data_dir_ / kTranscriptName);
  if (!t) return false;
  // Entries may have been appended by this process after the file was read.
  std::lock_guard lock(mu_);
  if (!transcript_) adopt(std::move(*t));
  return true;
}

}  // namespace vsort::sortition
