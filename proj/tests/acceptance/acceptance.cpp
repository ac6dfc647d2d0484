// Acceptance suite: one PASS/FAIL line per criterion; exit status 0 iff all pass.

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "oracles/form_oracle.hpp"
#include "support/process.hpp"
#include "vsort/merkle.hpp"
#include "vsort/service.hpp"
#include "vsort/sortition.hpp"
#include "vsort/vdf.hpp"

using namespace vsort;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances.
constexpr unsigned kSeparationBits = 256;
constexpr std::uint64_t kSmallT = 1 << 12;
constexpr std::uint64_t kLargeT = 1 << 18;
constexpr double kMinEvalRatio = 16.0;
constexpr double kMaxVerifyRatio = 2.0;
constexpr int kVerifyRepeats = 7;

constexpr unsigned kHintSamples = 256;
constexpr unsigned kHintBits = 1024;
constexpr std::uint64_t kHintMinIterations = 10;
constexpr double kMaxHintFraction = 1.0 / 5.0;

constexpr std::uint64_t kE2ERegistrants = 100;
constexpr unsigned kE2EBits = 256;
constexpr std::uint64_t kE2ET = 1 << 14;
constexpr std::size_t kMinMutations = 50;
constexpr double kE2EMaxSeconds = 60.0;

constexpr int kFairnessSeeds = 10000;
constexpr int kFairnessLow = 850;
constexpr int kFairnessHigh = 1150;

const std::string kCli = VSORT_CLI_PATH;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <class Fn>
double timed(Fn&& fn) {
  const auto start = Clock::now();
  fn();
  return seconds_since(start);
}

std::string fmt(double v, int precision = 3) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

struct Line {
  std::string name;
  bool passed;
  std::string detail;
};

std::vector<Line> g_results;

void report(const std::string& name, bool passed, const std::string& detail) {
  g_results.push_back({name, passed, detail});
  std::cout << (passed ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
}

// --- separation of eval and verify cost -------------------------------------

void separation() {
  struct Measure {
    double eval;
    double verify;
    bool ok;
  };
  auto measure = [](std::uint64_t T) {
    const auto params = vdf::make_params(to_bytes("separation"), T, kSeparationBits);
    vdf::Output out;
    const double eval = timed([&] { out = vdf::eval(params); });
    double best = 1e9;
    bool ok = true;
    for (int i = 0; i < kVerifyRepeats; ++i) {
      double t = timed([&] { ok = ok && vdf::verify(params, out).accepted(); });
      best = std::min(best, t);
    }
    return Measure{eval, best, ok};
  };
  const auto small = measure(kSmallT);
  const auto large = measure(kLargeT);
  const double eval_ratio = large.eval / small.eval;
  const double verify_ratio = large.verify / small.verify;
  const bool pass = small.ok && large.ok && eval_ratio >= kMinEvalRatio && verify_ratio < kMaxVerifyRatio;
  report("eval-verify-separation", pass,
         "bits=256; eval " + fmt(small.eval) + "s -> " + fmt(large.eval) + "s, ratio " +
             fmt(eval_ratio, 1) + " (>= 16); verify " + fmt(small.verify * 1e3) + "ms -> " +
             fmt(large.verify * 1e3) + "ms, ratio " + fmt(verify_ratio, 2) + " (< 2)" +
             (small.ok && large.ok ? "" : "; proof rejected"));
}

// --- audit path length ------------------------------------------------------

std::size_t ceil_log2(std::uint64_t n) {
  std::size_t r = 0;
  while ((std::uint64_t{1} << r) < n) ++r;
  return r;
}

void inclusion_size() {
  bool pass = true;
  std::string detail;
  for (std::uint64_t n : {1, 2, 5, 64, 1000}) {
    std::vector<Bytes> leaves;
    for (std::uint64_t i = 0; i < n; ++i) leaves.push_back(to_bytes("leaf-" + std::to_string(i)));
    const auto tree = merkle::Tree::build(leaves);
    std::size_t longest = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto path = tree.audit_path(i);
      longest = std::max(longest, path.siblings.size());
      pass = pass && merkle::verify_inclusion(leaves[i], path, tree.root()).included;
    }
    const std::size_t bound = ceil_log2(n);
    const bool ok = longest == bound && longest <= bound + 1;
    pass = pass && ok;
    detail += "N=" + std::to_string(n) + ":" + std::to_string(longest) + "/" + std::to_string(bound) + " ";
  }
  report("inclusion-proof-size", pass, detail + "(max path / ceil(log2 N))");
}

// --- hinted hash-to-prime ---------------------------------------------------

void hint_optimization() {
  const hashprime::Params params{.bits = kHintBits, .congruence = hashprime::Congruence{7, 8}, .mr_rounds = 50};
  std::mt19937_64 rng(0x5eed);
  double full_total = 0, hint_total = 0;
  unsigned counted = 0, per_sample_ok = 0;
  bool single_test = true, counts_match = true;
  for (unsigned s = 0; s < kHintSamples; ++s) {
    Bytes seed(32);
    for (auto& b : seed) b = static_cast<std::uint8_t>(rng());
    hashprime::Stats full_stats, hint_stats;
    hashprime::Result full;
    const double full_time = timed([&] { full = hashprime::hash_to_prime(seed, params, &full_stats); });
    mpz_class hinted;
    const double hint_time = timed(
        [&] { hinted = hashprime::hash_to_prime_with_hint(seed, params, full.iterations, &hint_stats); });
    single_test = single_test && hint_stats.primality_tests == 1 && hinted == full.prime;
    counts_match = counts_match && full_stats.primality_tests == full.iterations;
    if (full.iterations >= kHintMinIterations) {
      ++counted;
      full_total += full_time;
      hint_total += hint_time;
      if (hint_time <= kMaxHintFraction * full_time) ++per_sample_ok;
    }
  }
  const double fraction = full_total > 0 ? hint_total / full_total : 1.0;
  const bool pass = single_test && counts_match && counted > 0 && fraction <= kMaxHintFraction;
  report("hint-optimization", pass,
         std::to_string(kHintSamples) + " samples at 1024 bits; hint tests == 1: " +
             (single_test ? "yes" : "no") + "; full tests == i: " + (counts_match ? "yes" : "no") +
             "; i >= 10 on " + std::to_string(counted) + " samples, hint/full wall clock " +
             fmt(hint_total, 2) + "s/" + fmt(full_total, 2) + "s = " + fmt(fraction) +
             " (<= 0.2); per-sample within bound " + std::to_string(per_sample_ok) + "/" +
             std::to_string(counted));
}

// --- end-to-end round trip --------------------------------------------------

using Mutation = std::function<void(nlohmann::json&, std::mt19937_64&)>;

void flip_hex(nlohmann::json& j, const char* field, std::mt19937_64& rng, std::size_t skip = 0) {
  auto s = j[field].get<std::string>();
  std::uniform_int_distribution<std::size_t> pos(skip, s.size() - 1);
  const std::size_t p = pos(rng);
  const char* digits = "0123456789abcdef";
  char c;
  do c = digits[rng() % 16];
  while (c == s[p]);
  s[p] = c;
  j[field] = s;
}

void bump(nlohmann::json& j, const char* field, std::mt19937_64& rng) {
  const auto v = j[field].get<std::uint64_t>();
  const std::uint64_t deltas[] = {1, 2, 7, 1000};
  std::uint64_t next = (rng() & 1) && v > deltas[0] ? v - 1 : v + deltas[rng() % 4];
  j[field] = next;
}

std::vector<std::pair<std::string, Mutation>> mutation_kinds() {
  std::vector<std::pair<std::string, Mutation>> m;
  m.push_back({"sortition_id", [](nlohmann::json& j, std::mt19937_64& rng) {
                 auto s = j["sortition_id"].get<std::string>();
                 s[rng() % s.size()] ^= 0x01;
                 j["sortition_id"] = s;
               }});
  for (const char* f : {"T", "discriminant_bits", "k", "n", "d_iterations", "challenge_iterations"}) {
    m.push_back({f, [f](nlohmann::json& j, std::mt19937_64& rng) { bump(j, f, rng); }});
  }
  for (const char* f : {"x_root", "y", "proof", "signature", "server_pubkey"}) {
    m.push_back({f, [f](nlohmann::json& j, std::mt19937_64& rng) { flip_hex(j, f, rng); }});
  }
  m.push_back({"d_magnitude", [](nlohmann::json& j, std::mt19937_64& rng) { flip_hex(j, "d_magnitude", rng, 1); }});
  m.push_back({"winners", [](nlohmann::json& j, std::mt19937_64& rng) {
                 auto w = j["winners"].get<std::vector<std::uint64_t>>();
                 const auto n = j["n"].get<std::uint64_t>();
                 switch (rng() % 3) {
                   case 0: {  // replace one winner by a non-winner
                     std::uint64_t c;
                     do c = rng() % n;
                     while (std::find(w.begin(), w.end(), c) != w.end());
                     w[rng() % w.size()] = c;
                     std::sort(w.begin(), w.end());
                     break;
                   }
                   case 1:
                     w.pop_back();
                     break;
                   default:
                     std::reverse(w.begin(), w.end());
                 }
                 j["winners"] = w;
               }});
  return m;
}

struct Registrant {
  fs::path entry;
  fs::path receipt;
};

void end_to_end() {
  const auto start = Clock::now();
  testsupport::TempDir dir("vsort-e2e");
  const fs::path config = dir.path / "draw.json";
  const fs::path transcript_file = dir.path / "transcript.json";
  nlohmann::ordered_json cfg{{"sortition_id", "acceptance-draw"},
                             {"opens_at", 1000},
                             {"closes_at", 2000},
                             {"T", kE2ET},
                             {"discriminant_bits", kE2EBits},
                             {"k", 5},
                             {"data_dir", "data"},
                             {"key_path", "server.key"}};
  testsupport::spit(config, cfg.dump());

  std::vector<std::string> failures;
  auto cfg_loaded = service::load_config(config);
  std::atomic<std::int64_t> now{1500};
  service::Server server(cfg_loaded, [&] { return now.load(); });
  const int port = server.bind_any_port();
  std::thread serving([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  const std::string url = "http://127.0.0.1:" + std::to_string(port);

  std::vector<Registrant> people;
  {
    httplib::Client client("127.0.0.1", port);
    for (std::uint64_t i = 0; i < kE2ERegistrants; ++i) {
      Registrant r{dir.path / ("entry-" + std::to_string(i)), dir.path / ("receipt-" + std::to_string(i) + ".json")};
      const std::string x = "citizen #" + std::to_string(i) + " commitment";
      testsupport::spit(r.entry, x);
      auto res = client.Post("/api/v1/register", nlohmann::json{{"x", to_base64(to_bytes(x))}}.dump(),
                             "application/json");
      if (!res || res->status != 200) {
        failures.push_back("registration " + std::to_string(i));
        continue;
      }
      testsupport::spit(r.receipt, res->body);
      people.push_back(r);
    }
  }
  now = 2000;

  auto fin = testsupport::run(kCli, {"finalize", "--config", config.string(), "--now", "2000", "--out",
                                     transcript_file.string()});
  if (fin.exit_code != 0) failures.push_back("finalize exit " + std::to_string(fin.exit_code));

  for (bool strict : {false, true}) {
    std::vector<std::string> args{"verify", "--transcript", transcript_file.string()};
    if (strict) args.push_back("--strict");
    auto r = testsupport::run(kCli, args);
    if (r.exit_code != 0) failures.push_back(std::string("verify ") + (strict ? "strict" : "hinted"));
  }

  std::size_t included = 0;
  for (const auto& p : people) {
    auto r = testsupport::run(kCli, {"verify-inclusion", "--transcript", transcript_file.string(), "--receipt",
                                     p.receipt.string(), "--entry", p.entry.string(), "--url", url});
    if (r.exit_code == 0) ++included;
  }
  if (included != kE2ERegistrants) failures.push_back("inclusion " + std::to_string(included) + "/100");

  server.stop();
  serving.join();

  // Tampering: every mutation alone, unsigned and (for content fields) re-signed
  // with the real server key, must be rejected with exit 1.
  const auto honest = nlohmann::json::parse(testsupport::slurp(transcript_file));
  const auto key = signing::SigningKey::load_or_create(cfg_loaded.key_path);
  std::mt19937_64 rng(1234);
  std::size_t mutations = 0, rejected = 0;
  std::vector<std::string> escaped;
  const fs::path tampered = dir.path / "tampered.json";
  for (int round = 0; round < 4; ++round) {
    for (const auto& [field, mutate] : mutation_kinds()) {
      for (bool resign : {false, true}) {
        if (resign && (field == "sortition_id" || field == "signature" || field == "server_pubkey")) continue;
        if (resign && round >= 2) continue;
        auto j = honest;
        mutate(j, rng);
        if (j == honest) continue;
        if (resign) {
          auto t = transcript_from_json(j);
          sign(t, key);
          j = nlohmann::json::parse(serialize(t));
        }
        testsupport::spit(tampered, j.dump());
        ++mutations;
        auto r = testsupport::run(kCli, {"verify", "--transcript", tampered.string()});
        if (r.exit_code == 1) ++rejected;
        else escaped.push_back(field + (resign ? "(re-signed)" : "") + " exit " + std::to_string(r.exit_code));
      }
    }
  }
  if (mutations < kMinMutations) failures.push_back("only " + std::to_string(mutations) + " mutations");
  for (const auto& e : escaped) failures.push_back("tamper " + e);

  const double elapsed = seconds_since(start);
  if (elapsed >= kE2EMaxSeconds) failures.push_back("runtime " + fmt(elapsed, 1) + "s");

  std::string detail = "N=100 bits=256 T=2^14; verify hinted+strict exit 0; inclusion " +
                       std::to_string(included) + "/100; tamper rejected " + std::to_string(rejected) + "/" +
                       std::to_string(mutations) + "; " + fmt(elapsed, 1) + "s (< 60s)";
  for (const auto& f : failures) detail += "; " + f;
  report("end-to-end", failures.empty(), detail);
}

// --- class group oracle -----------------------------------------------------

void classgroup_oracle() {
  using classgroup::QuadraticForm;
  auto from = [](const oracle::Form& f) { return QuadraticForm{f.a, f.b, f.c}; };
  std::vector<std::string> failures;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  const classgroup::Discriminant d23(mpz_class(-23));
  const auto g = classgroup::generator(d23);
  const auto e = classgroup::identity(d23);
  expect(e == QuadraticForm{1, 1, 6}, "identity");
  expect(g == QuadraticForm{2, 1, 3}, "generator");
  expect(classgroup::square(g, d23) == QuadraticForm{2, -1, 3}, "g^2");
  expect(classgroup::power(g, 3, d23) == e, "order 3");
  expect(g != e && classgroup::square(g, d23) != e, "order exactly 3");
  expect(classgroup::inverse(g) == QuadraticForm{2, -1, 3}, "inverse pair");
  expect(classgroup::compose(g, classgroup::inverse(g), d23) == e, "g * g^-1");
  const auto table = oracle::reduced_forms(-23);
  expect(table.size() == 3, "class number 3");
  for (const auto& f : table)
    for (const auto& h : table)
      expect(classgroup::compose(from(f), from(h), d23) == from(oracle::compose(f, h)), "table entry");

  std::mt19937_64 rng(20241017);
  int discriminants = 0, powers = 0, reductions = 0;
  for (int round = 0; round < 20; ++round) {
    const auto D = oracle::random_discriminant(rng);
    const classgroup::Discriminant d{mpz_class(static_cast<long>(D))};
    const auto forms = oracle::reduced_forms(D);
    std::uniform_int_distribution<std::size_t> pick(0, forms.size() - 1);
    ++discriminants;
    for (int i = 0; i < 10; ++i) {
      oracle::Form f = forms[pick(rng)];
      const oracle::i64 t = static_cast<oracle::i64>(rng() % 41) - 20;
      f = {f.a, f.b + 2 * f.a * t, f.a * t * t + f.b * t + f.c};
      f = {f.c, -f.b, f.a};
      const auto r = classgroup::reduce(from(f));
      expect(classgroup::is_reduced(r) && classgroup::reduce(r) == r && r == from(oracle::reduce(f)),
             "reduce D=" + std::to_string(D));
      ++reductions;
    }
    const auto f = from(forms[pick(rng)]);
    QuadraticForm iterated = classgroup::identity(d);
    for (unsigned k = 0; k <= 64; ++k) {
      expect(classgroup::power(f, k, d) == iterated, "power D=" + std::to_string(D) + " e=" + std::to_string(k));
      iterated = classgroup::compose(iterated, f, d);
      ++powers;
    }
  }
  std::string detail = "d=-23 table ok=" + std::string(failures.empty() ? "yes" : "no") + "; " +
                       std::to_string(discriminants) + " discriminants, " + std::to_string(reductions) +
                       " reductions, " + std::to_string(powers) + " power checks (e <= 64)";
  if (!failures.empty()) detail += "; first failure: " + failures.front();
  report("classgroup-oracle", failures.empty(), detail);
}

// --- winner fairness and determinism ----------------------------------------

void fairness() {
  const auto derived = vdf::derive_discriminant(to_bytes("fairness"), 256);
  const auto& d = derived.d;
  const auto g = classgroup::generator(d);
  classgroup::GroupContext ctx(d);
  classgroup::QuadraticForm y = g;
  std::array<int, 10> counts{};
  std::set<Hash32> seeds;
  for (int i = 0; i < kFairnessSeeds; ++i) {
    const auto seed = sortition::winner_seed(y);
    seeds.insert(seed);
    counts[sortition::select_winners_from_seed(seed, 10, 1).at(0)]++;
    ctx.mul_inplace(y, g);
  }
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  const bool distribution = static_cast<int>(seeds.size()) == kFairnessSeeds && *lo >= kFairnessLow &&
                            *hi <= kFairnessHigh;

  // Determinism: fixed y twice, frozen vector, and two independent finalizations.
  const classgroup::QuadraticForm fixed{2, -1, 3};
  const auto w1 = sortition::select_winners(fixed, 1000, 5);
  const auto w2 = sortition::select_winners(fixed, 1000, 5);
  const bool frozen = w1 == w2 && w1 == std::vector<std::uint64_t>{260, 277, 382, 402, 954};
  Hash32 seed_bytes;
  seed_bytes.fill(0x42);
  const auto key = signing::SigningKey::from_seed(seed_bytes);
  std::vector<sortition::Entry> entries;
  for (std::uint64_t i = 0; i < 10; ++i) entries.push_back({i, to_bytes("d" + std::to_string(i)), 5});
  const sortition::Config config{"determinism", 0, 10, 1024, 256, 1};
  const bool rerun = serialize(sortition::build_transcript(config, entries, key)) ==
                     serialize(sortition::build_transcript(config, entries, key));

  std::string detail = std::to_string(seeds.size()) + " distinct seeds; counts [";
  for (std::size_t i = 0; i < counts.size(); ++i) detail += (i ? "," : "") + std::to_string(counts[i]);
  detail += "] in [850,1150]: " + std::string(distribution ? "yes" : "no") +
            "; fixed-y repeat + frozen vector: " + (frozen ? "yes" : "no") +
            "; independent transcripts identical: " + (rerun ? "yes" : "no");
  report("winner-fairness", distribution && frozen && rerun, detail);
}

template <class Fn>
void guarded(const std::string& name, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    report(name, false, std::string("exception: ") + e.what());
  }
}

}  // namespace

int main() {
  guarded("eval-verify-separation", separation);
  guarded("inclusion-proof-size", inclusion_size);
  guarded("hint-optimization", hint_optimization);
  guarded("end-to-end", end_to_end);
  guarded("classgroup-oracle", classgroup_oracle);
  guarded("winner-fairness", fairness);
  const auto failed = std::count_if(g_results.begin(), g_results.end(), [](const Line& l) { return !l.passed; });
  std::cout << (g_results.size() - failed) << "/" << g_results.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
