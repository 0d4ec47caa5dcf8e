#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sibgen/cli.hpp"
#include "sibgen/io.hpp"

using namespace sibgen;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sibgen");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct Scratch {
  fs::path root;
  Scratch() {
    root = fs::temp_directory_path() / ("sibgen_cli_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    auto c = ExperimentConfig::preset_named("desk");
    c.real_size = 20;
    c.unconditional_size = 6;
    io::write_json(root / "small.json", io::to_json(c));
  }
  ~Scratch() { fs::remove_all(root); }
  [[nodiscard]] std::string config() const { return (root / "small.json").string(); }
  [[nodiscard]] std::string dir(const std::string& n) const { return (root / n).string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

bool same_tree(const fs::path& a, const fs::path& b) {
  std::vector<fs::path> fa, fb;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) fa.push_back(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) fb.push_back(fs::relative(e.path(), b));
  std::sort(fa.begin(), fa.end());
  std::sort(fb.begin(), fb.end());
  if (fa != fb || fa.empty()) return false;
  for (const auto& f : fa)
    if (slurp(a / f) != slurp(b / f)) return false;
  return true;
}

bool error_line(const std::string& err, const std::string& kind) {
  return err.rfind("sibgen-error kind=" + kind + " message=\"", 0) == 0 && err.back() == '\n' &&
         std::count(err.begin(), err.end(), '\n') == 1;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("help exits cleanly") {
    const auto r = cli({"sample", "--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("--steps") != std::string::npos);
    CHECK(cli({"--help"}).code == 0);
  }

  TEST_CASE("usage errors") {
    auto r = cli({"sample"});
    CHECK(r.code == 2);
    CHECK(error_line(r.err, "usage"));
    r = cli({"frobnicate"});
    CHECK(r.code == 2);
    r = cli({"augment", "--out", "x", "--threshold-ml", "-3"});
    CHECK(r.code == 2);
  }

  TEST_CASE("sample is reproducible and evaluate writes the report schema") {
    Scratch s;
    const std::vector<std::string> base{"sample", "--config", s.config(), "--steps", "8", "--count", "5", "--seed", "7"};
    auto a = base, b = base;
    a.insert(a.end(), {"--out", s.dir("a"), "--workers", "1"});
    b.insert(b.end(), {"--out", s.dir("b"), "--workers", "3"});
    const auto ra = cli(a);
    REQUIRE_MESSAGE(ra.code == 0, ra.err);
    REQUIRE(cli(b).code == 0);
    CHECK(same_tree(s.dir("a"), s.dir("b")));
    CHECK(fs::exists(s.root / "a" / "members" / "000004.sib"));
    CHECK(fs::exists(s.root / "a" / "rare_mode.json"));

    const auto man = io::read_manifest(s.root / "a" / "manifest.json");
    CHECK(man.files.size() == 5);
    CHECK(man.config_hash == io::config_hash(io::read_json(s.root / "a" / "config.json")));

    const auto re = cli({"evaluate", "--config", s.config(), "--data", s.dir("a"), "--out", s.dir("eval")});
    REQUIRE_MESSAGE(re.code == 0, re.err);
    std::istringstream csv(slurp(s.root / "eval" / "report.csv"));
    std::string header;
    std::getline(csv, header);
    std::string expect;
    for (const auto& c : io::report_csv_columns()) expect += (expect.empty() ? "" : ",") + c;
    CHECK(header == expect);

    // A results directory with entries is refused.
    const auto again = cli(a);
    CHECK(again.code == 3);
    CHECK(error_line(again.err, "io"));

    // A member removed behind the manifest's back.
    fs::remove(s.root / "a" / "members" / "000002.sib");
    const auto miss = cli({"evaluate", "--config", s.config(), "--data", s.dir("a"), "--out", s.dir("eval2")});
    CHECK(miss.code == 3);
    CHECK(error_line(miss.err, "io"));
  }

  TEST_CASE("config errors") {
    Scratch s;
    std::ofstream(s.root / "bad.json") << R"({"steps": 5, "colour": "red"})";
    auto r = cli({"sample", "--config", (s.root / "bad.json").string(), "--out", s.dir("o")});
    CHECK(r.code == 4);
    CHECK(error_line(r.err, "config"));
    std::ofstream(s.root / "broken.json") << "{ not json";
    r = cli({"sample", "--config", (s.root / "broken.json").string(), "--out", s.dir("o2")});
    CHECK(r.code == 4);
    r = cli({"sample", "--preset", "enormous", "--out", s.dir("o3")});
    CHECK(r.code == 4);
  }

  TEST_CASE("the installed binary follows the same contract") {
    Scratch s;
    const std::string cmd = std::string(SIBGEN_CLI_PATH) + " sample --config " + s.config() +
                            " --steps 4 --count 2 --out " + s.dir("bin") + " > /dev/null";
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(s.root / "bin" / "manifest.json"));
    const std::string bad = std::string(SIBGEN_CLI_PATH) + " sample --out " + s.dir("bin") + " 2> /dev/null";
    const int status = std::system(bad.c_str());
    CHECK(WEXITSTATUS(status) == 3);
  }
}
