#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int status = -1;
  std::string out;
};

CliRun wreath_cli(const std::string& args) {
  const std::string cmd = std::string(WREATH_CLI) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) {
    return r;
  }
  std::array<char, 4096> buf{};
  while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) {
    r.out.append(buf.data(), n);
  }
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string group(const char* name) { return (wt::source_dir() / "groups" / name).string(); }
std::string suite(const char* name) { return (wt::source_dir() / "suites" / name).string(); }

}  // namespace

TEST(Cli, EvalPortraitAndLevel) {
  CliRun r = wreath_cli("eval " + group("basilica.grp") + " '[a, b^-1]' --portrait 1");
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("sections (b, b^-1)"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("root ()"), std::string::npos) << r.out;
  r = wreath_cli("eval " + group("basilica.grp") + " 1 --level 3");
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.out, "()\n");
  r = wreath_cli("eval " + group("ggs3.grp") + " a --level 1");
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.out, "(1 2 3)\n");
}

TEST(Cli, CheckExitCodes) {
  EXPECT_EQ(wreath_cli("check " + group("basilica.grp") + " equal '[[b,a],a]' 1").status, 0);
  EXPECT_EQ(wreath_cli("check " + group("ggs3.grp") + " quotient-index Kprime --n 2 --expect 27").status, 0);
  EXPECT_EQ(wreath_cli("check " + group("basilica.grp") + " coset-member 'b^2' A --n 3 --expect false").status, 0);
  EXPECT_EQ(wreath_cli("check " + group("basilica.grp") + " equal a b").status, 1);
  EXPECT_EQ(wreath_cli("check " + group("basilica.grp") + " equal 'a *' b").status, 2);
  EXPECT_EQ(wreath_cli("check " + group("basilica.grp") + " quotient-index A --n 11 --expect 2").status, 2);
  EXPECT_EQ(wreath_cli("check " + group("basilica.grp") + " no-such-kind a b").status, 2);
}

TEST(Cli, UsageAndParseErrors) {
  EXPECT_EQ(wreath_cli("").status, 2);
  EXPECT_EQ(wreath_cli("frobnicate").status, 2);
  EXPECT_EQ(wreath_cli("parse /nonexistent.grp").status, 2);
  EXPECT_EQ(wreath_cli("--format xml parse " + group("basilica.grp")).status, 2);
  const fs::path bad = fs::temp_directory_path() / ("wreath-cli-bad-" + std::to_string(::getpid()) + ".grp");
  std::ofstream(bad) << "tree degree 2\ngen a = (1, c)\n";
  CliRun r = wreath_cli("parse " + bad.string());
  fs::remove(bad);
  EXPECT_EQ(r.status, 2);
}

TEST(Cli, VerifyFormats) {
  CliRun text = wreath_cli("verify " + suite("core-properties.yaml"));
  EXPECT_EQ(text.status, 0);
  EXPECT_NE(text.out.find("passed, 0 failed, 0 errors"), std::string::npos);
  CliRun js = wreath_cli("--format json verify " + suite("core-properties.yaml"));
  EXPECT_EQ(js.status, 0);
  auto j = nlohmann::json::parse(js.out);
  EXPECT_EQ(j["summary"]["failed"], 0);
  EXPECT_EQ(j["checks"].size(), j["summary"]["total"].get<std::size_t>());
  CliRun csv = wreath_cli("verify " + suite("core-properties.yaml") + " --format csv");
  EXPECT_EQ(csv.status, 0);
  EXPECT_EQ(csv.out.substr(0, csv.out.find('\n')), "id,kind,verdict,levels,observed,expected,seconds,detail");
}

TEST(Cli, VerifyEmptySuite) {
  const fs::path dir = fs::temp_directory_path() / ("wreath-cli-empty-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  fs::copy_file(group("basilica.grp"), dir / "g.grp", fs::copy_options::overwrite_existing);
  std::ofstream(dir / "empty.yaml") << "group: g.grp\nchecks: []\n";
  CliRun r = wreath_cli("verify " + (dir / "empty.yaml").string());
  std::ofstream(dir / "broken.yaml") << "group: g.grp\nchecks:\n  - {id: x, kind: equal, lhs: a}\n";
  CliRun broken = wreath_cli("verify " + (dir / "broken.yaml").string());
  fs::remove_all(dir);
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("0/0 passed"), std::string::npos) << r.out;
  EXPECT_EQ(broken.status, 2);
}

TEST(Cli, WarmCacheGivesIdenticalJson) {
  const fs::path dir = fs::temp_directory_path() / ("wreath-cli-cache-" + std::to_string(::getpid()));
  fs::remove_all(dir);
  auto strip = [](const std::string& s) {
    std::function<void(nlohmann::json&)> drop = [&](nlohmann::json& j) {
      if (j.is_object()) {
        j.erase("seconds");
      }
      if (j.is_structured()) {
        for (auto& v : j) {
          drop(v);
        }
      }
    };
    auto j = nlohmann::json::parse(s);
    drop(j);
    return j.dump();
  };
  const std::string args = "--format json --cache-dir " + dir.string() + " verify " + suite("ggs5.yaml");
  CliRun cold = wreath_cli(args);
  CliRun warm = wreath_cli(args);
  EXPECT_FALSE(fs::is_empty(dir));
  fs::remove_all(dir);
  ASSERT_EQ(cold.status, 0);
  ASSERT_EQ(warm.status, 0);
  EXPECT_EQ(strip(cold.out), strip(warm.out));
}

TEST(Cli, ScanAndQuotient) {
  CliRun r = wreath_cli("scan " + group("ggs3.grp") + " K --depth 4");
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("Found(2)"), std::string::npos) << r.out;
  r = wreath_cli("--format json scan " + group("basilica.grp") + " Gprime --depth 5");
  EXPECT_EQ(r.status, 0);
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["verdict"], "NotContainedUpTo(5)");
  EXPECT_FALSE(j["certificates"].empty());
  r = wreath_cli("quotient " + group("ggs3.grp") + " --level 2");
  EXPECT_EQ(r.status, 0);
  EXPECT_NE(r.out.find("order 81"), std::string::npos) << r.out;
}
