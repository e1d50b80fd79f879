#include <algorithm>
#include <random>
#include <regex>
#include <set>

#include <gtest/gtest.h>

#include "lite/project.hpp"
#include "random_project.hpp"

namespace lite {
namespace {

const std::string kData = LITE_TEST_DATA;

ProjectManifest manifest(std::vector<std::string> targets = {"french"}) {
  ProjectManifest m;
  m.id = "t";
  m.source_language = "english";
  m.locale = "en";
  m.target_languages = std::move(targets);
  m.source_files = {"en.lite"};
  for (const auto& t : m.target_languages) m.target_files.push_back({t, t + ".lite"});
  return m;
}

AssemblyResult assemble_texts(const std::string& source, const std::string& french) {
  auto m = manifest();
  auto s = parse_rule_file(source, FileRole::source("english"), "en.lite");
  auto f = parse_rule_file(french, FileRole::target("french", "english"), "french.lite");
  EXPECT_FALSE(has_errors(s.diagnostics));
  EXPECT_FALSE(has_errors(f.diagnostics));
  return assemble(m, {s.file, f.file});
}

Diagnostics all_diagnostics(const AssemblyResult& r) {
  Diagnostics d = r.diagnostics;
  if (r.ok()) {
    auto v = validate(r.project);
    d.insert(d.end(), v.begin(), v.end());
  }
  return d;
}

const char* kSource = R"L(TrPhrase $$top
Source ( hello | hi )
Target/english hello
EndTrPhrase

TrPhrase $$top
Source i ( want | would like ) $$food-or-drink ?please
Source ( could | can ) i have  $$food-or-drink ?please
Target/english i want $$food-or-drink please
EndTrPhrase

TrLex $$food-or-drink source="a (coca-cola | coke)" english="a coke"
)L";

const char* kFrench = R"L(TrPhrase $$top
Target/english hello
Target/french Bonjour
EndTrPhrase

TrPhrase $$top
Target/english i want $$food-or-drink please
Target/french je voudrais $$food-or-drink s'il vous plaît
EndTrPhrase

TrLex $$food-or-drink english="a coke" french="un coca"
)L";

TEST(Assemble, MergesSplitPieces) {
  auto r = assemble_texts(kSource, kFrench);
  ASSERT_TRUE(r.ok());
  EXPECT_TRUE(r.diagnostics.empty());
  EXPECT_TRUE(validate(r.project).empty());
  const auto* u = r.project.find_unit("top", "i want $$food-or-drink please");
  ASSERT_NE(u, nullptr);
  EXPECT_EQ(u->source_lines.size(), 2u);
  EXPECT_EQ(to_string(u->targets.at("french")), "je voudrais $$food-or-drink s'il vous plaît");
  const auto* lx = r.project.find_lexeme("food-or-drink", "a coke");
  ASSERT_NE(lx, nullptr);
  EXPECT_EQ(to_string(lx->targets.at("french")), "un coca");
  EXPECT_EQ(r.project.top_keys(),
            (std::vector<std::string>{"hello", "i want $$food-or-drink please"}));
}

TEST(Assemble, OrphanTarget) {
  auto r = assemble_texts(kSource, std::string(kFrench) +
                                       "TrPhrase $$top\nTarget/english i need a taxi\n"
                                       "Target/french un taxi\nEndTrPhrase\n");
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(count_code(r.diagnostics, "OrphanTarget"), 1u);
  EXPECT_EQ(r.project.find_unit("top", "i need a taxi"), nullptr);
}

TEST(Assemble, CyclicVariable) {
  auto r = assemble_texts(R"L(TrPhrase $$top
Source go $$a
Target/english go $$a
EndTrPhrase
TrPhrase $$a
Source x $$b
Target/english x $$b
EndTrPhrase
TrPhrase $$b
Source y $$a
Target/english y $$a
EndTrPhrase
)L",
                          "");
  EXPECT_FALSE(r.ok());
  ASSERT_EQ(count_code(r.diagnostics, "CyclicVariable"), 1u);
  auto d = *std::find_if(r.diagnostics.begin(), r.diagnostics.end(),
                         [](const Diagnostic& d) { return d.code == "CyclicVariable"; });
  EXPECT_NE(d.message.find("$$a"), std::string::npos) << d.message;
  EXPECT_NE(d.message.find("$$b"), std::string::npos) << d.message;
}

TEST(Assemble, UnknownVariableAndDuplicateCanonical) {
  auto unknown = assemble_texts("TrPhrase $$top\nSource go $$nowhere\nEndTrPhrase\n", "");
  EXPECT_EQ(count_code(unknown.diagnostics, "UnknownVariable"), 1u);
  EXPECT_FALSE(unknown.ok());

  auto dup = assemble_texts(
      "TrPhrase $$top\nSource hi\nTarget/english hello\nEndTrPhrase\n"
      "TrPhrase $$top\nSource hey\nTarget/english Hello\nEndTrPhrase\n",
      "");
  EXPECT_EQ(count_code(dup.diagnostics, "DuplicateCanonical"), 1u);
  EXPECT_FALSE(dup.ok());
}

TEST(Assemble, IdenticalDuplicateTargetIsAWarning) {
  auto r = assemble_texts(kSource, std::string(kFrench) +
                                       "TrPhrase $$top\nTarget/english hello\n"
                                       "Target/french Bonjour\nEndTrPhrase\n");
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(count_code(r.diagnostics, "DuplicateTarget"), 1u);
  auto conflict = assemble_texts(kSource, std::string(kFrench) +
                                              "TrPhrase $$top\nTarget/english hello\n"
                                              "Target/french Salut\nEndTrPhrase\n");
  EXPECT_EQ(count_code(conflict.diagnostics, "ConflictingTarget"), 1u);
}

TEST(Assemble, DeterministicAndOrderStable) {
  auto a = assemble_texts(kSource, kFrench);
  auto b = assemble_texts(kSource, kFrench);
  ASSERT_EQ(a.project.units.size(), b.project.units.size());
  for (std::size_t i = 0; i < a.project.units.size(); ++i) {
    EXPECT_EQ(a.project.units[i].key, b.project.units[i].key);
    EXPECT_EQ(a.project.units[i].declaration_index, i);
  }
  EXPECT_EQ(a.project.target_index(), b.project.target_index());
}

TEST(Validate, MissingTargetForRemovedLexemeTranslation) {
  std::string french = kFrench;
  french.replace(french.find(" french=\"un coca\""), 17, "");
  auto r = assemble_texts(kSource, french);
  ASSERT_TRUE(r.ok());
  auto d = all_diagnostics(r);
  ASSERT_EQ(count_code(d, "MissingTarget"), 1u);
  auto it = std::find_if(d.begin(), d.end(), [](const Diagnostic& x) { return x.code == "MissingTarget"; });
  EXPECT_NE(it->message.find("french"), std::string::npos);
  EXPECT_NE(it->message.find("a coke"), std::string::npos);
  EXPECT_EQ(it->severity, Severity::Warning);
}

TEST(Validate, UnreachableCategory) {
  auto r = assemble_texts(std::string(kSource) + "TrLex $$color source=\"red\"\n", kFrench);
  auto d = all_diagnostics(r);
  EXPECT_EQ(count_code(d, "UnreachableCategory"), 1u);
  EXPECT_FALSE(has_errors(d));
}

TEST(Validate, NullablePatternAndCoverage) {
  auto nullable = assemble_texts("TrPhrase $$top\nSource ?hello\nTarget/english hello\nEndTrPhrase\n", "");
  EXPECT_EQ(count_code(all_diagnostics(nullable), "NullablePattern"), 1u);

  // $$x is mandatory in the canonical but optional in a source line.
  auto uncovered = assemble_texts(
      "TrPhrase $$top\nSource go ?$$x\nTarget/english go $$x\nEndTrPhrase\n"
      "TrLex $$x source=\"now\"\n",
      "");
  EXPECT_TRUE(has_errors(all_diagnostics(uncovered)));
  EXPECT_EQ(count_code(all_diagnostics(uncovered), "UncoveredVariable"), 1u);
}

TEST(Validate, MissingTop) {
  auto r = assemble_texts("TrLex $$x source=\"a\"\n", "");
  EXPECT_EQ(count_code(all_diagnostics(r), "MissingTop"), 1u);
}

TEST(Manifest, ParseAndCheck) {
  auto m = parse_manifest(R"({"id":"x","source_language":"english","target_languages":["french"],
    "source_files":["a.lite"],"target_files":[{"lang":"french","path":"b.lite"}]})",
                          "/base");
  EXPECT_EQ(m.id, "x");
  EXPECT_EQ(m.base_dir, "/base");
  EXPECT_EQ(m.target_files.at(0).lang, "french");
  for (const char* bad : {"{", R"({"id":"x"})", R"([1,2])",
                          R"({"id":"x","source_language":"english","source_files":[]})"}) {
    try {
      check_manifest(parse_manifest(bad));
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), "BadManifest") << bad;
    }
  }
}

TEST(Load, CafeFromDisk) {
  auto p = load_project(std::filesystem::path(kData) / "cafe" / "cafe.json");
  ASSERT_TRUE(p.ok());
  EXPECT_EQ(count_code(p.diagnostics, "DerivedCanonical"), 1u);
  EXPECT_EQ(p.diagnostics.size(), 1u);
  EXPECT_EQ(p.project.units.size(), 2u);
}

TEST(Load, MissingFile) {
  auto m = manifest();
  m.base_dir = kData;
  auto p = load_project(m);
  EXPECT_FALSE(p.ok());
  EXPECT_EQ(count_code(p.diagnostics, "FileNotFound"), 2u);
}

TEST(Blank, GoldenFile) {
  auto p = load_project(std::filesystem::path(kData) / "cafe" / "cafe.json");
  ASSERT_TRUE(p.ok());
  EXPECT_EQ(generate_blank_targets(p.project, "french"),
            read_file(std::filesystem::path(kData) / "cafe" / "french.blank.golden"));
}

TEST(Blank, PlaceholderShape) {
  auto r = assemble_texts(kSource, "");
  auto blank = generate_blank_targets(r.project, "french");
  EXPECT_NE(blank.find("Target/french ?\n"), std::string::npos);
  EXPECT_NE(blank.find("french=\"?\""), std::string::npos);

  auto empty = assemble_texts("TrLex $$x source=\"a\"\n", "");
  auto parsed = parse_rule_file(generate_blank_targets(empty.project, "french"),
                                FileRole::target("french", "english"));
  EXPECT_TRUE(parsed.file.units().empty());
}

TEST(Refresh, KeepsFilledAppendsNewMarksOrphans) {
  auto french = parse_rule_file(kFrench, FileRole::target("french", "english"));
  std::string grown = std::string(kSource) +
                      "\nTrPhrase $$top\nSource ( bye | good bye )\nTarget/english good bye\nEndTrPhrase\n";
  auto r = assemble_texts(grown, "");
  auto out = refresh_blank_targets(french.file, r.project, "french");
  EXPECT_NE(out.find("Target/french Bonjour"), std::string::npos);
  EXPECT_NE(out.find("Target/english good bye\nTarget/french ?"), std::string::npos);
  EXPECT_EQ(out.find("# ORPHAN"), std::string::npos);

  // Source drops "hello": its block stays, marked.
  std::string shrunk = kSource;
  shrunk.erase(0, shrunk.find("TrPhrase $$top\nSource i"));
  auto r2 = assemble_texts(shrunk, "");
  auto out2 = refresh_blank_targets(french.file, r2.project, "french");
  EXPECT_NE(out2.find("# ORPHAN\nTrPhrase $$top\nTarget/english hello\nTarget/french Bonjour"),
            std::string::npos)
      << out2;

  // Fixpoint when nothing changed.
  auto r3 = assemble_texts(kSource, "");
  EXPECT_EQ(refresh_blank_targets(french.file, r3.project, "french"),
            serialize_rule_file(french.file));
}

// Canonical keys of each top unit and lexeme, as the oracle for blank output.
std::multiset<std::string> source_keys(const AssembledProject& p) {
  std::multiset<std::string> keys;
  for (const auto& u : p.units) keys.insert(u.category + "|" + u.key);
  for (const auto& l : p.lexemes) keys.insert(l.category + "|" + l.key);
  return keys;
}

TEST(Property, BlankHasOneFragmentPerKeyAndFillsCleanly) {
  for (std::uint64_t seed = 1; seed <= 80; ++seed) {
    auto rp = testing::random_project(seed, 5000);
    auto blank = generate_blank_targets(rp.project, "french");
    auto parsed = parse_rule_file(blank, FileRole::target("french", "english"));
    ASSERT_FALSE(has_errors(parsed.diagnostics)) << blank;
    std::multiset<std::string> got;
    for (const auto* u : parsed.file.units())
      got.insert(u->category + "|" + canonical_key(*u->targets.at("english").tmpl));
    for (const auto* l : parsed.file.lexemes())
      got.insert(l->category + "|" + canonical_key(*l->values.at("english")));
    ASSERT_EQ(got, source_keys(rp.project)) << blank;

    // Replace every placeholder, reassemble: no MissingTarget for french.
    std::string filled = std::regex_replace(blank, std::regex("Target/french \\?"), "Target/french t");
    filled = std::regex_replace(filled, std::regex("french=\"\\?\""), "french=\"t\"");
    auto m = manifest();
    auto src = parse_rule_file(rp.source_text, FileRole::source("english"));
    auto tgt = parse_rule_file(filled, FileRole::target("french", "english"));
    auto r = assemble(m, {src.file, tgt.file});
    ASSERT_TRUE(r.ok());
    EXPECT_EQ(count_code(all_diagnostics(r), "MissingTarget"), 0u) << filled;

    // Refreshing a filled file against the same source changes nothing.
    EXPECT_EQ(refresh_blank_targets(tgt.file, r.project, "french"), serialize_rule_file(tgt.file));
  }
}

TEST(Property, TargetIndexKeysHaveSources) {
  auto r = assemble_texts(kSource, std::string(kFrench) +
                                       "TrLex $$food-or-drink english=\"a tea\" french=\"un the\"\n");
  std::set<std::string> keys;
  for (const auto& u : r.project.units) keys.insert(u.key);
  for (const auto& l : r.project.lexemes) keys.insert(l.key);
  for (const auto& [kl, _] : r.project.target_index())
    if (!keys.count(kl.first)) ADD_FAILURE() << kl.first;
  EXPECT_EQ(count_code(r.diagnostics, "OrphanTarget"), 1u);
}

}  // namespace
}  // namespace lite
