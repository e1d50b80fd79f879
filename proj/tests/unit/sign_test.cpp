#include <random>

#include <boost/property_tree/xml_parser.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <gtest/gtest.h>

#include "lite/sign.hpp"

namespace lite {
namespace {

const std::filesystem::path kTrain = std::filesystem::path(LITE_TEST_DATA) / "train";

struct Train {
  LoadedProject project;
  LoadedSignTarget target;
};

const Train& train() {
  static const Train t = [] {
    Train t;
    t.project = load_project(kTrain / "train.json");
    t.target = load_sign_target(t.project.manifest, t.project.manifest.sign_targets.at(0));
    return t;
  }();
  return t;
}

std::string code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

std::vector<std::string> column(const SignTable& t, std::size_t c) {
  std::vector<std::string> out;
  for (const auto& s : t.streams) out.push_back(s.at(c));
  return out;
}

void expect_rectangular(const SignTable& t) {
  for (const auto& s : t.streams) EXPECT_EQ(s.size(), t.columns());
}

TEST(SignRules, TextRuleShape) {
  ASSERT_TRUE(train().project.ok());
  ASSERT_TRUE(train().target.diagnostics.empty());
  const auto& rules = train().target.rules;
  ASSERT_EQ(rules.rules.size(), 1u);
  const auto& r = rules.rules[0];
  EXPECT_EQ(r.width(), 5u);
  EXPECT_EQ(r.column_variable(2), "station");
  EXPECT_EQ(r.streams[0][2], (SignSlot{SignSlot::Kind::Var, "station"}));
  EXPECT_EQ(r.streams[5][2], (SignSlot{SignSlot::Kind::Var, "station"}));
  for (std::size_t s = 1; s < 5; ++s) EXPECT_EQ(r.streams[s][2].kind, SignSlot::Kind::Symbol);
  EXPECT_FALSE(r.column_variable(0).has_value());
  EXPECT_EQ(rules.lexemes.size(), 2u);
}

TEST(SignRules, CsvEqualsText) {
  auto csv = parse_sign_rules(read_file(kTrain / "rules.csv"), SignRuleFormat::Csv,
                              FileRole::target("lsf-ch", "french"), "rules.csv");
  ASSERT_TRUE(csv.diagnostics.empty());
  EXPECT_EQ(csv.rules, train().target.rules);
}

const char* kHeader = "TrPhrase $$top\nSource x $$v\nTarget/french x $$v\n";

TEST(SignRules, Errors) {
  FileRole role = FileRole::monolithic("french");
  auto first = [&](const std::string& text) {
    auto r = parse_sign_rules(text, SignRuleFormat::Text, role);
    return r.diagnostics.empty() ? std::string() : r.diagnostics[0].code;
  };
  std::string six =
      "Target/gloss A $$v\nTarget/head N N\nTarget/gaze N N\nTarget/eyebrows N N\n"
      "Target/aperture N N\nTarget/mouthing m $$v\nEndTrPhrase\n";
  EXPECT_EQ(first(kHeader + six), "");
  std::string short_head = six;
  short_head.replace(short_head.find("head N N"), 8, "head N");
  EXPECT_EQ(first(kHeader + short_head), "StreamLengthMismatch");
  std::string no_gaze = six;
  no_gaze.erase(no_gaze.find("Target/gaze"), 16);
  EXPECT_EQ(first(kHeader + no_gaze), "MissingStream");
  std::string moved = six;
  moved.replace(moved.find("mouthing m $$v"), 14, "mouthing $$v m");
  EXPECT_EQ(first(kHeader + moved), "InconsistentVarColumn");
  std::string foreign = six;
  foreign.replace(foreign.find("gloss A $$v"), 11, "gloss A $$w");
  foreign.replace(foreign.find("mouthing m $$v"), 14, "mouthing m $$w");
  EXPECT_EQ(first(kHeader + foreign), "VariableNotInCanonical");
  EXPECT_EQ(first("TrLex $$v source=\"a\" mouthing=\"A\"\n"), "MissingStream");
  EXPECT_EQ(first("TrLex $$v source=\"a\" gloss=\"A B\" mouthing=\"A\"\n"),
            "StreamLengthMismatch");
}

TEST(SignRules, CsvErrors) {
  FileRole role = FileRole::target("lsf-ch", "french");
  auto first = [&](const std::string& text) {
    auto r = parse_sign_rules(text, SignRuleFormat::Csv, role);
    return r.diagnostics.empty() ? std::string() : r.diagnostics[0].code;
  };
  EXPECT_EQ(first("phrase,top,x,gloss,A\n"), "BadCsv");
  EXPECT_EQ(first("kind,category,canonical,stream\nphrase,top,x,gloss,A\n"), "MissingStream");
  EXPECT_EQ(first("kind,category,canonical,stream\nphrase,top,x,nose,A\n"), "MissingStream");
  EXPECT_EQ(first("kind,category,canonical,stream\nrule,top,x,gloss,A\n"), "BadCsv");
}

TEST(SignTranslate, GeneveTable) {
  const auto& t = train();
  auto table = sign_translate(t.project.project, t.target.rules,
                              tokenize("ce train ne circule pas via genčve"));
  EXPECT_EQ(table.columns(), 5u);
  expect_rectangular(table);
  EXPECT_EQ(table[Stream::Gloss],
            (std::vector<std::string>{"TRAIN", "CE", "GENEVE", "ALLER", "PAS"}));
  EXPECT_EQ(column(table, 2), (std::vector<std::string>{"GENEVE", "Neutral", "Neutral", "Up",
                                                        "Neutral", "Genčve"}));
  EXPECT_EQ(table[Stream::Head][4], "Shaking");
}

TEST(SignTranslate, AlternativeSourceSpelling) {
  const auto& t = train();
  auto table = sign_translate(t.project.project, t.target.rules,
                              tokenize("ce train ne circule pas via lausane"));
  EXPECT_EQ(table[Stream::Gloss][2], "LAUSANNE");
  EXPECT_EQ(table[Stream::Mouthing][2], "Lausanne");
}

TEST(SignTranslate, NoMatchAndMissingTarget) {
  const auto& t = train();
  EXPECT_EQ(code_of([&] {
              sign_translate(t.project.project, t.target.rules, tokenize("le train arrive"));
            }),
            "NoMatch");
  EXPECT_EQ(code_of([&] {
              sign_translate(t.project.project, SignRuleSet{},
                             tokenize("ce train ne circule pas via genčve"));
            }),
            "MissingSignTarget");
}

// A monolithic project whose sign rule and lexemes are given as text.
struct Mono {
  AssembledProject project;
  SignRuleSet rules;
};

Mono mono(const std::string& text) {
  ProjectManifest m;
  m.id = "mono";
  m.source_language = "french";
  m.source_files = {"m.lite"};
  auto parsed = parse_rule_file(text, FileRole::monolithic("french"));
  EXPECT_FALSE(has_errors(parsed.diagnostics)) << text;
  auto a = assemble(m, {parsed.file});
  EXPECT_TRUE(a.ok()) << text;
  auto s = parse_sign_rules(text, SignRuleFormat::Text, FileRole::monolithic("french"));
  EXPECT_TRUE(s.diagnostics.empty()) << text << (s.diagnostics.empty() ? "" : s.diagnostics[0].message);
  return {std::move(a.project), std::move(s.rules)};
}

TEST(SignTranslate, WidthTwoLexemeInherits) {
  auto m = mono(read_file(kTrain / "french.lite") +
                "TrLex $$station source=\"berne\" gloss=\"BERNE VILLE\" mouthing=\"Bä rn\"\n");
  auto table = sign_translate(m.project, m.rules, tokenize("ce train ne circule pas via berne"));
  EXPECT_EQ(table.columns(), 6u);
  expect_rectangular(table);
  EXPECT_EQ(column(table, 2), (std::vector<std::string>{"BERNE", "Neutral", "Neutral", "Up",
                                                        "Neutral", "Bä"}));
  EXPECT_EQ(column(table, 3), (std::vector<std::string>{"VILLE", "Neutral", "Neutral", "Up",
                                                        "Neutral", "rn"}));
  EXPECT_EQ(table[Stream::Head][5], "Shaking");
}

TEST(SignTranslate, UnboundOptionalColumnDisappears) {
  auto m = mono(R"L(TrPhrase $$top
Source train ?$$when
Target/french train ?$$when
Target/gloss    TRAIN $$when
Target/head     Down  Neutral
Target/gaze     Neutral Neutral
Target/eyebrows Neutral Up
Target/aperture Neutral Neutral
Target/mouthing Tr@   $$when
EndTrPhrase
TrLex $$when source="demain" gloss="DEMAIN" mouthing="Demain"
)L");
  auto bare = sign_translate(m.project, m.rules, tokenize("train"));
  EXPECT_EQ(bare.columns(), 1u);
  expect_rectangular(bare);
  auto with = sign_translate(m.project, m.rules, tokenize("train demain"));
  EXPECT_EQ(column(with, 1),
            (std::vector<std::string>{"DEMAIN", "Neutral", "Neutral", "Up", "Neutral", "Demain"}));
}

TEST(Sigml, FiveWellFormedSigns) {
  const auto& t = train();
  auto table = sign_translate(t.project.project, t.target.rules,
                              tokenize("ce train ne circule pas via genčve"));
  auto xml = render_sigml(table, t.target.lexicon);
  std::istringstream in(xml);
  boost::property_tree::ptree tree;
  ASSERT_NO_THROW(boost::property_tree::read_xml(in, tree));
  std::vector<boost::property_tree::ptree> signs;
  for (const auto& [name, child] : tree.get_child("sigml"))
    if (name == "hns_sign") signs.push_back(child);
  ASSERT_EQ(signs.size(), 5u);
  EXPECT_EQ(signs[4].get<std::string>("<xmlattr>.gloss"), "PAS");
  EXPECT_EQ(signs[4].get<std::string>("hamnosys_nonmanual.hnm_head.<xmlattr>.tag"), "SH");
  // GENEVE: eyebrows raised, mouthing, no head or gaze element.
  const auto& geneve = signs[2];
  EXPECT_EQ(geneve.get<std::string>("hamnosys_nonmanual.hnm_eyebrows.<xmlattr>.tag"), "RB");
  EXPECT_FALSE(geneve.get_child_optional("hamnosys_nonmanual.hnm_head"));
  EXPECT_EQ(geneve.get<std::string>("hamnosys_nonmanual.hnm_mouthpicture.<xmlattr>.picture"),
            "Z@nEv");
  EXPECT_EQ(render_sigml(table, t.target.lexicon), xml);
}

TEST(Sigml, EmptyTableAndMissingEntries) {
  const auto& t = train();
  auto xml = render_sigml(SignTable{}, t.target.lexicon);
  std::istringstream in(xml);
  boost::property_tree::ptree tree;
  ASSERT_NO_THROW(boost::property_tree::read_xml(in, tree));
  EXPECT_EQ(tree.get_child("sigml").count("hns_sign"), 0u);

  auto table = sign_translate(t.project.project, t.target.rules,
                              tokenize("ce train ne circule pas via genčve"));
  SignLexicon lex = t.target.lexicon;
  lex.manual.erase("GENEVE");
  try {
    render_sigml(table, lex);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "MissingLexiconEntry");
    EXPECT_STREQ(e.what(), "GENEVE");
  }
  lex = t.target.lexicon;
  lex.manual["GENEVE"] = "?";
  EXPECT_EQ(code_of([&] { render_sigml(table, lex); }), "MissingLexiconEntry");
  lex = t.target.lexicon;
  lex.nonmanual.erase({"head", "Shaking"});
  EXPECT_EQ(code_of([&] { render_sigml(table, lex); }), "MissingLexiconEntry");
}

TEST(Lexicon, LoadErrors) {
  SignLexicon lex;
  EXPECT_EQ(code_of([&] { load_lexicon_csv(lex, SignLexiconKind::Manual, "gloss,hamnosys\nA,x\nA,y\n"); }),
            "BadLexicon");
  EXPECT_EQ(code_of([&] { load_lexicon_csv(lex, SignLexiconKind::Nonmanual, "symbol,stream,tag\nUp,eyebrows\n"); }),
            "BadLexicon");
}

TEST(Lexicon, RefreshAddsBlankRows) {
  auto m = mono(read_file(kTrain / "french.lite") +
                "TrLex $$station source=\"berne\" gloss=\"BERNE\" mouthing=\"Berne\"\n");
  std::string manual = read_file(kTrain / "manual.csv");
  auto out = refresh_sign_lexicon(SignLexiconKind::Manual, manual, m.rules);
  EXPECT_EQ(out, manual + "BERNE,?\n");
  EXPECT_EQ(refresh_sign_lexicon(SignLexiconKind::Manual, out, m.rules), out);

  std::string mouthing = read_file(kTrain / "mouthing.csv");
  EXPECT_EQ(refresh_sign_lexicon(SignLexiconKind::Mouthing, mouthing, m.rules),
            mouthing + "Berne,?\n");

  auto nm = refresh_sign_lexicon(SignLexiconKind::Nonmanual, "symbol,stream,tag\nDown,head,NF\n",
                                 train().target.rules);
  EXPECT_EQ(nm,
            "symbol,stream,tag\nDown,head,NF\nShaking,head,?\nDown,gaze,?\n"
            "FurrowBoth,eyebrows,?\nUp,eyebrows,?\nSmall,aperture,?\nWide,aperture,?\n");

  EXPECT_EQ(refresh_sign_lexicon(SignLexiconKind::Manual, manual, SignRuleSet{}), manual);
  EXPECT_EQ(refresh_sign_lexicon(SignLexiconKind::Manual, "", train().target.rules),
            "gloss,hamnosys\nTRAIN,?\nCE,?\nALLER,?\nPAS,?\nGENEVE,?\nLAUSANNE,?\n");
}

// Random rules: a fixed source shape "go $$a $$b" with literal columns around
// the variable columns and lexemes of random width and stream coverage.
TEST(Property, WidthAdditivityAndInheritance) {
  std::mt19937_64 rng(3);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  for (int iter = 0; iter < 200; ++iter) {
    std::size_t width = pick(2, 6);
    std::size_t ca = pick(0, width - 1), cb;
    do cb = pick(0, width - 1);
    while (cb == ca);
    PerStream<std::vector<std::string>> cols;
    for (std::size_t s = 0; s < kStreamCount; ++s)
      for (std::size_t c = 0; c < width; ++c) {
        bool var_slot = (c == ca || c == cb) && (s == 0 || pick(0, 2) == 0);
        cols[s].push_back(var_slot ? (c == ca ? "$$a" : "$$b")
                                   : fmt::format("S{}c{}", s, pick(0, 3)));
      }
    std::string text = "TrPhrase $$top\nSource go $$a $$b\nTarget/french go $$a $$b\n";
    for (std::size_t s = 0; s < kStreamCount; ++s) {
      text += fmt::format("Target/{}", kStreams[s]);
      for (const auto& v : cols[s]) text += " " + v;
      text += "\n";
    }
    text += "EndTrPhrase\n";
    std::map<std::string, std::size_t> widths;
    std::map<std::string, std::vector<bool>> provided;
    for (const char* var : {"a", "b"}) {
      std::size_t w = pick(1, 3);
      widths[var] = w;
      std::string lex = fmt::format("TrLex $${} source=\"l{}\"", var, var);
      std::vector<bool> has(kStreamCount);
      for (std::size_t s = 0; s < kStreamCount; ++s) {
        has[s] = s == 0 || pick(0, 1) == 0;
        if (!has[s]) continue;
        std::vector<std::string> vals;
        for (std::size_t k = 0; k < w; ++k) vals.push_back(fmt::format("L{}{}{}", var, s, k));
        lex += fmt::format(" {}=\"{}\"", kStreams[s], fmt::join(vals, " "));
      }
      provided[var] = has;
      text += lex + "\n";
    }
    auto m = mono(text);
    auto table = sign_translate(m.project, m.rules, tokenize("go la lb"));
    expect_rectangular(table);
    ASSERT_EQ(table.columns(), width - 2 + widths["a"] + widths["b"]) << text;

    // Construction oracle: walk the rule's columns.
    std::size_t out = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (c != ca && c != cb) {
        for (std::size_t s = 0; s < kStreamCount; ++s) ASSERT_EQ(table.streams[s][out], cols[s][c]);
        ++out;
        continue;
      }
      std::string var = c == ca ? "a" : "b";
      for (std::size_t k = 0; k < widths[var]; ++k, ++out)
        for (std::size_t s = 0; s < kStreamCount; ++s) {
          std::string expected = provided[var][s] ? fmt::format("L{}{}{}", var, s, k)
                                 : cols[s][c][0] == '$' ? std::string(kNeutral)
                                                         : cols[s][c];
          ASSERT_EQ(table.streams[s][out], expected) << text;
        }
    }
  }
}

}  // namespace
}  // namespace lite
