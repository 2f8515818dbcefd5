// Copyright 2026 The CID Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cid/perturbation.h"

#include <array>
#include <cctype>
#include <fstream>
#include <random>

#include "cid/error.h"

namespace cid {
namespace {

constexpr std::array<PerturbationType, 7> kAllTypes = {
    PerturbationType::kSynonym,           PerturbationType::kIrrelevantInfo,
    PerturbationType::kSemanticChange,    PerturbationType::kGenderSwap,
    PerturbationType::kLetterDuplication, PerturbationType::kPunctuation,
    PerturbationType::kTypo,
};

bool IsLetter(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

struct WordSpan {
  std::size_t begin;
  std::size_t end;
};

// Maximal runs of ASCII letters (apostrophes allowed inside a word).
std::vector<WordSpan> FindWords(std::string_view text) {
  std::vector<WordSpan> words;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!IsLetter(text[i])) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    while (i < text.size() &&
           (IsLetter(text[i]) ||
            (text[i] == '\'' && i + 1 < text.size() && IsLetter(text[i + 1])))) {
      ++i;
    }
    words.push_back({begin, i});
  }
  return words;
}

std::string Lower(std::string_view word) {
  std::string out(word);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Carries the capitalization pattern of `like` over to `word`.
std::string MatchCase(std::string_view like, std::string word) {
  if (word.empty() || like.empty()) return word;
  bool all_upper = like.size() > 1;
  for (const char c : like) {
    if (std::islower(static_cast<unsigned char>(c))) all_upper = false;
  }
  if (all_upper) {
    for (char& c : word) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  } else if (std::isupper(static_cast<unsigned char>(like.front()))) {
    word.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(word.front())));
  }
  return word;
}

std::size_t Draw(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

[[noreturn]] void NoSite(PerturbationType type) {
  throw NotApplicableError("no eligible site for a " + std::string(to_string(type)) +
                           " perturbation");
}

std::string ReplaceFromTable(std::string_view text, PerturbationType type,
                             const std::map<std::string, std::vector<std::string>>& table,
                             std::mt19937_64& rng) {
  std::vector<std::pair<WordSpan, const std::vector<std::string>*>> sites;
  for (const auto& w : FindWords(text)) {
    auto it = table.find(Lower(text.substr(w.begin, w.end - w.begin)));
    if (it != table.end() && !it->second.empty()) sites.emplace_back(w, &it->second);
  }
  if (sites.empty()) NoSite(type);
  const auto& [span, options] = sites[Draw(rng, sites.size())];
  const std::string_view original = text.substr(span.begin, span.end - span.begin);
  const std::string& replacement = (*options)[Draw(rng, options->size())];
  std::string out(text.substr(0, span.begin));
  out += MatchCase(original, replacement);
  out += text.substr(span.end);
  return out;
}

std::string SwapGender(std::string_view text, const std::map<std::string, std::string>& map) {
  std::string out;
  std::size_t cursor = 0;
  bool changed = false;
  for (const auto& w : FindWords(text)) {
    const std::string_view word = text.substr(w.begin, w.end - w.begin);
    auto it = map.find(Lower(word));
    if (it == map.end()) continue;
    out += text.substr(cursor, w.begin - cursor);
    out += MatchCase(word, it->second);
    cursor = w.end;
    changed = true;
  }
  if (!changed) NoSite(PerturbationType::kGenderSwap);
  out += text.substr(cursor);
  return out;
}

std::string DuplicateLetter(std::string_view text, std::mt19937_64& rng) {
  std::vector<std::size_t> sites;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (IsLetter(text[i])) sites.push_back(i);
  }
  if (sites.empty()) NoSite(PerturbationType::kLetterDuplication);
  const std::size_t at = sites[Draw(rng, sites.size())];
  std::string out(text);
  out.insert(at, 1, text[at]);
  return out;
}

std::string InsertComma(std::string_view text, std::mt19937_64& rng) {
  const auto words = FindWords(text);
  std::vector<std::size_t> sites;
  for (std::size_t i = 0; i + 1 < words.size(); ++i) {
    const std::size_t end = words[i].end;
    if (end < text.size() && text[end] == ' ') sites.push_back(end);
  }
  if (sites.empty()) NoSite(PerturbationType::kPunctuation);
  std::string out(text);
  out.insert(sites[Draw(rng, sites.size())], 1, ',');
  return out;
}

std::string TransposeLetters(std::string_view text, std::mt19937_64& rng) {
  std::vector<std::size_t> sites;
  for (std::size_t i = 0; i + 1 < text.size(); ++i) {
    if (IsLetter(text[i]) && IsLetter(text[i + 1]) &&
        std::tolower(static_cast<unsigned char>(text[i])) !=
            std::tolower(static_cast<unsigned char>(text[i + 1]))) {
      sites.push_back(i);
    }
  }
  if (sites.empty()) NoSite(PerturbationType::kTypo);
  const std::size_t at = sites[Draw(rng, sites.size())];
  std::string out(text);
  std::swap(out[at], out[at + 1]);
  return out;
}

template <typename Table>
void RequireTable(const Table& table, std::string_view name) {
  if (table.empty()) {
    throw InvalidInputError("perturbation table '" + std::string(name) + "' is empty");
  }
}

}  // namespace

std::string_view to_string(PerturbationType type) {
  switch (type) {
    case PerturbationType::kSynonym:
      return "synonym";
    case PerturbationType::kIrrelevantInfo:
      return "irrelevant_info";
    case PerturbationType::kSemanticChange:
      return "semantic_change";
    case PerturbationType::kGenderSwap:
      return "gender_swap";
    case PerturbationType::kLetterDuplication:
      return "letter_duplication";
    case PerturbationType::kPunctuation:
      return "punctuation";
    case PerturbationType::kTypo:
      return "typo";
  }
  return "unknown";
}

PerturbationType ParsePerturbationType(std::string_view tag) {
  for (const auto type : kAllTypes) {
    if (to_string(type) == tag) return type;
  }
  throw InvalidInputError("unknown perturbation type '" + std::string(tag) + "'");
}

std::span<const PerturbationType> all_perturbation_types() { return kAllTypes; }

PerturbationTables PerturbationTables::FromJson(const nlohmann::json& doc) {
  PerturbationTables tables;
  try {
    if (doc.contains("synonyms")) {
      tables.synonyms = doc.at("synonyms").get<decltype(tables.synonyms)>();
    }
    if (doc.contains("gender_map")) {
      tables.gender_map = doc.at("gender_map").get<decltype(tables.gender_map)>();
    }
    if (doc.contains("irrelevant_clauses")) {
      tables.irrelevant_clauses =
          doc.at("irrelevant_clauses").get<decltype(tables.irrelevant_clauses)>();
    }
    if (doc.contains("semantic_swaps")) {
      tables.semantic_swaps = doc.at("semantic_swaps").get<decltype(tables.semantic_swaps)>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("malformed perturbation tables: ") + e.what());
  }
  return tables;
}

PerturbationTables PerturbationTables::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open " + path.string());
  try {
    return FromJson(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInputError("cannot parse " + path.string() + ": " + e.what());
  }
}

nlohmann::json PerturbationTables::ToJson() const {
  return {{"synonyms", synonyms},
          {"gender_map", gender_map},
          {"irrelevant_clauses", irrelevant_clauses},
          {"semantic_swaps", semantic_swaps}};
}

PerturbationTables PerturbationTables::Builtin() {
  PerturbationTables t;
  t.synonyms = {
      {"boss", {"manager", "supervisor"}},
      {"told", {"informed"}},
      {"receive", {"get", "obtain"}},
      {"promotion", {"raise"}},
      {"failed", {"flunked"}},
      {"interview", {"job interview"}},
      {"major", {"large", "big"}},
      {"company", {"firm"}},
      {"exam", {"test"}},
  };
  t.gender_map = {
      {"he", "she"},         {"she", "he"},      {"him", "her"},
      {"her", "him"},        {"his", "her"},     {"hers", "his"},
      {"himself", "herself"}, {"herself", "himself"}, {"man", "woman"},
      {"woman", "man"},      {"men", "women"},   {"women", "men"},
      {"boy", "girl"},       {"girl", "boy"},    {"mr", "ms"},
      {"ms", "mr"},
  };
  t.irrelevant_clauses = {
      "It was a sunny day.",
      "The office coffee machine was broken.",
      "The meeting room had blue chairs.",
  };
  t.semantic_swaps = {
      {"boss", {"colleague", "client"}},
      {"promotion", {"bonus", "warning"}},
      {"not", {"definitely"}},
      {"year", {"week"}},
      {"failed", {"passed"}},
      {"software", {"hardware"}},
  };
  return t;
}

void PerturbedPair::Validate() const {
  if (original.empty()) throw InvalidInputError("pair has an empty original text");
  if (original == perturbed) {
    throw InvalidInputError("pair's perturbed text equals the original: '" + original + "'");
  }
}

PerturbedPair perturb(std::string_view text, PerturbationType type,
                      const PerturbationTables& tables, std::uint64_t seed) {
  if (text.empty()) throw InvalidInputError("cannot perturb empty text");
  std::mt19937_64 rng(seed);
  std::string out;
  switch (type) {
    case PerturbationType::kSynonym:
      RequireTable(tables.synonyms, "synonyms");
      out = ReplaceFromTable(text, type, tables.synonyms, rng);
      break;
    case PerturbationType::kSemanticChange:
      RequireTable(tables.semantic_swaps, "semantic_swaps");
      out = ReplaceFromTable(text, type, tables.semantic_swaps, rng);
      break;
    case PerturbationType::kGenderSwap:
      RequireTable(tables.gender_map, "gender_map");
      out = SwapGender(text, tables.gender_map);
      break;
    case PerturbationType::kIrrelevantInfo:
      RequireTable(tables.irrelevant_clauses, "irrelevant_clauses");
      out = tables.irrelevant_clauses[Draw(rng, tables.irrelevant_clauses.size())] + " " +
            std::string(text);
      break;
    case PerturbationType::kLetterDuplication:
      out = DuplicateLetter(text, rng);
      break;
    case PerturbationType::kPunctuation:
      out = InsertComma(text, rng);
      break;
    case PerturbationType::kTypo:
      out = TransposeLetters(text, rng);
      break;
  }
  if (out == text) NoSite(type);
  return PerturbedPair{std::string(text), std::move(out), type};
}

nlohmann::json to_json(const PerturbedPair& pair) {
  return {{"original", pair.original},
          {"perturbed", pair.perturbed},
          {"type", std::string(to_string(pair.type))}};
}

PerturbedPair pair_from_json(const nlohmann::json& doc) {
  try {
    PerturbedPair pair{doc.at("original").get<std::string>(),
                       doc.at("perturbed").get<std::string>(),
                       ParsePerturbationType(doc.at("type").get<std::string>())};
    pair.Validate();
    return pair;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("malformed pair: ") + e.what());
  }
}

std::vector<PerturbedPair> read_pairs_jsonl(std::istream& in) {
  std::vector<PerturbedPair> pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      pairs.push_back(pair_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw InvalidInputError("pairs line " + std::to_string(line_no) + ": " + e.what());
    } catch (const InvalidInputError& e) {
      throw InvalidInputError("pairs line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return pairs;
}

void write_pair_jsonl(std::ostream& out, const PerturbedPair& pair) {
  out << to_json(pair).dump() << '\n';
}

}  // namespace cid
