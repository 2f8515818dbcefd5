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

#ifndef CID_PERTURBATION_H_
#define CID_PERTURBATION_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace cid {

enum class PerturbationType {
  kSynonym,
  kIrrelevantInfo,
  kSemanticChange,
  kGenderSwap,
  kLetterDuplication,
  kPunctuation,
  kTypo,
};

std::string_view to_string(PerturbationType type);
// Throws InvalidInputError for an unregistered tag.
PerturbationType ParsePerturbationType(std::string_view tag);
std::span<const PerturbationType> all_perturbation_types();

// Lookup tables for the word-level perturbations. Keys are lower-case words.
//
// JSON: {"synonyms": {word: [words]}, "gender_map": {word: word},
//        "irrelevant_clauses": [str], "semantic_swaps": {word: [words]}}
struct PerturbationTables {
  std::map<std::string, std::vector<std::string>> synonyms;
  std::map<std::string, std::string> gender_map;
  std::vector<std::string> irrelevant_clauses;
  std::map<std::string, std::vector<std::string>> semantic_swaps;

  static PerturbationTables FromJson(const nlohmann::json& doc);
  static PerturbationTables Load(const std::filesystem::path& path);
  nlohmann::json ToJson() const;
  // Small built-in tables covering the tech-interview and promotion prompts.
  static PerturbationTables Builtin();
};

struct PerturbedPair {
  std::string original;
  std::string perturbed;
  PerturbationType type = PerturbationType::kSynonym;

  void Validate() const;
  friend bool operator==(const PerturbedPair&, const PerturbedPair&) = default;
};

// Applies exactly one perturbation of `type` to `text`. The site (and the
// replacement, where there is a choice) is drawn from a generator seeded
// with `seed`, so the result is reproducible.
//
//   synonym / semantic_change  one word replaced from the table
//   gender_swap                every gendered word mapped (one logical swap)
//   irrelevant_info            a table clause prepended as its own sentence
//   letter_duplication         one letter doubled
//   punctuation                a comma inserted after a word
//   typo                       two adjacent distinct letters transposed
//
// Throws NotApplicableError if the text has no eligible site and
// InvalidInputError if the required table is empty.
PerturbedPair perturb(std::string_view text, PerturbationType type,
                      const PerturbationTables& tables, std::uint64_t seed);

// JSON-lines pairs file: {"original": str, "perturbed": str, "type": str}.
std::vector<PerturbedPair> read_pairs_jsonl(std::istream& in);
void write_pair_jsonl(std::ostream& out, const PerturbedPair& pair);
nlohmann::json to_json(const PerturbedPair& pair);
PerturbedPair pair_from_json(const nlohmann::json& doc);

}  // namespace cid

#endif  // CID_PERTURBATION_H_
