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

#ifndef CID_TEXT_IO_H_
#define CID_TEXT_IO_H_

// Small formatting and CSV helpers shared by the writers.

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace cid {

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);
// Strict parse of a whole string as a double.
double parse_double(std::string_view text);
// "0,1,2.5" -> {0, 1, 2.5}.
std::vector<double> parse_double_list(std::string_view text);

// RFC 4180 field quoting: quotes when the field has a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);
// Reads one record (which may span lines inside quotes). Returns false at EOF.
bool read_csv_row(std::istream& in, std::vector<std::string>& fields);

// Leading/trailing ASCII whitespace removed.
std::string trim(std::string_view text);

}  // namespace cid

#endif  // CID_TEXT_IO_H_
