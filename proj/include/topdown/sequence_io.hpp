#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "topdown/model.hpp"

namespace topdown {

/// Parses one sequence document. Unannotated joints come back with
/// present=false. Throws ParseError naming the offending JSON path.
Sequence load_sequence(std::string_view text);

/// Accepts either a single sequence object or an array of them.
std::vector<Sequence> load_sequences(std::string_view text);

std::string save_predictions(const Sequence& seq, int indent = -1);
std::string save_predictions(const std::vector<Sequence>& seqs, int indent = -1);

nlohmann::json sequence_to_json(const Sequence& seq);
Sequence sequence_from_json(const nlohmann::json& doc, const std::string& path = "$");

// File helpers shared by the CLI and tools.
std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temp file then renames, so a failed write never leaves
/// a partial file behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

} // namespace topdown
