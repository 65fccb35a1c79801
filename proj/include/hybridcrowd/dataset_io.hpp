#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hybridcrowd/dataset.hpp"

namespace hybridcrowd {

enum class FileFormat { csv, json };
std::string_view to_string(FileFormat f);
std::optional<FileFormat> parse_file_format(std::string_view text);
/// Picks the format from the file extension (.json -> json, otherwise csv).
FileFormat format_from_extension(const std::filesystem::path& path);

/// Corpus files carry exactly the columns/keys
/// id,text,category,group,sentiment,status,partner_id.
/// The JSON form is {"metadata": "...", "headlines": [{...}, ...]}; a bare
/// array of headline objects is accepted as well.
/// Throws IoError, ParseError (with line number for CSV) or InvariantError.
Corpus load_corpus(const std::filesystem::path& path, FileFormat format);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path, FileFormat format);

/// Long-format responses `responder_id,headline_id,label` (label 1..5) or
/// `responder_id,headline_id,likelihood`. An empty label/likelihood cell is a
/// missing response. When `profiles` is non-empty the matrix rows follow the
/// profile order and unknown responders are rejected; otherwise rows follow
/// first appearance.
ResponseMatrix load_responses(const std::filesystem::path& path, const Corpus& corpus,
                              std::span<const ResponderProfile> profiles = {});
/// Writes the `label` form for likert-scale matrices and `likelihood` otherwise.
/// Missing cells are omitted.
void save_responses(const ResponseMatrix& responses, const Corpus& corpus,
                    const std::filesystem::path& path);

/// `responder_id,kind,benchmark_score`; an empty score means none.
std::vector<ResponderProfile> load_profiles(const std::filesystem::path& path);
void save_profiles(std::span<const ResponderProfile> profiles, const std::filesystem::path& path);

}  // namespace hybridcrowd
