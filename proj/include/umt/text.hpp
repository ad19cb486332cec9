#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace umt {

// Minimal UTF-8 handling: decode to codepoints, classify whitespace and
// punctuation for the tokenizer, re-encode. Invalid bytes are passed through
// as single-byte units so tokenization is total on arbitrary input.

std::vector<std::uint32_t> utf8_decode(std::string_view s);
std::string utf8_encode(const std::vector<std::uint32_t>& cps);
void utf8_append(std::string& out, std::uint32_t cp);

// Splits a UTF-8 string into single-codepoint strings.
std::vector<std::string> utf8_chars(std::string_view s);

bool is_space_cp(std::uint32_t cp);
bool is_punct_cp(std::uint32_t cp);
bool is_digit_cp(std::uint32_t cp);
std::uint32_t lower_cp(std::uint32_t cp);

std::string lowercase_utf8(std::string_view s);
bool is_digit_string(std::string_view s);

std::vector<std::string> split_ws(std::string_view line);
std::string join(const std::vector<std::string>& tokens, std::string_view sep = " ");

// Fixed 9-significant-digit formatting shared by all text artifacts.
std::string format_g9(double v);

std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace umt
