/*
 * io.hpp — small filesystem and formatting helpers shared by the pipeline
 * runner and the CLI. Numeric output always goes through snprintf so reruns
 * are byte-identical.
 */
#pragma once

#include <cstdint>
#include <string>

namespace v2g {

void ensure_dir(const std::string& path);
bool file_exists(const std::string& path);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

std::uint64_t fnv1a(const std::string& s);

std::string fmt(double v, const char* spec = "%.10g");

}  // namespace v2g
