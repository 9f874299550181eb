#pragma once

#include <string>

namespace cgrp {

/// Writes bytes to `path` via a sibling temp file and rename, so readers
/// never observe a partially written artifact.
void write_file_atomic(const std::string& path, const std::string& bytes);

std::string read_file(const std::string& path);

}  // namespace cgrp
