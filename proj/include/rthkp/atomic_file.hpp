#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace rthkp::persist {

/// Points inside write_file_atomically where a fault hook may fire.
enum class WriteStage {
    BeforeWrite,   // nothing written yet
    MidWrite,      // temp file holds roughly half of the content
    BeforeSync,    // temp file complete, not yet flushed
    BeforeRename,  // temp file flushed, target untouched
};

/// Invoked at each WriteStage; throwing aborts the write at that point.
using FaultHook = std::function<void(WriteStage)>;

/// Writes `content` to a temporary file in the target's directory, flushes it,
/// then renames it over `target`. On any failure the target keeps its previous
/// content, the temporary file is removed, and PersistenceError is thrown.
void write_file_atomically(const std::filesystem::path& target, std::string_view content,
                           const FaultHook& hook = {});

/// Reads a whole file. Throws PersistenceError when it cannot be read.
std::string read_file(const std::filesystem::path& path);

}  // namespace rthkp::persist
