#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "clipsam/autodiff.hpp"

namespace clipsam {

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Binary parameter file layout, all integers and floats little-endian:
///
///   "CSAM1"
///   repeated, in sorted-name order:
///     u64 name_length, name bytes, u64 rank, u64 extents[rank], f64 data[numel]
void save_checkpoint(const std::filesystem::path& path, const ParamStore& params);

/// Reads every record of a checkpoint file.
std::map<std::string, Tensor> read_checkpoint(const std::filesystem::path& path);

/// Loads a checkpoint into an existing store. The file must hold exactly the
/// store's parameter names with matching shapes.
void load_checkpoint(const std::filesystem::path& path, ParamStore& params);

}  // namespace clipsam
