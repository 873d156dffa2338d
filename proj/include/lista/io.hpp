#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lista/problems.hpp"

namespace lista {

enum class IoErrorCode { malformed_header, dimension_mismatch, truncated_payload, io_failure };

class IoError : public std::runtime_error {
public:
    IoError(IoErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    IoErrorCode code() const { return code_; }

private:
    IoErrorCode code_;
};

/// On-disk dataset: `path` holds the binary payload (row-major little-endian
/// float64 sections in declared order), `path + ".json"` the sidecar with
/// dims, generator config and per-section byte offsets. W/D/G/A_pinv and mu
/// are present once the dictionary stage has run.
struct Dataset {
    ProblemSetup setup;                // A always present; weights optional
    std::vector<Instance> instances;
    GenConfig gen;                     // config used to generate the instances
};

void save_problem(const std::string& path, const Dataset& ds);
Dataset load_problem(const std::string& path);

std::string sidecar_path(const std::string& path);

/// Instances as CSV for debugging: one row per (instance, kind) with kind in
/// {x_star, epsilon, b}.
void export_instances_csv(const std::string& path, const Dataset& ds);

}  // namespace lista
