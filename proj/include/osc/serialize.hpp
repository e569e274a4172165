#pragma once

#include <filesystem>
#include <iosfwd>

#include "osc/bench.hpp"

namespace osc {

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat CSV: one row per node, index coordinates then the value. A comment
/// header carries the grid descriptor so the file round-trips.
void write_grid_csv(const GridFunction& u, const std::filesystem::path& path);
GridFunction read_grid_csv(const std::filesystem::path& path);

/// Binary dump with a 16-byte header: magic "OSCG", dim, resolution, kind
/// (0 torus, 1 box). Box grids append bounds and the second axis cell count.
void write_grid_binary(const GridFunction& u, const std::filesystem::path& path);
GridFunction read_grid_binary(const std::filesystem::path& path);

/// Structured text document for operator specs ("oscspec 1", key/value with
/// nested brace lists); the schema is documented in docs/formats.md.
std::string spec_to_text(const OperatorSpec& spec);
SpecPtr spec_from_text(const std::string& text);
void write_spec(const OperatorSpec& spec, const std::filesystem::path& path);
SpecPtr read_spec(const std::filesystem::path& path);

/// Resolve "builtin:<name>" or a path to an oscspec file.
SpecPtr resolve_spec(const std::string& ref);

void write_effective_csv(const EffectiveTable& table, const std::filesystem::path& path);
void write_effective_json(const EffectiveTable& table, const std::filesystem::path& path);

void write_decay_csv(const BoundaryLayerSolution& sol, const std::filesystem::path& path);

void write_report_json(const ExperimentReport& report, const std::filesystem::path& path);
void write_sweep_csv(const ExperimentReport& report, const std::filesystem::path& path);
/// gnuplot-ready two-column data (eps, error).
void write_sweep_dat(const ExperimentReport& report, bool corrected,
                     const std::filesystem::path& path);

/// FNV-1a 64-bit content hash, hex encoded (the manifest hash).
std::string content_hash(const std::filesystem::path& path);
void write_manifest(const std::vector<std::filesystem::path>& files,
                    const std::filesystem::path& path);

}  // namespace osc
