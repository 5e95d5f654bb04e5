#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "memobs/inverse.hpp"
#include "memobs/kernels.hpp"
#include "memobs/modal.hpp"
#include "memobs/sampling.hpp"
#include "memobs/spectral.hpp"

namespace memobs::io {

using Json = nlohmann::ordered_json;

/// Rejects keys outside `allowed`; `path` prefixes error messages.
void require_keys(const Json& object, std::initializer_list<std::string_view> allowed, const std::string& path);

double get_number(const Json& object, std::string_view key, const std::string& path);
int get_int(const Json& object, std::string_view key, const std::string& path);

Json to_json(const SpectralField& field);
SpectralField field_from_json(const Json& j, const std::string& path = "field");
/// {"coeffs": [...]} padded with zeros to the basis, optional L and K must match.
SpectralField field_from_json(const Json& j, const SpectralBasis& basis, const std::string& path);
SpectralBasis basis_from_json(const Json& j, const std::string& path = "basis");

Json to_json(const MemoryKernel& kernel);
MemoryKernel kernel_from_json(const Json& j, const std::string& path = "kernel");

/// Intervals are [a, b] (closed) or [a, b, "()" | "[)" | "(]" | "[]"].
Json to_json(const ObservationRegion& region);
ObservationRegion region_from_json(const Json& j, const std::string& path);

Json to_json(const SamplingPlan& plan);
SamplingPlan plan_from_json(const Json& j, const std::string& path = "plan");

Json to_json(const ObservationData& data);
ObservationData observation_data_from_json(const Json& j, const std::string& path = "data");

Json to_json(const NodalSet& set);

/// 17 significant digits.
std::string format_number(double value);

/// Stable, indented JSON with every double printed by format_number.
std::string dump(const Json& value);

std::string sha256_hex(std::string_view bytes);

using Cell = std::variant<double, long long, std::string>;

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

/// Optional leading "# key: value" comment, then header and rows.
std::string to_csv(const CsvTable& table, const std::string& comment = {});

void write_text(const std::filesystem::path& path, std::string_view contents);
std::string read_text(const std::filesystem::path& path);

}  // namespace memobs::io
