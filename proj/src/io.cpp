#include "memobs/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "memobs/errors.hpp"

namespace memobs::io {

namespace {

std::string join(const std::string& path, std::string_view key) { return fmt::format("{}.{}", path, key); }

const Json& member(const Json& object, std::string_view key, const std::string& path) {
  if (!object.is_object()) throw ValidationError(fmt::format("{}: expected an object", path));
  auto it = object.find(std::string(key));
  if (it == object.end()) throw ValidationError(fmt::format("{}: missing required field", join(path, key)));
  return *it;
}

std::vector<double> number_array(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError(fmt::format("{}: expected an array of numbers", path));
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ValidationError(fmt::format("{}[{}]: expected a number", path, i));
    out.push_back(j[i].get<double>());
  }
  return out;
}

Json number_array_json(std::span<const double> values) {
  Json out = Json::array();
  for (double v : values) out.push_back(v);
  return out;
}

}  // namespace

void require_keys(const Json& object, std::initializer_list<std::string_view> allowed, const std::string& path) {
  if (!object.is_object()) throw ValidationError(fmt::format("{}: expected an object", path));
  for (const auto& item : object.items()) {
    bool known = false;
    for (std::string_view key : allowed) known = known || key == item.key();
    if (!known) throw ValidationError(fmt::format("{}: unknown field", join(path, item.key())));
  }
}

double get_number(const Json& object, std::string_view key, const std::string& path) {
  const Json& v = member(object, key, path);
  if (!v.is_number()) throw ValidationError(fmt::format("{}: expected a number", join(path, key)));
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ValidationError(fmt::format("{}: must be finite", join(path, key)));
  return x;
}

int get_int(const Json& object, std::string_view key, const std::string& path) {
  const Json& v = member(object, key, path);
  if (!v.is_number_integer()) throw ValidationError(fmt::format("{}: expected an integer", join(path, key)));
  const auto x = v.get<long long>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ValidationError(fmt::format("{}: out of range", join(path, key)));
  }
  return static_cast<int>(x);
}

Json to_json(const SpectralField& field) {
  const Eigen::VectorXd& a = field.coeffs();
  return Json{{"L", field.basis().length()},
              {"K", field.basis().size()},
              {"coeffs", number_array_json(std::span<const double>(a.data(), a.size()))}};
}

SpectralBasis basis_from_json(const Json& j, const std::string& path) {
  require_keys(j, {"L", "K"}, path);
  const double L = get_number(j, "L", path);
  const int K = get_int(j, "K", path);
  if (!(L > 0.0)) throw ValidationError(fmt::format("{}: must be positive", join(path, "L")));
  if (K < 1) throw ValidationError(fmt::format("{}: must be at least 1", join(path, "K")));
  return SpectralBasis(L, K);
}

SpectralField field_from_json(const Json& j, const std::string& path) {
  require_keys(j, {"L", "K", "coeffs"}, path);
  const double L = get_number(j, "L", path);
  const std::vector<double> coeffs = number_array(member(j, "coeffs", path), join(path, "coeffs"));
  const int K = j.contains("K") ? get_int(j, "K", path) : static_cast<int>(coeffs.size());
  if (!(L > 0.0)) throw ValidationError(fmt::format("{}: must be positive", join(path, "L")));
  if (K < 1 || static_cast<int>(coeffs.size()) != K) {
    throw ValidationError(fmt::format("{}: expected {} coefficients, got {}", join(path, "coeffs"), K, coeffs.size()));
  }
  return SpectralField(SpectralBasis(L, K), Eigen::Map<const Eigen::VectorXd>(coeffs.data(), K));
}

SpectralField field_from_json(const Json& j, const SpectralBasis& basis, const std::string& path) {
  require_keys(j, {"L", "K", "coeffs"}, path);
  if (j.contains("L") && get_number(j, "L", path) != basis.length()) {
    throw ValidationError(fmt::format("{}: does not match the basis length", join(path, "L")));
  }
  if (j.contains("K") && get_int(j, "K", path) != basis.size()) {
    throw ValidationError(fmt::format("{}: does not match the basis size", join(path, "K")));
  }
  const std::vector<double> coeffs = number_array(member(j, "coeffs", path), join(path, "coeffs"));
  if (static_cast<int>(coeffs.size()) > basis.size()) {
    throw ValidationError(
        fmt::format("{}: {} coefficients exceed K = {}", join(path, "coeffs"), coeffs.size(), basis.size()));
  }
  Eigen::VectorXd a = Eigen::VectorXd::Zero(basis.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) a[static_cast<Eigen::Index>(i)] = coeffs[i];
  return SpectralField(basis, std::move(a));
}

Json to_json(const MemoryKernel& kernel) {
  return std::visit(
      [](const auto& k) -> Json {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, ZeroKernel>) {
          return Json{{"kind", "zero"}};
        } else if constexpr (std::is_same_v<T, ConstantKernel>) {
          return Json{{"kind", "constant"}, {"value", k.value}};
        } else if constexpr (std::is_same_v<T, LinearKernel>) {
          return Json{{"kind", "linear"}};
        } else if constexpr (std::is_same_v<T, ExponentialKernel>) {
          return Json{{"kind", "exponential"}, {"c", k.c}, {"alpha", k.alpha}};
        } else {
          return Json{{"kind", "tabulated"}, {"times", number_array_json(k.times())},
                      {"values", number_array_json(k.values())}};
        }
      },
      kernel.variant());
}

MemoryKernel kernel_from_json(const Json& j, const std::string& path) {
  const Json& kind_json = member(j, "kind", path);
  if (!kind_json.is_string()) throw ValidationError(fmt::format("{}: expected a string", join(path, "kind")));
  const std::string kind = kind_json.get<std::string>();
  try {
    if (kind == "zero") {
      require_keys(j, {"kind"}, path);
      return MemoryKernel::zero();
    }
    if (kind == "constant") {
      require_keys(j, {"kind", "value"}, path);
      return MemoryKernel::constant(get_number(j, "value", path));
    }
    if (kind == "linear") {
      require_keys(j, {"kind"}, path);
      return MemoryKernel::linear();
    }
    if (kind == "exponential") {
      require_keys(j, {"kind", "c", "alpha"}, path);
      return MemoryKernel::exponential(get_number(j, "c", path), get_number(j, "alpha", path));
    }
    if (kind == "tabulated") {
      require_keys(j, {"kind", "times", "values"}, path);
      return MemoryKernel::tabulated(number_array(member(j, "times", path), join(path, "times")),
                                     number_array(member(j, "values", path), join(path, "values")));
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ValidationError(fmt::format("{}: {}", path, e.what()));
  }
  throw ValidationError(fmt::format("{}: unknown kernel kind '{}'", join(path, "kind"), kind));
}

Json to_json(const ObservationRegion& region) {
  Json out = Json::array();
  for (const Interval& piece : region.intervals()) {
    Json item = Json::array({piece.lo, piece.hi});
    if (!(piece.closed_lo && piece.closed_hi)) {
      std::string brackets;
      brackets += piece.closed_lo ? '[' : '(';
      brackets += piece.closed_hi ? ']' : ')';
      item.push_back(brackets);
    }
    out.push_back(std::move(item));
  }
  return out;
}

ObservationRegion region_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError(fmt::format("{}: expected an array of intervals", path));
  std::vector<Interval> pieces;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string here = fmt::format("{}[{}]", path, i);
    const Json& item = j[i];
    if (!item.is_array() || item.size() < 2 || item.size() > 3 || !item[0].is_number() || !item[1].is_number()) {
      throw ValidationError(fmt::format("{}: expected [a, b] or [a, b, brackets]", here));
    }
    Interval piece{item[0].get<double>(), item[1].get<double>(), true, true};
    if (!std::isfinite(piece.lo) || !std::isfinite(piece.hi)) {
      throw ValidationError(fmt::format("{}: endpoints must be finite", here));
    }
    if (!(piece.lo < piece.hi)) {
      throw ValidationError(fmt::format("{}: interval [{}, {}] needs a < b", here, piece.lo, piece.hi));
    }
    if (item.size() == 3) {
      const std::string b = item[2].is_string() ? item[2].get<std::string>() : std::string();
      if (b.size() != 2 || (b[0] != '[' && b[0] != '(') || (b[1] != ']' && b[1] != ')')) {
        throw ValidationError(fmt::format("{}[2]: expected one of \"()\", \"[)\", \"(]\", \"[]\"", here));
      }
      piece.closed_lo = b[0] == '[';
      piece.closed_hi = b[1] == ']';
    }
    pieces.push_back(piece);
  }
  return ObservationRegion(std::move(pieces));
}

Json to_json(const SamplingPlan& plan) {
  Json instants = Json::array();
  for (const SamplingInstant& entry : plan.instants()) {
    instants.push_back(Json{{"t", entry.time}, {"region", to_json(entry.region)}});
  }
  return Json{{"instants", std::move(instants)}};
}

SamplingPlan plan_from_json(const Json& j, const std::string& path) {
  require_keys(j, {"instants"}, path);
  const Json& list = member(j, "instants", path);
  const std::string list_path = join(path, "instants");
  if (!list.is_array() || list.empty()) throw ValidationError(fmt::format("{}: expected a nonempty array", list_path));
  std::vector<SamplingInstant> instants;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string here = fmt::format("{}[{}]", list_path, i);
    require_keys(list[i], {"t", "region"}, here);
    const double t = get_number(list[i], "t", here);
    if (!(t > 0.0)) throw ValidationError(fmt::format("{}: sampling time must be positive", join(here, "t")));
    instants.push_back({t, region_from_json(member(list[i], "region", here), join(here, "region"))});
  }
  return SamplingPlan(std::move(instants));
}

Json to_json(const ObservationData& data) {
  Json blocks = Json::array();
  for (const ObservationBlock& block : data.blocks) {
    blocks.push_back(Json{{"t", block.time}, {"xs", number_array_json(block.xs)},
                          {"values", number_array_json(block.values)}});
  }
  return Json{{"plan", to_json(data.plan)},
              {"sigma", data.sigma},
              {"seed", data.seed},
              {"generator", data.generator},
              {"blocks", std::move(blocks)}};
}

ObservationData observation_data_from_json(const Json& j, const std::string& path) {
  require_keys(j, {"plan", "sigma", "seed", "generator", "blocks"}, path);
  ObservationData data{plan_from_json(member(j, "plan", path), join(path, "plan")), 0.0, 0, kNoiseGenerator, {}};
  data.sigma = get_number(j, "sigma", path);
  const Json& seed = member(j, "seed", path);
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
    throw ValidationError(fmt::format("{}: expected a nonnegative integer", join(path, "seed")));
  }
  data.seed = seed.get<std::uint64_t>();
  if (j.contains("generator")) data.generator = j["generator"].get<std::string>();
  const Json& blocks = member(j, "blocks", path);
  if (!blocks.is_array()) throw ValidationError(fmt::format("{}: expected an array", join(path, "blocks")));
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string here = fmt::format("{}.blocks[{}]", path, i);
    require_keys(blocks[i], {"t", "xs", "values"}, here);
    ObservationBlock block{get_number(blocks[i], "t", here),
                           number_array(member(blocks[i], "xs", here), join(here, "xs")),
                           number_array(member(blocks[i], "values", here), join(here, "values"))};
    if (block.xs.size() != block.values.size()) {
      throw ValidationError(fmt::format("{}: xs and values differ in length", here));
    }
    data.blocks.push_back(std::move(block));
  }
  return data;
}

Json to_json(const NodalSet& set) {
  Json out = Json::array();
  for (const NodalPoint& p : set.points) out.push_back(Json{{"t", p.time}, {"flag", to_string(p.kind)}});
  return out;
}

std::string format_number(double value) {
  if (!std::isfinite(value)) return "null";
  if (value == 0.0) return std::signbit(value) ? "-0" : "0";
  return fmt::format("{:.17g}", value);
}

namespace {

void write_json(std::string& out, const Json& v, int depth) {
  const auto indent = [&](int d) { out.append(static_cast<std::size_t>(2 * d), ' '); };
  switch (v.type()) {
    case Json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& item : v.items()) {
        if (!first) out += ",\n";
        first = false;
        indent(depth + 1);
        out += Json(item.key()).dump();
        out += ": ";
        write_json(out, item.value(), depth + 1);
      }
      out += "\n";
      indent(depth);
      out += "}";
      return;
    }
    case Json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      bool scalars = true;
      for (const Json& e : v) scalars = scalars && e.is_primitive();
      if (scalars) {
        out += "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (i) out += ", ";
          write_json(out, v[i], depth + 1);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",\n";
        indent(depth + 1);
        write_json(out, v[i], depth + 1);
      }
      out += "\n";
      indent(depth);
      out += "]";
      return;
    }
    case Json::value_t::number_float:
      out += format_number(v.get<double>());
      return;
    default:
      out += v.dump();
      return;
  }
}

}  // namespace

std::string dump(const Json& value) {
  std::string out;
  write_json(out, value, 0);
  out += "\n";
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string to_csv(const CsvTable& table, const std::string& comment) {
  std::string out;
  if (!comment.empty()) out += "# " + comment + "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i) out += ",";
    out += table.columns[i];
  }
  out += "\n";
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw std::logic_error("CSV row width does not match the header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ",";
      std::visit(
          [&](const auto& cell) {
            using T = std::decay_t<decltype(cell)>;
            if constexpr (std::is_same_v<T, double>) {
              out += std::isfinite(cell) ? format_number(cell) : (std::isnan(cell) ? "nan" : (cell > 0 ? "inf" : "-inf"));
            } else if constexpr (std::is_same_v<T, long long>) {
              out += std::to_string(cell);
            } else {
              out += cell;
            }
          },
          row[i]);
    }
    out += "\n";
  }
  return out;
}

void write_text(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path.string()));
  file.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!file) throw std::runtime_error(fmt::format("failed writing '{}'", path.string()));
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw ValidationError(fmt::format("cannot read '{}'", path.string()));
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return buffer.str();
}

}  // namespace memobs::io
