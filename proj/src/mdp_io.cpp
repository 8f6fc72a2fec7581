#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "kspin/error.hpp"
#include "kspin/mdp.hpp"

namespace kspin {
namespace {

using nlohmann::json;

void write_number(std::ostream& out, double value) {
  if (!std::isfinite(value)) {
    out << "null";
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  out << buf;
}

void write_tensor(std::ostream& out, const Mdp& mdp, const std::vector<double>& data) {
  const std::size_t n = mdp.num_states();
  const std::size_t m = mdp.num_actions();
  out << "[\n";
  for (std::size_t s = 0; s < n; ++s) {
    out << "    [";
    for (std::size_t a = 0; a < m; ++a) {
      out << (a ? ", [" : "[");
      for (std::size_t t = 0; t < n; ++t) {
        if (t) out << ", ";
        write_number(out, data[(s * m + a) * n + t]);
      }
      out << ']';
    }
    out << (s + 1 < n ? "],\n" : "]\n");
  }
  out << "  ]";
}

const json& require_field(const json& doc, const char* field) {
  auto it = doc.find(field);
  if (it == doc.end()) throw ParseError(std::string("missing field \"") + field + "\"");
  return *it;
}

std::size_t read_dimension(const json& doc, const char* field) {
  const json& v = require_field(doc, field);
  if (!v.is_number_unsigned() || v.get<std::size_t>() == 0) {
    throw ParseError(std::string("field \"") + field + "\" must be a positive integer");
  }
  return v.get<std::size_t>();
}

std::vector<double> read_tensor(const json& doc, const char* field, std::size_t n, std::size_t m) {
  const json& t = require_field(doc, field);
  auto where = [&](std::initializer_list<std::size_t> idx) {
    std::string path = field;
    for (auto i : idx) path += "[" + std::to_string(i) + "]";
    return path;
  };
  auto expect_array = [&](const json& node, std::size_t len, const std::string& path) {
    if (!node.is_array() || node.size() != len) {
      throw ParseError(path + ": expected an array of " + std::to_string(len) + " entries");
    }
  };
  expect_array(t, n, field);
  std::vector<double> out;
  out.reserve(n * m * n);
  for (std::size_t s = 0; s < n; ++s) {
    expect_array(t[s], m, where({s}));
    for (std::size_t a = 0; a < m; ++a) {
      expect_array(t[s][a], n, where({s, a}));
      for (std::size_t u = 0; u < n; ++u) {
        const json& x = t[s][a][u];
        if (!x.is_number()) throw ParseError(where({s, a, u}) + ": expected a number");
        out.push_back(x.get<double>());
      }
    }
  }
  return out;
}

}  // namespace

std::string save_mdp(const Mdp& mdp) {
  std::ostringstream out;
  out << "{\n";
  if (!mdp.name().empty()) out << "  \"name\": " << json(mdp.name()).dump() << ",\n";
  out << "  \"num_states\": " << mdp.num_states() << ",\n";
  out << "  \"num_actions\": " << mdp.num_actions() << ",\n";
  out << "  \"discount\": ";
  write_number(out, mdp.discount());
  out << ",\n  \"transition\": ";
  write_tensor(out, mdp, mdp.transition());
  out << ",\n  \"reward\": ";
  write_tensor(out, mdp, mdp.reward());
  out << "\n}\n";
  return out.str();
}

Mdp load_mdp(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("MDP document: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("MDP document must be a JSON object");

  const std::size_t n = read_dimension(doc, "num_states");
  const std::size_t m = read_dimension(doc, "num_actions");
  const json& g = require_field(doc, "discount");
  if (!g.is_number()) throw ParseError("field \"discount\" must be a number");
  std::string name;
  if (auto it = doc.find("name"); it != doc.end()) {
    if (!it->is_string()) throw ParseError("field \"name\" must be a string");
    name = it->get<std::string>();
  }
  Mdp mdp(n, m, read_tensor(doc, "transition", n, m), read_tensor(doc, "reward", n, m), g.get<double>(),
          std::move(name));
  require_valid(mdp);
  return mdp;
}

Mdp load_mdp_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open MDP document " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_mdp(buffer.str());
}

void save_mdp_file(const Mdp& mdp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << save_mdp(mdp);
}

}  // namespace kspin
