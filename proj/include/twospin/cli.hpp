#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "twospin/common.hpp"
#include "twospin/model.hpp"

namespace twospin::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "twospin.result/1";
inline constexpr const char* kVersion = "0.1.0";

// Input errors; the message names the source and line or field.
class ParseError : public Error {
public:
    using Error::Error;
};

// Text form "n m" then m lines "u v", or JSON {"n": ..., "edges": [[u, v], ...]}.
Graph parse_graph(const std::string& text, const std::string& source = "<graph>");
// JSON {"beta": ..., "gamma": ..., "lambda": ... | "fields": [...]}; beta and gamma default to hardcore.
TwoSpinSystem parse_system(const std::string& text, Graph graph, const std::string& source = "<system>");
// "cycle:6", "path:5", "complete:4", "kab:3,3", "star:4", "empty:3", "edge", "random:8,0.4".
Graph family_graph(const std::string& family, std::uint64_t seed = 1);
// "0:+,3:-" or "0:1,3:-1".
Pinning parse_pinning(const std::string& text);

struct Record {
    std::string command;
    Json input = Json::object();
    Json metrics = Json::object();
    Json witnesses = Json::object();
    Verdict verdict = Verdict::Pass;
    double wall_ms = 0.0;
};

Json to_json(const Record& r, bool with_wall_time = true);
// Scalar columns of a record, in a fixed order: command, verdict, input.*, metrics.*, wall_ms.
std::vector<std::pair<std::string, std::string>> csv_columns(const Record& r, bool with_wall_time = true);

// Exit codes: 0 pass, 1 violation, 2 usage or input error, 3 budget exhausted.
int exit_code(Verdict v);

// Full command-line entry point; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace twospin::cli
