#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "psksdr/error.hpp"
#include "psksdr/sdp.hpp"

namespace psksdr {

namespace {

void write_entries(const SymBlockMatrix& coeffs, std::ostream& out) {
  out << ' ' << coeffs.entries().size();
  for (const auto& e : coeffs.entries()) {
    out << ' ' << e.block << ' ' << e.row << ' ' << e.col << ' ' << e.value;
  }
}

SymBlockMatrix read_entries(std::istringstream& line) {
  std::size_t count = 0;
  if (!(line >> count)) throw Error(ErrorCode::io, "program dump: missing entry count");
  SymBlockMatrix coeffs;
  for (std::size_t i = 0; i < count; ++i) {
    Entry e;
    if (!(line >> e.block >> e.row >> e.col >> e.value)) {
      throw Error(ErrorCode::io, "program dump: truncated entry list");
    }
    coeffs.add(e.block, e.row, e.col, e.value);
  }
  return coeffs;
}

}  // namespace

void write_program_dump(const ConicProgram& program, std::ostream& out) {
  const auto old_precision = out.precision();
  out << std::setprecision(17);
  out << "program " << (program.name.empty() ? "unnamed" : program.name) << '\n';
  out << "blocks";
  for (const auto& cone : program.blocks) {
    out << ' ' << (cone.kind == ConeKind::psd ? "psd" : "nonneg") << ' ' << cone.dim;
  }
  out << '\n' << "objective";
  write_entries(program.objective, out);
  out << '\n';
  for (std::size_t k = 0; k < program.constraints.size(); ++k) {
    out << "constraint " << k << ' ' << program.constraints[k].rhs;
    write_entries(program.constraints[k].coeffs, out);
    out << '\n';
  }
  out.precision(old_precision);
}

ConicProgram read_program_dump(std::istream& in) {
  ConicProgram program;
  std::string raw;
  while (std::getline(in, raw)) {
    if (raw.empty()) continue;
    std::istringstream line(raw);
    std::string tag;
    line >> tag;
    if (tag == "program") {
      line >> program.name;
    } else if (tag == "blocks") {
      std::string kind;
      int dim = 0;
      while (line >> kind >> dim) {
        if (kind == "psd") {
          program.blocks.push_back(psd_cone(dim));
        } else if (kind == "nonneg") {
          program.blocks.push_back(nonneg_cone(dim));
        } else {
          throw Error(ErrorCode::io, "program dump: unknown cone kind " + kind);
        }
      }
    } else if (tag == "objective") {
      program.objective = read_entries(line);
    } else if (tag == "constraint") {
      std::size_t index = 0;
      LinearConstraint con;
      if (!(line >> index >> con.rhs)) throw Error(ErrorCode::io, "program dump: bad constraint header");
      if (index != program.constraints.size()) throw Error(ErrorCode::io, "program dump: constraints out of order");
      con.coeffs = read_entries(line);
      program.constraints.push_back(std::move(con));
    } else {
      throw Error(ErrorCode::io, "program dump: unknown record " + tag);
    }
  }
  program.validate();
  return program;
}

}  // namespace psksdr
