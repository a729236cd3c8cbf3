#pragma once

#include <iosfwd>
#include <string>

#include "dust/problem.hpp"

namespace dust {

/// Versioned plain-text instance format.
///
///   dust-instance v1
///   nodes <N>
///   coupling <p>
///   node <i>
///   set box <d> | set ball <d> | set capped_box <d> <min_total>
///   <lo row> / <center row>
///   <hi row> / radius <r>
///   A <rows> <cols>
///   <row-major CSV rows>
///   b
///   <CSV row>
///   feasible
///   <CSV row>
///   ...                         (one node block per node)
///   slater <margin>             (optional, followed by N witness rows)
///   cost <family>
///   <family body>
///   end
///
/// Numbers are written as the shortest round-trip decimal, so
/// read(write(inst)) reproduces every double exactly.
void write_instance(std::ostream& out, const ProblemInstance& inst);
std::string instance_to_string(const ProblemInstance& inst);

/// Throws std::invalid_argument with the offending line number on any
/// syntax or validation error.
ProblemInstance read_instance(std::istream& in);
ProblemInstance load_instance(const std::string& path);

}  // namespace dust
