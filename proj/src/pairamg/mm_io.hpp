#pragma once

#include <iosfwd>
#include <string>

#include "pairamg/csr.hpp"

namespace pairamg {

/// Reads a MatrixMarket coordinate file (1-based indices). Symmetric and
/// skew-symmetric storage is expanded to full storage; pattern entries read
/// as 1.0. Parse failures report the offending line number.
CsrMatrix read_matrix_market(const std::string& path);
CsrMatrix read_matrix_market(std::istream& in, const std::string& name = "<stream>");

/// Writes coordinate real general storage with full precision.
void write_matrix_market(const std::string& path, const CsrMatrix& A);
void write_matrix_market(std::ostream& out, const CsrMatrix& A);

}  // namespace pairamg
