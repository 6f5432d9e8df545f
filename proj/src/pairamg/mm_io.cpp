#include "pairamg/mm_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pairamg {

namespace {

[[noreturn]] void parse_fail(const std::string& name, long line, const std::string& msg) {
    throw Error(ErrorCode::parse_error,
                name + ":" + std::to_string(line) + ": " + msg);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

CsrMatrix read_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open " + path);
    return read_matrix_market(in, path);
}

CsrMatrix read_matrix_market(std::istream& in, const std::string& name) {
    std::string line;
    long lineno = 0;

    if (!std::getline(in, line)) parse_fail(name, 1, "empty file");
    ++lineno;
    std::istringstream header(line);
    std::string banner, object, format, field, symmetry;
    header >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket") parse_fail(name, lineno, "missing %%MatrixMarket banner");
    object = lower(object);
    format = lower(format);
    field = lower(field);
    symmetry = lower(symmetry);
    if (object != "matrix") parse_fail(name, lineno, "unsupported object '" + object + "'");
    if (format != "coordinate") parse_fail(name, lineno, "only coordinate format is supported");
    const bool pattern = field == "pattern";
    if (field != "real" && field != "integer" && !pattern)
        parse_fail(name, lineno, "unsupported field '" + field + "'");
    const bool symmetric = symmetry == "symmetric";
    const bool skew = symmetry == "skew-symmetric";
    if (!symmetric && !skew && symmetry != "general")
        parse_fail(name, lineno, "unsupported symmetry '" + symmetry + "'");

    // Size line: first non-comment, non-blank line.
    index_t nrows = 0, ncols = 0, nnz_stored = 0;
    while (true) {
        if (!std::getline(in, line)) parse_fail(name, lineno + 1, "missing size line");
        ++lineno;
        if (line.empty() || line[0] == '%') continue;
        std::istringstream ls(line);
        if (!(ls >> nrows >> ncols >> nnz_stored))
            parse_fail(name, lineno, "malformed size line '" + line + "'");
        break;
    }
    if (nrows < 0 || ncols < 0 || nnz_stored < 0)
        parse_fail(name, lineno, "negative dimension in size line");

    std::vector<index_t> rows, cols;
    std::vector<real_t> vals;
    rows.reserve(static_cast<std::size_t>(nnz_stored));
    cols.reserve(static_cast<std::size_t>(nnz_stored));
    vals.reserve(static_cast<std::size_t>(nnz_stored));

    index_t seen = 0;
    while (seen < nnz_stored) {
        if (!std::getline(in, line))
            parse_fail(name, lineno + 1,
                       "unexpected end of file, expected " + std::to_string(nnz_stored) +
                           " entries, got " + std::to_string(seen));
        ++lineno;
        if (line.empty() || line[0] == '%') continue;
        std::istringstream ls(line);
        index_t r = 0, c = 0;
        real_t v = 1.0;
        if (!(ls >> r >> c)) parse_fail(name, lineno, "malformed entry '" + line + "'");
        if (!pattern && !(ls >> v)) parse_fail(name, lineno, "missing value in '" + line + "'");
        if (r < 1 || r > nrows || c < 1 || c > ncols)
            parse_fail(name, lineno,
                       "entry (" + std::to_string(r) + ", " + std::to_string(c) + ") out of bounds");
        rows.push_back(r - 1);
        cols.push_back(c - 1);
        vals.push_back(v);
        if ((symmetric || skew) && r != c) {
            rows.push_back(c - 1);
            cols.push_back(r - 1);
            vals.push_back(skew ? -v : v);
        }
        if (skew && r == c)
            parse_fail(name, lineno, "skew-symmetric file stores a diagonal entry");
        ++seen;
    }

    try {
        return CsrMatrix::from_triplets(nrows, ncols, rows, cols, vals);
    } catch (const Error& e) {
        throw Error(ErrorCode::parse_error, name + ": " + e.what());
    }
}

void write_matrix_market(const std::string& path, const CsrMatrix& A) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io_error, "cannot open " + path + " for writing");
    write_matrix_market(out, A);
}

void write_matrix_market(std::ostream& out, const CsrMatrix& A) {
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << A.nrows << " " << A.ncols << " " << A.nnz() << "\n";
    char buf[64];
    for (index_t i = 0; i < A.nrows; ++i) {
        for (index_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", A.values[k]);
            out << (i + 1) << " " << (A.col_idx[k] + 1) << " " << buf << "\n";
        }
    }
    if (!out) throw Error(ErrorCode::io_error, "write failure");
}

}  // namespace pairamg
