#include <gk/io.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace gk {

namespace {

constexpr char kMagic[] = "GKMX1";
constexpr std::size_t kMagicLen = 5;

std::vector<std::string> split_tabs(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, '\t')) {
        if (!cell.empty() && cell.back() == '\r') {
            cell.pop_back();
        }
        out.push_back(cell);
    }
    return out;
}

double parse_double(const std::string& text, const std::string& where)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) {
            throw std::invalid_argument(text);
        }
        return v;
    } catch (const std::exception&) {
        throw InputError(where + ": cannot parse '" + text + "' as a number");
    }
}

std::size_t column_of(const std::vector<std::string>& header, const std::string& name, const std::string& path)
{
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    throw InputError(path + ": missing column '" + name + "'");
}

} // namespace

std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError(path + ": cannot open file");
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError(path + ": cannot write file");
    }
    out << content;
}

Matrix read_matrix(const std::string& path)
{
    const std::string raw = read_text_file(path);
    if (raw.size() >= kMagicLen && raw.compare(0, kMagicLen, kMagic) == 0) {
        static_assert(std::endian::native == std::endian::little, "binary matrices assume a little-endian host");
        if (raw.size() < kMagicLen + 16) {
            throw InputError(path + ": truncated binary header");
        }
        std::uint64_t rows = 0;
        std::uint64_t cols = 0;
        std::memcpy(&rows, raw.data() + kMagicLen, 8);
        std::memcpy(&cols, raw.data() + kMagicLen + 8, 8);
        if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20)) {
            throw InputError(path + ": implausible binary matrix shape");
        }
        const std::size_t need = kMagicLen + 16 + rows * cols * 8;
        if (raw.size() != need) {
            throw InputError(path + ": binary payload has " + std::to_string(raw.size()) + " bytes, expected " +
                             std::to_string(need));
        }
        Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
        const char* data = raw.data() + kMagicLen + 16;
        for (std::uint64_t i = 0; i < rows; ++i) {
            for (std::uint64_t j = 0; j < cols; ++j) {
                double v = 0.0;
                std::memcpy(&v, data + 8 * (i * cols + j), 8);
                m(static_cast<Index>(i), static_cast<Index>(j)) = v;
            }
        }
        return m;
    }

    std::istringstream in(raw);
    long long rows = 0;
    long long cols = 0;
    if (!(in >> rows >> cols) || rows < 1 || cols < 1) {
        throw InputError(path + ": first line must be 'rows cols' with positive integers");
    }
    Matrix m(rows, cols);
    std::string tok;
    for (long long i = 0; i < rows; ++i) {
        for (long long j = 0; j < cols; ++j) {
            if (!(in >> tok)) {
                throw InputError(path + ": expected " + std::to_string(rows * cols) + " values, file ended at row " +
                                 std::to_string(i + 1) + ", column " + std::to_string(j + 1));
            }
            m(i, j) = parse_double(tok, path + " row " + std::to_string(i + 1) + " column " + std::to_string(j + 1));
        }
    }
    if (in >> tok) {
        throw InputError(path + ": trailing data after " + std::to_string(rows * cols) + " values");
    }
    return m;
}

void write_matrix_text(const std::string& path, const Matrix& m)
{
    std::ostringstream os;
    os.precision(17);
    os << m.rows() << " " << m.cols() << "\n";
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            os << (j ? " " : "") << m(i, j);
        }
        os << "\n";
    }
    write_text_file(path, os.str());
}

void write_matrix_binary(const std::string& path, const Matrix& m)
{
    std::string raw(kMagic, kMagicLen);
    const auto rows = static_cast<std::uint64_t>(m.rows());
    const auto cols = static_cast<std::uint64_t>(m.cols());
    raw.append(reinterpret_cast<const char*>(&rows), 8);
    raw.append(reinterpret_cast<const char*>(&cols), 8);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            raw.append(reinterpret_cast<const char*>(&v), 8);
        }
    }
    write_text_file(path, raw);
}

SymMatrix read_sym_matrix(const std::string& path)
{
    Matrix m = read_matrix(path);
    try {
        return SymMatrix(std::move(m));
    } catch (const ContractError& e) {
        throw InputError(path + ": " + e.what());
    }
}

SummaryFile read_summary(const std::string& tsv_path, const std::string& sidecar_path)
{
    std::istringstream in(read_text_file(tsv_path));
    std::string line;
    if (!std::getline(in, line)) {
        throw InputError(tsv_path + ": empty file");
    }
    const auto header = split_tabs(line);
    const std::size_t id_col = column_of(header, "feature_id", tsv_path);
    const std::size_t xty_col = column_of(header, "xty", tsv_path);
    SummaryFile out;
    std::vector<double> xty;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto cells = split_tabs(line);
        if (cells.size() != header.size()) {
            throw InputError(tsv_path + " line " + std::to_string(lineno) + ": expected " +
                             std::to_string(header.size()) + " columns");
        }
        out.feature_ids.push_back(cells[id_col]);
        xty.push_back(parse_double(cells[xty_col], tsv_path + " line " + std::to_string(lineno) + " field xty"));
    }
    if (xty.empty()) {
        throw InputError(tsv_path + ": no features");
    }
    out.stats.xty = Eigen::Map<const Vector>(xty.data(), static_cast<Index>(xty.size()));

    std::istringstream side(read_text_file(sidecar_path));
    bool have_yty = false;
    bool have_n = false;
    while (std::getline(side, line)) {
        const auto cells = split_tabs(line);
        if (cells.empty() || cells[0].empty()) {
            continue;
        }
        if (cells.size() != 2) {
            throw InputError(sidecar_path + ": expected 'key<TAB>value' lines");
        }
        const double v = parse_double(cells[1], sidecar_path + " field " + cells[0]);
        if (cells[0] == "yty") {
            out.stats.yty = v;
            have_yty = true;
        } else if (cells[0] == "n") {
            if (v < 1 || v != std::floor(v)) {
                throw InputError(sidecar_path + " field n: must be a positive integer");
            }
            out.stats.n = static_cast<Index>(v);
            have_n = true;
        } else {
            throw InputError(sidecar_path + ": unknown key '" + cells[0] + "'");
        }
    }
    if (!have_yty || !have_n) {
        throw InputError(sidecar_path + ": needs both yty and n");
    }
    if (!(out.stats.yty >= 0.0)) {
        throw InputError(sidecar_path + " field yty: must be nonnegative");
    }
    return out;
}

void write_summary(const std::string& tsv_path, const std::string& sidecar_path, const SummaryFile& summary)
{
    std::ostringstream os;
    os.precision(17);
    os << "feature_id\txty\n";
    for (Index j = 0; j < summary.stats.xty.size(); ++j) {
        const auto k = static_cast<std::size_t>(j);
        os << (k < summary.feature_ids.size() ? summary.feature_ids[k] : "f" + std::to_string(j + 1)) << "\t"
           << summary.stats.xty(j) << "\n";
    }
    write_text_file(tsv_path, os.str());
    std::ostringstream side;
    side.precision(17);
    side << "yty\t" << summary.stats.yty << "\nn\t" << summary.stats.n << "\n";
    write_text_file(sidecar_path, side.str());
}

StudyFile read_study(const std::string& path)
{
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) {
        throw InputError(path + ": empty file");
    }
    const auto header = split_tabs(line);
    const std::size_t id_col = column_of(header, "variant_id", path);
    const std::size_t z_col = column_of(header, "zscore", path);
    const std::size_t n_col = column_of(header, "n", path);
    StudyFile out;
    std::vector<double> z;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto cells = split_tabs(line);
        const std::string where = path + " line " + std::to_string(lineno);
        if (cells.size() != header.size()) {
            throw InputError(where + ": expected " + std::to_string(header.size()) + " columns");
        }
        out.variant_ids.push_back(cells[id_col]);
        z.push_back(parse_double(cells[z_col], where + " field zscore"));
        const double n = parse_double(cells[n_col], where + " field n");
        if (!(n > 0.0)) {
            throw InputError(where + " field n: must be positive");
        }
        if (out.n != 0.0 && n != out.n) {
            throw InputError(where + " field n: sample size must be constant within a study");
        }
        out.n = n;
    }
    if (z.empty()) {
        throw InputError(path + ": no variants");
    }
    out.z = Eigen::Map<const Vector>(z.data(), static_cast<Index>(z.size()));
    return out;
}

AlignedStudies align_studies(const std::vector<StudyFile>& studies)
{
    AlignedStudies out;
    std::unordered_map<std::string, Index> pos;
    for (const auto& s : studies) {
        for (const auto& id : s.variant_ids) {
            if (pos.emplace(id, static_cast<Index>(out.variant_ids.size())).second) {
                out.variant_ids.push_back(id);
            }
        }
    }
    const auto k = static_cast<Index>(studies.size());
    out.z = Matrix::Constant(static_cast<Index>(out.variant_ids.size()), k, std::numeric_limits<double>::quiet_NaN());
    out.n.resize(k);
    for (Index s = 0; s < k; ++s) {
        const auto& st = studies[static_cast<std::size_t>(s)];
        out.n(s) = st.n;
        for (std::size_t i = 0; i < st.variant_ids.size(); ++i) {
            out.z(pos[st.variant_ids[i]], s) = st.z(static_cast<Index>(i));
        }
    }
    return out;
}

} // namespace gk
