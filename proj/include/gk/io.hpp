#pragma once

#include <string>
#include <vector>

#include <gk/meta.hpp>
#include <gk/pipelines.hpp>

namespace gk {

/// Text format: "rows cols" then whitespace-separated values, row-major.
/// Binary format: magic "GKMX1", uint64 rows, uint64 cols, little-endian
/// float64 values, row-major. The format is detected from the magic bytes.
Matrix read_matrix(const std::string& path);
void write_matrix_text(const std::string& path, const Matrix& m);
void write_matrix_binary(const std::string& path, const Matrix& m);

/// read_matrix plus the symmetry check; errors name the file and cell.
SymMatrix read_sym_matrix(const std::string& path);

struct SummaryFile
{
    std::vector<std::string> feature_ids;
    SummaryStats stats;
};

/// TSV with a header containing feature_id and xty, plus a sidecar of
/// "key<TAB>value" lines providing yty and n.
SummaryFile read_summary(const std::string& tsv_path, const std::string& sidecar_path);
void write_summary(const std::string& tsv_path, const std::string& sidecar_path, const SummaryFile& summary);

struct StudyFile
{
    std::vector<std::string> variant_ids;
    Vector z;
    double n = 0.0;
};

/// TSV with columns variant_id, zscore, n (n constant within a study).
StudyFile read_study(const std::string& path);

/// Aligns studies on the union of variant ids (first-seen order); missing
/// entries become NaN.
struct AlignedStudies
{
    std::vector<std::string> variant_ids;
    Matrix z;
    Vector n;
};
AlignedStudies align_studies(const std::vector<StudyFile>& studies);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

} // namespace gk
