#ifndef CDTOPT_IO_HPP
#define CDTOPT_IO_HPP

// Density images and CSV output. Numbers are written with 12 significant
// digits and '\n' line ends.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cdtopt/driver.hpp"

namespace cdtopt::io {

using fem::VectorXd;

enum class PgmFormat { Binary, Ascii };  // P5, P2

struct Graymap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, top row first
};

std::string format_number(double value);

// round(255 (1 - rho)) per element of one z-layer, rows top to bottom
// (mesh row iy = 0 first), so solid is black.
Graymap density_image(const VectorXd& rho, const fem::Mesh& mesh, int layer = 0);

void write_pgm(const Graymap& image, const std::filesystem::path& path,
               PgmFormat format = PgmFormat::Binary);
Graymap read_pgm(const std::filesystem::path& path);

// One file for a 2-D mesh; for 3-D one file per layer named <stem>_z<k><ext>.
// Returns the paths written.
std::vector<std::filesystem::path> write_density_pgm(const VectorXd& rho, const fem::Mesh& mesh,
                                                     const std::filesystem::path& path,
                                                     PgmFormat format = PgmFormat::Binary);

inline constexpr const char* kRunRecordHeader =
    "gamma,inner_iters,volume,compliance,strain_energy,P_u,P_dual,elapsed_ms";

void write_runrecord_csv(std::ostream& out, const driver::RunRecord& record);
void write_runrecord_csv(const driver::RunRecord& record, const std::filesystem::path& path);

// Header line then one row per matrix row.
void write_table_csv(std::ostream& out, const std::vector<std::string>& header,
                     const Eigen::MatrixXd& rows);
void write_table_csv(const std::vector<std::string>& header, const Eigen::MatrixXd& rows,
                     const std::filesystem::path& path);

}  // namespace cdtopt::io

#endif  // CDTOPT_IO_HPP
