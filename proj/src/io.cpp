#include "cdtopt/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "cdtopt/error.hpp"

namespace cdtopt::io {

namespace fs = std::filesystem;

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

Graymap density_image(const VectorXd& rho, const fem::Mesh& mesh, int layer) {
  if (rho.size() != mesh.num_elements())
    throw Error(ErrorCode::DimensionMismatch, "density length does not match the mesh");
  const int layers = mesh.dim() == 3 ? mesh.nelz() : 1;
  if (layer < 0 || layer >= layers) throw Error(ErrorCode::Usage, "layer out of range");

  Graymap img;
  img.width = mesh.nelx();
  img.height = mesh.nely();
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  for (int iy = 0; iy < img.height; ++iy) {
    for (int ix = 0; ix < img.width; ++ix) {
      const double r = rho[mesh.element(ix, iy, layer)];
      if (!std::isfinite(r) || r < 0.0 || r > 1.0)
        throw Error(ErrorCode::NonFinite, "density outside [0, 1]",
                    static_cast<std::size_t>(mesh.element(ix, iy, layer)), r);
      img.pixels[static_cast<std::size_t>(iy) * img.width + ix] =
          static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - r)));
    }
  }
  return img;
}

void write_pgm(const Graymap& image, const fs::path& path, PgmFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << (format == PgmFormat::Binary ? "P5" : "P2") << '\n'
      << image.width << ' ' << image.height << '\n'
      << 255 << '\n';
  if (format == PgmFormat::Binary) {
    out.write(reinterpret_cast<const char*>(image.pixels.data()),
              static_cast<std::streamsize>(image.pixels.size()));
  } else {
    for (int r = 0; r < image.height; ++r) {
      for (int c = 0; c < image.width; ++c) {
        if (c) out << ' ';
        out << static_cast<int>(image.pixels[static_cast<std::size_t>(r) * image.width + c]);
      }
      out << '\n';
    }
  }
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string header_token(std::istream& in) {
  std::string token;
  char c;
  while (in.get(c)) {
    if (c == '#') {
      in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      if (!token.empty()) break;
    } else {
      token.push_back(c);
    }
  }
  return token;
}

}  // namespace

Graymap read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  const auto fail = [&](const std::string& why) {
    return Error(ErrorCode::Io, why + ": " + path.string());
  };
  const std::string magic = header_token(in);
  if (magic != "P5" && magic != "P2") throw fail("not a PGM file");
  Graymap img;
  int maxval = 0;
  try {
    img.width = std::stoi(header_token(in));
    img.height = std::stoi(header_token(in));
    maxval = std::stoi(header_token(in));
  } catch (const std::exception&) {
    throw fail("malformed PGM header");
  }
  if (img.width <= 0 || img.height <= 0 || maxval != 255) throw fail("unsupported PGM header");
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  if (magic == "P5") {
    in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) throw fail("truncated PGM data");
  } else {
    for (auto& p : img.pixels) {
      int v = -1;
      if (!(in >> v) || v < 0 || v > 255) throw fail("bad PGM sample");
      p = static_cast<std::uint8_t>(v);
    }
  }
  return img;
}

std::vector<fs::path> write_density_pgm(const VectorXd& rho, const fem::Mesh& mesh, const fs::path& path,
                                        PgmFormat format) {
  std::vector<fs::path> written;
  if (mesh.dim() == 2) {
    write_pgm(density_image(rho, mesh), path, format);
    written.push_back(path);
    return written;
  }
  for (int k = 0; k < mesh.nelz(); ++k) {
    fs::path layer = path;
    layer.replace_filename(path.stem().string() + "_z" + std::to_string(k) + path.extension().string());
    write_pgm(density_image(rho, mesh, k), layer, format);
    written.push_back(layer);
  }
  return written;
}

void write_runrecord_csv(std::ostream& out, const driver::RunRecord& record) {
  out << kRunRecordHeader << '\n';
  for (const auto& e : record.entries) {
    out << e.gamma << ',' << e.inner_iters << ',' << format_number(e.volume) << ','
        << format_number(e.compliance) << ',' << format_number(e.strain_energy) << ','
        << format_number(e.P_u) << ',' << format_number(e.P_dual) << ','
        << format_number(e.elapsed_ms) << '\n';
  }
}

namespace {

template <typename Fn>
void write_file(const fs::path& path, Fn&& fill) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  fill(out);
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace

void write_runrecord_csv(const driver::RunRecord& record, const fs::path& path) {
  write_file(path, [&](std::ostream& out) { write_runrecord_csv(out, record); });
}

void write_table_csv(std::ostream& out, const std::vector<std::string>& header,
                     const Eigen::MatrixXd& rows) {
  if (static_cast<Eigen::Index>(header.size()) != rows.cols())
    throw Error(ErrorCode::DimensionMismatch, "header and table widths differ");
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c) out << (c ? "," : "") << format_number(rows(r, c));
    out << '\n';
  }
}

void write_table_csv(const std::vector<std::string>& header, const Eigen::MatrixXd& rows,
                     const fs::path& path) {
  write_file(path, [&](std::ostream& out) { write_table_csv(out, header, rows); });
}

}  // namespace cdtopt::io
