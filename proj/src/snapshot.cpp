#include "nnspod/snapshot.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace nnspod {

static_assert(std::endian::native == std::endian::little,
              "snapshot persistence assumes a little-endian host");

namespace {

std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void check_params(const std::vector<double>& params) {
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (!std::isfinite(params[k]))
            throw InvalidInput("SnapshotMatrix: non-finite parameter value");
        if (k > 0 && !(params[k] > params[k - 1]))
            throw InvalidInput("SnapshotMatrix: parameter values must be strictly increasing "
                               "(violated at index " + std::to_string(k) + ")");
    }
}

}  // namespace

SnapshotMatrix::SnapshotMatrix(StructuredGrid grid, DenseMatrix data, std::vector<double> params)
    : grid_(grid), data_(std::move(data)), params_(std::move(params)) {
    if (data_.rows != grid_.cell_count())
        throw InvalidInput("SnapshotMatrix: row count " + std::to_string(data_.rows) +
                           " does not match grid cell count " +
                           std::to_string(grid_.cell_count()));
    if (data_.cols == 0)
        throw InvalidInput("SnapshotMatrix: need at least one snapshot");
    if (params_.size() != data_.cols)
        throw InvalidInput("SnapshotMatrix: parameter count does not match snapshot count");
    check_params(params_);
    for (double v : data_.a)
        if (!std::isfinite(v))
            throw InvalidInput("SnapshotMatrix: non-finite entry");
}

SnapshotMatrix SnapshotMatrix::with_column(std::size_t snap, std::span<const double> values) const {
    if (snap >= n_snapshots())
        throw std::out_of_range("SnapshotMatrix::with_column: snapshot index out of range");
    if (values.size() != n_cells())
        throw InvalidInput("SnapshotMatrix::with_column: value count does not match cell count");
    DenseMatrix d = data_;
    std::copy(values.begin(), values.end(), d.column(snap).begin());
    return SnapshotMatrix(grid_, std::move(d), params_);
}

FeatureView to_features(const SnapshotMatrix& m) {
    return FeatureView(m);
}

// ---------------------------------------------------------------------------
// Binary persistence
// ---------------------------------------------------------------------------

namespace {
constexpr char kMagic[5] = {'S', 'N', 'A', 'P', '1'};

template <typename T>
void write_raw(std::ostream& os, const T* p, std::size_t count) {
    os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(count * sizeof(T)));
}

template <typename T>
void read_raw(std::istream& is, T* p, std::size_t count) {
    is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(count * sizeof(T)));
}
}  // namespace

void save_snapshots(const SnapshotMatrix& m, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw FormatError("save_snapshots: cannot open '" + path.string() + "' for writing");
    os.write(kMagic, sizeof(kMagic));
    const std::uint64_t dims[3] = {m.grid().nx(), m.grid().ny(), m.n_snapshots()};
    write_raw(os, dims, 3);
    const double bounds[4] = {m.grid().x_min(), m.grid().x_max(),
                              m.grid().y_min(), m.grid().y_max()};
    write_raw(os, bounds, 4);
    write_raw(os, m.params().data(), m.params().size());
    write_raw(os, m.data().a.data(), m.data().a.size());
    if (!os)
        throw FormatError("save_snapshots: write failure on '" + path.string() + "'");
}

SnapshotMatrix load_snapshots(const std::filesystem::path& path) {
    std::error_code ec;
    const auto actual_size = std::filesystem::file_size(path, ec);
    if (ec)
        throw FormatError("load_snapshots: cannot stat '" + path.string() + "': " + ec.message());

    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw FormatError("load_snapshots: cannot open '" + path.string() + "'");

    char magic[5];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw FormatError("load_snapshots: '" + path.string() + "' is not a SNAP1 file");

    std::uint64_t dims[3];
    double bounds[4];
    read_raw(is, dims, 3);
    read_raw(is, bounds, 4);
    if (!is)
        throw FormatError("load_snapshots: truncated header in '" + path.string() + "'");

    const std::uint64_t nx = dims[0], ny = dims[1], ns = dims[2];
    if (nx < 2 || ny < 2 || ns == 0)
        throw FormatError("load_snapshots: metadata inconsistency in '" + path.string() +
                          "' (nx=" + std::to_string(nx) + ", ny=" + std::to_string(ny) +
                          ", n_snapshots=" + std::to_string(ns) + ")");
    const std::uint64_t nh = nx * ny;
    const std::uint64_t expected_size =
        sizeof(kMagic) + 3 * sizeof(std::uint64_t) + 4 * sizeof(double) +
        ns * sizeof(double) + nh * ns * sizeof(double);
    if (actual_size != expected_size)
        throw FormatError("load_snapshots: '" + path.string() + "' has " +
                          std::to_string(actual_size) + " bytes, expected " +
                          std::to_string(expected_size));

    StructuredGrid grid(nx, ny, bounds[0], bounds[1], bounds[2], bounds[3]);
    std::vector<double> params(ns);
    read_raw(is, params.data(), ns);
    DenseMatrix data(nh, ns);
    read_raw(is, data.a.data(), data.a.size());
    if (!is)
        throw FormatError("load_snapshots: read failure on '" + path.string() + "'");

    try {
        return SnapshotMatrix(grid, std::move(data), std::move(params));
    } catch (const InvalidInput& e) {
        throw FormatError("load_snapshots: metadata inconsistency in '" + path.string() +
                          "': " + e.what());
    }
}

// ---------------------------------------------------------------------------
// CSV ingestion / export
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& context) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw FormatError("ingest_csv: cannot parse number '" + s + "' in " + context);
    return v;
}

struct CellMatcher {
    const StructuredGrid& grid;
    double tol;

    explicit CellMatcher(const StructuredGrid& g)
        : grid(g), tol(0.25 * std::min(g.dx(), g.dy())) {}

    std::size_t match(double x, double y, const std::string& context) const {
        const double gi = (x - grid.x_min()) / grid.dx() - 0.5;
        const double gj = (y - grid.y_min()) / grid.dy() - 0.5;
        const double ri = std::clamp(std::round(gi), 0.0, static_cast<double>(grid.nx() - 1));
        const double rj = std::clamp(std::round(gj), 0.0, static_cast<double>(grid.ny() - 1));
        const auto i = static_cast<std::size_t>(ri);
        const auto j = static_cast<std::size_t>(rj);
        const Point c = grid.centroid(i, j);
        if (std::hypot(x - c.x, y - c.y) > tol)
            throw FormatError("ingest_csv: coordinate (" + g17(x) + "," + g17(y) +
                              ") in " + context + " matches no centroid within tolerance " +
                              g17(tol));
        return grid.linearize(i, j);
    }
};

/// One snapshot column assembled from scattered (x, y, value) rows.
struct ColumnBuilder {
    std::vector<double> values;
    std::vector<bool> seen;
    std::size_t n_seen = 0;

    explicit ColumnBuilder(std::size_t n) : values(n, 0.0), seen(n, false) {}

    void set(std::size_t cell, double v, const std::string& context) {
        if (seen[cell])
            throw FormatError("ingest_csv: duplicate cell in " + context);
        seen[cell] = true;
        values[cell] = v;
        ++n_seen;
    }

    void finish(const std::string& context) const {
        if (n_seen != values.size())
            throw FormatError("ingest_csv: " + std::to_string(values.size() - n_seen) +
                              " missing cells in " + context);
    }
};

struct NamedSnapshot {
    double time;
    std::filesystem::path path;
};

SnapshotMatrix ingest_narrow_files(const std::vector<NamedSnapshot>& files,
                                   const StructuredGrid& grid) {
    const CellMatcher matcher(grid);
    DenseMatrix data(grid.cell_count(), files.size());
    std::vector<double> params;
    params.reserve(files.size());

    for (std::size_t k = 0; k < files.size(); ++k) {
        const auto& f = files[k];
        params.push_back(f.time);
        std::ifstream is(f.path);
        if (!is)
            throw FormatError("ingest_csv: cannot open '" + f.path.string() + "'");
        std::string line;
        if (!std::getline(is, line))
            throw FormatError("ingest_csv: empty file '" + f.path.string() + "'");
        auto header = split_csv(line);
        if (header.size() != 3 || header[0] != "x" || header[1] != "y" || header[2] != "value")
            throw FormatError("ingest_csv: expected header 'x,y,value' in '" +
                              f.path.string() + "'");
        ColumnBuilder col(grid.cell_count());
        std::size_t line_no = 1;
        while (std::getline(is, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            const std::string context =
                "'" + f.path.filename().string() + "' line " + std::to_string(line_no);
            auto fields = split_csv(line);
            if (fields.size() != 3)
                throw FormatError("ingest_csv: expected 3 fields in " + context);
            const double x = parse_double(fields[0], context);
            const double y = parse_double(fields[1], context);
            const double v = parse_double(fields[2], context);
            col.set(matcher.match(x, y, context), v, context);
        }
        col.finish("'" + f.path.filename().string() + "'");
        std::copy(col.values.begin(), col.values.end(), data.column(k).begin());
    }
    return SnapshotMatrix(grid, std::move(data), std::move(params));
}

SnapshotMatrix ingest_wide_file(const std::filesystem::path& path, const StructuredGrid& grid) {
    const CellMatcher matcher(grid);
    std::ifstream is(path);
    if (!is)
        throw FormatError("ingest_csv: cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(is, line))
        throw FormatError("ingest_csv: empty file '" + path.string() + "'");
    auto header = split_csv(line);
    if (header.size() < 3 || header[0] != "x" || header[1] != "y")
        throw FormatError("ingest_csv: wide CSV header must be 'x,y,<time>,...' in '" +
                          path.string() + "'");
    const std::size_t ns = header.size() - 2;
    std::vector<double> params(ns);
    for (std::size_t k = 0; k < ns; ++k)
        params[k] = parse_double(header[k + 2], "header of '" + path.string() + "'");

    DenseMatrix data(grid.cell_count(), ns);
    std::vector<bool> seen(grid.cell_count(), false);
    std::size_t n_seen = 0;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::string context =
            "'" + path.filename().string() + "' line " + std::to_string(line_no);
        auto fields = split_csv(line);
        if (fields.size() != ns + 2)
            throw FormatError("ingest_csv: expected " + std::to_string(ns + 2) +
                              " fields in " + context);
        const double x = parse_double(fields[0], context);
        const double y = parse_double(fields[1], context);
        const std::size_t cell = matcher.match(x, y, context);
        if (seen[cell])
            throw FormatError("ingest_csv: duplicate cell in " + context);
        seen[cell] = true;
        ++n_seen;
        for (std::size_t k = 0; k < ns; ++k)
            data(cell, k) = parse_double(fields[k + 2], context);
    }
    if (n_seen != grid.cell_count())
        throw FormatError("ingest_csv: " + std::to_string(grid.cell_count() - n_seen) +
                          " missing cells in '" + path.string() + "'");
    return SnapshotMatrix(grid, std::move(data), std::move(params));
}

}  // namespace

SnapshotMatrix ingest_csv(const std::filesystem::path& file_or_dir, const StructuredGrid& grid) {
    if (std::filesystem::is_directory(file_or_dir)) {
        std::vector<NamedSnapshot> files;
        for (const auto& entry : std::filesystem::directory_iterator(file_or_dir)) {
            if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
            const std::string stem = entry.path().stem().string();
            if (stem.rfind("snapshot_", 0) != 0)
                throw FormatError("ingest_csv: unexpected csv file '" + stem +
                                  ".csv' (expected snapshot_<index>_<time>.csv)");
            const auto second_us = stem.find('_', std::string("snapshot_").size());
            if (second_us == std::string::npos)
                throw FormatError("ingest_csv: cannot parse time stamp from '" + stem + ".csv'");
            const double t = parse_double(stem.substr(second_us + 1),
                                          "file name '" + stem + ".csv'");
            files.push_back({t, entry.path()});
        }
        if (files.empty())
            throw FormatError("ingest_csv: no snapshot_*.csv files in '" +
                              file_or_dir.string() + "'");
        std::stable_sort(files.begin(), files.end(),
                         [](const NamedSnapshot& a, const NamedSnapshot& b) {
                             return a.time < b.time;
                         });
        for (std::size_t k = 1; k < files.size(); ++k)
            if (!(files[k].time > files[k - 1].time))
                throw FormatError("ingest_csv: snapshots '" + files[k - 1].path.filename().string() +
                                  "' and '" + files[k].path.filename().string() +
                                  "' violate strictly increasing time stamps");
        return ingest_narrow_files(files, grid);
    }
    if (!std::filesystem::exists(file_or_dir))
        throw FormatError("ingest_csv: '" + file_or_dir.string() + "' does not exist");
    return ingest_wide_file(file_or_dir, grid);
}

void export_csv_dir(const SnapshotMatrix& m, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (std::size_t k = 0; k < m.n_snapshots(); ++k) {
        const auto path = dir / ("snapshot_" + std::to_string(k) + "_" +
                                 g17(m.params()[k]) + ".csv");
        std::ofstream os(path);
        if (!os)
            throw FormatError("export_csv_dir: cannot open '" + path.string() + "'");
        os << "x,y,value\n";
        const auto col = m.column(k);
        for (std::size_t cell = 0; cell < m.n_cells(); ++cell) {
            const Point c = m.grid().centroid(cell);
            os << g17(c.x) << ',' << g17(c.y) << ',' << g17(col[cell]) << '\n';
        }
    }
}

}  // namespace nnspod
