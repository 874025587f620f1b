#include "volwindow/nifti.hpp"

#include <zlib.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <vector>

#include "volwindow/errors.hpp"
#include "volwindow/log.hpp"

namespace volwindow {

static_assert(std::endian::native == std::endian::little,
              "the codec assumes a little-endian host");

namespace {

// nifti1.h layout, 348 bytes. Field offsets in comments.
#pragma pack(push, 1)
struct Nifti1Header {
    std::int32_t sizeof_hdr;    //   0: 348
    char data_type[10];         //   4
    char db_name[18];           //  14
    std::int32_t extents;       //  32
    std::int16_t session_error; //  36
    char regular;               //  38
    char dim_info;              //  39
    std::int16_t dim[8];        //  40
    float intent_p1;            //  56
    float intent_p2;            //  60
    float intent_p3;            //  64
    std::int16_t intent_code;   //  68
    std::int16_t datatype;      //  70
    std::int16_t bitpix;        //  72
    std::int16_t slice_start;   //  74
    float pixdim[8];            //  76
    float vox_offset;           // 108
    float scl_slope;            // 112
    float scl_inter;            // 116
    std::int16_t slice_end;     // 120
    char slice_code;            // 122
    char xyzt_units;            // 123
    float cal_max;              // 124
    float cal_min;              // 128
    float slice_duration;       // 132
    float toffset;              // 136
    std::int32_t glmax;         // 140
    std::int32_t glmin;         // 144
    char descrip[80];           // 148
    char aux_file[24];          // 228
    std::int16_t qform_code;    // 252
    std::int16_t sform_code;    // 254
    float quatern_b;            // 256
    float quatern_c;            // 260
    float quatern_d;            // 264
    float qoffset_x;            // 268
    float qoffset_y;            // 272
    float qoffset_z;            // 276
    float srow_x[4];            // 280
    float srow_y[4];            // 296
    float srow_z[4];            // 312
    char intent_name[16];       // 328
    char magic[4];              // 344
};
#pragma pack(pop)
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be 348 bytes");
static_assert(offsetof(Nifti1Header, dim) == 40);
static_assert(offsetof(Nifti1Header, datatype) == 70);
static_assert(offsetof(Nifti1Header, pixdim) == 76);
static_assert(offsetof(Nifti1Header, vox_offset) == 108);
static_assert(offsetof(Nifti1Header, scl_slope) == 112);
static_assert(offsetof(Nifti1Header, qform_code) == 252);
static_assert(offsetof(Nifti1Header, sform_code) == 254);
static_assert(offsetof(Nifti1Header, srow_x) == 280);
static_assert(offsetof(Nifti1Header, magic) == 344);

constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtInt32 = 8;
constexpr std::int16_t kDtFloat32 = 16;
constexpr std::int16_t kDtFloat64 = 64;

int bytes_per_voxel(std::int16_t datatype) {
    switch (datatype) {
        case kDtUint8: return 1;
        case kDtInt16: return 2;
        case kDtInt32: return 4;
        case kDtFloat32: return 4;
        case kDtFloat64: return 8;
        default: return 0;
    }
}

std::vector<char> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open file: " + path);
    char magic[2] = {0, 0};
    in.read(magic, 2);
    bool gz = in.gcount() == 2 && static_cast<unsigned char>(magic[0]) == 0x1f &&
              static_cast<unsigned char>(magic[1]) == 0x8b;
    in.close();

    std::vector<char> bytes;
    if (gz) {
        gzFile f = gzopen(path.c_str(), "rb");
        if (f == nullptr) throw io_error("cannot open gzip file: " + path);
        char buf[1 << 16];
        int n;
        while ((n = gzread(f, buf, sizeof(buf))) > 0)
            bytes.insert(bytes.end(), buf, buf + n);
        bool ok = n == 0;
        gzclose(f);
        if (!ok) throw io_error("gzip decompression failed: " + path);
    } else {
        std::ifstream f(path, std::ios::binary | std::ios::ate);
        auto size = f.tellg();
        f.seekg(0);
        bytes.resize(static_cast<std::size_t>(size));
        f.read(bytes.data(), size);
        if (!f) throw io_error("read failed: " + path);
    }
    return bytes;
}

Mat4 affine_from_quaternion(const Nifti1Header& h) {
    double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
    double a2 = 1.0 - (b * b + c * c + d * d);
    double a = a2 > 0.0 ? std::sqrt(a2) : 0.0;
    double qfac = h.pixdim[0] < 0.0f ? -1.0 : 1.0;
    double sx = h.pixdim[1], sy = h.pixdim[2], sz = h.pixdim[3] * qfac;
    Mat4 m = mat4_identity();
    m[0][0] = (a * a + b * b - c * c - d * d) * sx;
    m[0][1] = (2 * b * c - 2 * a * d) * sy;
    m[0][2] = (2 * b * d + 2 * a * c) * sz;
    m[1][0] = (2 * b * c + 2 * a * d) * sx;
    m[1][1] = (a * a + c * c - b * b - d * d) * sy;
    m[1][2] = (2 * c * d - 2 * a * b) * sz;
    m[2][0] = (2 * b * d - 2 * a * c) * sx;
    m[2][1] = (2 * c * d + 2 * a * b) * sy;
    m[2][2] = (a * a + d * d - b * b - c * c) * sz;
    m[0][3] = h.qoffset_x;
    m[1][3] = h.qoffset_y;
    m[2][3] = h.qoffset_z;
    return m;
}

struct ParsedFile {
    std::array<int, 3> shape;
    std::array<double, 3> spacing;
    Mat4 affine;
    std::vector<float> values;
};

ParsedFile parse_nifti(const std::string& path) {
    std::vector<char> bytes = read_file_bytes(path);
    if (bytes.size() < sizeof(Nifti1Header))
        throw io_error("truncated NIfTI header: " + path);

    Nifti1Header h;
    std::memcpy(&h, bytes.data(), sizeof(h));

    if (h.sizeof_hdr != 348) {
        if (h.sizeof_hdr == 540)
            throw format_error("NIfTI-2 is not supported: " + path);
        throw format_error("not a NIfTI-1 file (sizeof_hdr=" + std::to_string(h.sizeof_hdr) +
                           "; byte-swapped or ANALYZE input is not supported): " + path);
    }
    if (std::memcmp(h.magic, "n+1", 4) != 0) {
        if (std::memcmp(h.magic, "ni1", 4) == 0)
            throw format_error("two-file NIfTI (.hdr/.img) is not supported: " + path);
        throw format_error("missing NIfTI-1 magic \"n+1\": " + path);
    }
    if (h.dim[0] != 3)
        throw shape_error("expected a 3-D volume, got dim[0]=" + std::to_string(h.dim[0]) +
                          ": " + path);
    int bpv = bytes_per_voxel(h.datatype);
    if (bpv == 0)
        throw format_error("unsupported NIfTI datatype code " + std::to_string(h.datatype) +
                           ": " + path);

    ParsedFile out;
    for (int i = 0; i < 3; ++i) {
        if (h.dim[i + 1] <= 0)
            throw format_error("non-positive dim[" + std::to_string(i + 1) + "]: " + path);
        out.shape[i] = h.dim[i + 1];
        if (!(h.pixdim[i + 1] > 0.0f) || !std::isfinite(h.pixdim[i + 1]))
            throw format_error("non-positive pixdim on axis " + std::to_string(i) + ": " + path);
        out.spacing[i] = h.pixdim[i + 1];
    }

    if (h.sform_code > 0) {
        Mat4 m = mat4_identity();
        for (int j = 0; j < 4; ++j) {
            m[0][j] = h.srow_x[j];
            m[1][j] = h.srow_y[j];
            m[2][j] = h.srow_z[j];
        }
        out.affine = m;
    } else if (h.qform_code > 0) {
        out.affine = affine_from_quaternion(h);
    } else {
        log_warn("no sform/qform in " + path + "; synthesizing affine from pixdim");
        out.affine = mat4_identity();
        for (int i = 0; i < 3; ++i) out.affine[i][i] = out.spacing[i];
    }

    // Trust the affine geometry when pixdim disagrees with it.
    for (int i = 0; i < 3; ++i) {
        double n = affine_column_norm(out.affine, i);
        if (n > 0.0 && std::abs(n - out.spacing[i]) > 1e-4 * out.spacing[i]) {
            log_warn("pixdim disagrees with affine column norm in " + path +
                     "; using column norms as spacing");
            for (int k = 0; k < 3; ++k) out.spacing[k] = affine_column_norm(out.affine, k);
            break;
        }
    }

    std::int64_t n = static_cast<std::int64_t>(out.shape[0]) * out.shape[1] * out.shape[2];
    std::int64_t offset = static_cast<std::int64_t>(h.vox_offset);
    if (offset < 348) throw format_error("vox_offset below header size: " + path);
    if (static_cast<std::int64_t>(bytes.size()) < offset + n * bpv)
        throw io_error("truncated NIfTI data section: " + path);

    const char* p = bytes.data() + offset;
    out.values.resize(static_cast<std::size_t>(n));
    switch (h.datatype) {
        case kDtUint8:
            for (std::int64_t i = 0; i < n; ++i)
                out.values[i] = static_cast<float>(static_cast<unsigned char>(p[i]));
            break;
        case kDtInt16: {
            std::vector<std::int16_t> raw(n);
            std::memcpy(raw.data(), p, n * 2);
            for (std::int64_t i = 0; i < n; ++i) out.values[i] = raw[i];
            break;
        }
        case kDtInt32: {
            std::vector<std::int32_t> raw(n);
            std::memcpy(raw.data(), p, n * 4);
            for (std::int64_t i = 0; i < n; ++i) out.values[i] = static_cast<float>(raw[i]);
            break;
        }
        case kDtFloat32:
            std::memcpy(out.values.data(), p, n * 4);
            break;
        case kDtFloat64: {
            std::vector<double> raw(n);
            std::memcpy(raw.data(), p, n * 8);
            for (std::int64_t i = 0; i < n; ++i) out.values[i] = static_cast<float>(raw[i]);
            break;
        }
    }

    bool nontrivial_scl = h.scl_slope != 0.0f && (h.scl_slope != 1.0f || h.scl_inter != 0.0f);
    if (nontrivial_scl)
        for (auto& v : out.values) v = v * h.scl_slope + h.scl_inter;

    return out;
}

void write_bytes(const std::string& path, const std::vector<char>& bytes) {
    bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
    if (gz) {
        gzFile f = gzopen(path.c_str(), "wb");
        if (f == nullptr) throw io_error("cannot open for writing: " + path);
        std::size_t written = 0;
        while (written < bytes.size()) {
            unsigned chunk = static_cast<unsigned>(
                std::min<std::size_t>(bytes.size() - written, 1u << 20));
            int n = gzwrite(f, bytes.data() + written, chunk);
            if (n <= 0) {
                gzclose(f);
                throw io_error("gzip write failed: " + path);
            }
            written += static_cast<std::size_t>(n);
        }
        if (gzclose(f) != Z_OK) throw io_error("gzip close failed: " + path);
    } else {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw io_error("cannot open for writing: " + path);
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw io_error("write failed: " + path);
    }
}

template <typename T>
Nifti1Header make_header(const Grid<T>& g, std::int16_t datatype, int bpv) {
    Nifti1Header h;
    std::memset(&h, 0, sizeof(h));
    h.sizeof_hdr = 348;
    h.regular = 'r';
    h.dim[0] = 3;
    for (int i = 0; i < 3; ++i) h.dim[i + 1] = static_cast<std::int16_t>(g.shape[i]);
    for (int i = 4; i < 8; ++i) h.dim[i] = 1;
    h.datatype = datatype;
    h.bitpix = static_cast<std::int16_t>(bpv * 8);
    h.pixdim[0] = 1.0f;
    for (int i = 0; i < 3; ++i) h.pixdim[i + 1] = static_cast<float>(g.spacing[i]);
    for (int i = 4; i < 8; ++i) h.pixdim[i] = 1.0f;
    h.vox_offset = 352.0f;
    h.scl_slope = 1.0f;
    h.scl_inter = 0.0f;
    h.xyzt_units = 2; // NIFTI_UNITS_MM
    h.sform_code = 1;
    h.qform_code = 0;
    for (int j = 0; j < 4; ++j) {
        h.srow_x[j] = static_cast<float>(g.affine[0][j]);
        h.srow_y[j] = static_cast<float>(g.affine[1][j]);
        h.srow_z[j] = static_cast<float>(g.affine[2][j]);
    }
    std::memcpy(h.magic, "n+1", 4);
    return h;
}

template <typename T>
std::vector<char> serialize(const Grid<T>& g, std::int16_t datatype) {
    int bpv = bytes_per_voxel(datatype);
    Nifti1Header h = make_header(g, datatype, bpv);
    std::vector<char> bytes(352 + g.data.size() * sizeof(T), 0);
    std::memcpy(bytes.data(), &h, sizeof(h));
    // bytes 348..351 stay zero: no header extension
    std::memcpy(bytes.data() + 352, g.data.data(), g.data.size() * sizeof(T));
    return bytes;
}

} // namespace

std::string orientation_code_of(const Mat4& affine) {
    // Greedy dominant-axis assignment on the normalized direction matrix.
    double dir[3][3];
    for (int c = 0; c < 3; ++c) {
        double n = affine_column_norm(affine, c);
        for (int r = 0; r < 3; ++r) dir[r][c] = n > 0.0 ? affine[r][c] / n : 0.0;
    }
    const char pos[3] = {'R', 'A', 'S'};
    const char neg[3] = {'L', 'P', 'I'};
    char code[4] = {'?', '?', '?', '\0'};
    bool row_used[3] = {false, false, false};
    bool col_used[3] = {false, false, false};
    for (int step = 0; step < 3; ++step) {
        int br = -1, bc = -1;
        double best = -1.0;
        for (int r = 0; r < 3; ++r) {
            if (row_used[r]) continue;
            for (int c = 0; c < 3; ++c) {
                if (col_used[c]) continue;
                if (std::abs(dir[r][c]) > best) {
                    best = std::abs(dir[r][c]);
                    br = r;
                    bc = c;
                }
            }
        }
        row_used[br] = true;
        col_used[bc] = true;
        code[bc] = dir[br][bc] >= 0.0 ? pos[br] : neg[br];
    }
    return std::string(code);
}

Volume read_nifti(const std::string& path) {
    ParsedFile f = parse_nifti(path);
    Volume v;
    v.shape = f.shape;
    v.spacing = f.spacing;
    v.affine = f.affine;
    v.orientation_code = orientation_code_of(f.affine);
    v.data = std::move(f.values);
    v.validate();
    return v;
}

MaskVolume read_nifti_mask(const std::string& path) {
    ParsedFile f = parse_nifti(path);
    MaskVolume m;
    m.shape = f.shape;
    m.spacing = f.spacing;
    m.affine = f.affine;
    m.orientation_code = orientation_code_of(f.affine);
    m.data.resize(f.values.size());
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        float v = f.values[i];
        if (v != 0.0f && v != 1.0f)
            throw format_error("mask voxel value " + std::to_string(v) +
                               " is not binary: " + path);
        m.data[i] = v != 0.0f ? 1 : 0;
    }
    m.validate();
    return m;
}

void write_nifti(const Volume& v, const std::string& path) {
    v.validate();
    write_bytes(path, serialize(v, kDtFloat32));
}

void write_nifti(const MaskVolume& m, const std::string& path, bool enforce_binary) {
    m.validate();
    if (enforce_binary) require_binary(m, "write_nifti");
    write_bytes(path, serialize(m, kDtUint8));
}

} // namespace volwindow
