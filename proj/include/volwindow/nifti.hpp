#ifndef VOLWINDOW_NIFTI_HPP
#define VOLWINDOW_NIFTI_HPP

#include <string>

#include "volwindow/volume.hpp"

namespace volwindow {

// Minimal NIfTI-1 single-file codec, little-endian only. Reading accepts
// uint8/int16/int32/float32/float64 payloads (converted to float32 after
// scl_slope/scl_inter) and transparent gzip (.nii.gz, detected by the
// 0x1f 0x8b magic). NIfTI-2 and ANALYZE are rejected.
Volume read_nifti(const std::string& path);

// As read_nifti but yields a binary label grid; non-{0,1} voxel values are a
// format error.
MaskVolume read_nifti_mask(const std::string& path);

// Writes float32 data, sform from the affine (sform_code 1), pixdim from
// spacing. Gzip-compressed when the path ends in ".gz".
void write_nifti(const Volume& v, const std::string& path);

// Writes uint8 data; enforce_binary rejects values > 1 before touching disk.
void write_nifti(const MaskVolume& m, const std::string& path, bool enforce_binary = true);

} // namespace volwindow

#endif
