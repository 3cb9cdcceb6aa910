"""NIfTI-1 reader/writer.

Reads single-file (magic ``n+1``) and header/image pairs (magic ``ni1``),
plain or gzip-compressed, little- or big-endian. Writes single-file,
little-endian, with the affine carried in the sform rows. The grid affine is
taken from the sform when its code is positive, else the qform quaternion,
else a diagonal fallback from pixdim; spacing always derives from the chosen
affine's column norms so geometry stays self-consistent.
"""

from __future__ import annotations

import gzip
import math
import struct
from pathlib import Path

import numpy as np

from .errors import ContractError, DimensionalityError, FormatError, UnsupportedTypeError
from .volume import Grid, LabelMap, Volume

_HEADER_SIZE = 348
_MAGIC_SINGLE = b"n+1\x00"
_MAGIC_PAIR = b"ni1\x00"

_DTYPE_BY_CODE = {
    2: np.uint8,
    4: np.int16,
    8: np.int32,
    16: np.float32,
    64: np.float64,
    256: np.int8,
    512: np.uint16,
    768: np.uint32,
    1024: np.int64,
    1280: np.uint64,
}

_CODE_BY_DTYPE = {np.dtype(v): k for k, v in _DTYPE_BY_CODE.items()}


def _read_bytes(path: Path) -> bytes:
    with open(path, "rb") as fh:
        head = fh.read(2)
        fh.seek(0)
        if head == b"\x1f\x8b":
            with gzip.open(fh) as gz:
                return gz.read()
        return fh.read()


def _img_sibling(path: Path) -> Path:
    name = path.name
    for suffix, repl in ((".hdr.gz", ".img"), (".hdr", ".img")):
        if name.endswith(suffix):
            stem = name[: -len(suffix)]
            for candidate in (path.with_name(stem + repl), path.with_name(stem + repl + ".gz")):
                if candidate.exists():
                    return candidate
            raise FormatError(f"no image file found next to header {path}")
    raise FormatError(f"paired-file magic but {path} is not a .hdr file")


def _quaternion_affine(
    quatern: tuple[float, float, float],
    qoffset: tuple[float, float, float],
    pixdim: tuple[float, ...],
) -> np.ndarray:
    b, c, d = (float(q) for q in quatern)
    a_sq = 1.0 - (b * b + c * c + d * d)
    a = math.sqrt(a_sq) if a_sq > 0 else 0.0
    rot = np.array(
        [
            [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
            [2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)],
            [2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - b * b - c * c],
        ]
    )
    qfac = -1.0 if pixdim[0] < 0 else 1.0
    scale = np.array([pixdim[1], pixdim[2], pixdim[3] * qfac])
    affine = np.eye(4)
    affine[:3, :3] = rot * scale[None, :]
    affine[:3, 3] = qoffset
    return affine


def read_nifti(path: str | Path, as_labels: bool | None = None) -> Volume | LabelMap:
    """Read a NIfTI-1 file into a Volume or LabelMap.

    `as_labels` forces the interpretation; None picks LabelMap for unscaled
    non-negative integer data and Volume otherwise. Intensity scaling
    (scl_slope/scl_inter, slope 0 treated as 1) is applied to volumes.
    """
    path = Path(path)
    raw = _read_bytes(path)
    if len(raw) < _HEADER_SIZE:
        raise FormatError(f"file shorter than the {_HEADER_SIZE}-byte header: {path}")

    if struct.unpack_from("<i", raw, 0)[0] == _HEADER_SIZE:
        end = "<"
    elif struct.unpack_from(">i", raw, 0)[0] == _HEADER_SIZE:
        end = ">"
    else:
        raise FormatError("sizeof_hdr is not 348; not a NIfTI-1 file")

    magic = raw[344:348]
    if magic not in (_MAGIC_SINGLE, _MAGIC_PAIR):
        raise FormatError(f"magic {magic!r} is neither 'n+1' nor 'ni1'")

    dim = struct.unpack_from(end + "8h", raw, 40)
    datatype, bitpix = struct.unpack_from(end + "2h", raw, 70)
    pixdim = struct.unpack_from(end + "8f", raw, 76)
    vox_offset = struct.unpack_from(end + "f", raw, 108)[0]
    scl_slope, scl_inter = struct.unpack_from(end + "2f", raw, 112)
    qform_code, sform_code = struct.unpack_from(end + "2h", raw, 252)
    quatern = struct.unpack_from(end + "3f", raw, 256)
    qoffset = struct.unpack_from(end + "3f", raw, 268)
    srow = struct.unpack_from(end + "12f", raw, 280)

    nd = dim[0]
    if not 1 <= nd <= 7:
        raise FormatError(f"dim[0] = {nd} outside [1, 7]")
    shape = [int(s) for s in dim[1 : 1 + nd]]
    if any(s <= 0 for s in shape):
        raise FormatError(f"non-positive dimension in dim: {shape}")
    if nd < 3:
        raise DimensionalityError(f"expected a 3-D image, file is {nd}-D")
    if any(s != 1 for s in shape[3:]):
        raise DimensionalityError(
            f"more than three non-singleton dimensions: {shape}"
        )
    dims = tuple(shape[:3])

    if datatype not in _DTYPE_BY_CODE:
        raise UnsupportedTypeError(f"unsupported NIfTI datatype code {datatype}")
    dtype = np.dtype(_DTYPE_BY_CODE[datatype]).newbyteorder(end)
    if dtype.itemsize * 8 != bitpix:
        raise FormatError(f"bitpix {bitpix} disagrees with datatype code {datatype}")

    if magic == _MAGIC_SINGLE:
        offset = int(round(vox_offset))
        if offset < _HEADER_SIZE:
            raise FormatError(f"vox_offset {vox_offset} precedes the header end")
        payload = raw
    else:
        offset = int(round(vox_offset)) if vox_offset > 0 else 0
        payload = _read_bytes(_img_sibling(path))

    count = dims[0] * dims[1] * dims[2]
    nbytes = count * dtype.itemsize
    if len(payload) < offset + nbytes:
        raise FormatError(
            f"data truncated: need {offset + nbytes} bytes, file has {len(payload)}"
        )
    flat = np.frombuffer(payload, dtype=dtype, count=count, offset=offset)
    # NIfTI stores the first index fastest; repack to the C-order layout.
    arr = np.ascontiguousarray(flat.reshape(dims, order="F"))

    if sform_code > 0:
        affine = np.eye(4)
        affine[0, :] = srow[0:4]
        affine[1, :] = srow[4:8]
        affine[2, :] = srow[8:12]
    elif qform_code > 0:
        affine = _quaternion_affine(quatern, qoffset, pixdim)
    else:
        affine = np.diag([pixdim[1], pixdim[2], pixdim[3], 1.0])

    try:
        grid = Grid.from_affine(dims, affine)
    except ContractError as exc:
        raise FormatError(f"invalid geometry in {path.name}: {exc}") from exc

    slope = float(scl_slope) if np.isfinite(scl_slope) and scl_slope != 0 else 1.0
    inter = float(scl_inter) if np.isfinite(scl_inter) else 0.0
    scaled = (slope, inter) != (1.0, 0.0)

    is_integer = np.issubdtype(arr.dtype, np.integer)
    if as_labels is None:
        as_labels = bool(is_integer and not scaled and (count == 0 or int(arr.min()) >= 0))

    if as_labels:
        values = arr.astype(np.float64) * slope + inter if scaled else arr
        as_int = np.asarray(values)
        if not is_integer or scaled:
            rounded = np.rint(as_int)
            if not np.all(np.abs(as_int - rounded) < 1e-6):
                raise ContractError("cannot interpret non-integral voxel values as labels")
            as_int = rounded
        if as_int.size and int(as_int.min()) < 0:
            raise ContractError("cannot interpret negative voxel values as labels")
        return LabelMap(grid, as_int.astype(np.int32))

    data = arr.astype(np.float64)
    if scaled:
        data = data * slope + inter
    return Volume(grid, data)


def _smallest_label_dtype(data: np.ndarray) -> np.dtype:
    top = int(data.max()) if data.size else 0
    if top <= np.iinfo(np.uint8).max:
        return np.dtype(np.uint8)
    if top <= np.iinfo(np.uint16).max:
        return np.dtype(np.uint16)
    return np.dtype(np.int32)


def write_nifti(obj: Volume | LabelMap, path: str | Path) -> None:
    """Write a Volume (float64) or LabelMap (smallest fitting integer type).

    Single-file NIfTI-1, little-endian, gzipped when the path ends in .gz.
    Gzip output carries no timestamp so identical inputs produce identical
    bytes.
    """
    path = Path(path)
    if isinstance(obj, LabelMap):
        out_dtype = _smallest_label_dtype(obj.data)
    elif isinstance(obj, Volume):
        out_dtype = np.dtype(np.float64)
    else:
        raise ContractError(f"cannot write object of type {type(obj).__name__}")

    arr = obj.data.astype(out_dtype.newbyteorder("<"), copy=False)
    code = _CODE_BY_DTYPE[np.dtype(out_dtype)]
    grid = obj.grid

    header = bytearray(_HEADER_SIZE)
    struct.pack_into("<i", header, 0, _HEADER_SIZE)
    struct.pack_into("<8h", header, 40, 3, *grid.dims, 1, 1, 1, 1)
    struct.pack_into("<2h", header, 70, code, out_dtype.itemsize * 8)
    struct.pack_into("<8f", header, 76, 1.0, *grid.spacing, 0.0, 0.0, 0.0, 0.0)
    struct.pack_into("<f", header, 108, 352.0)
    from . import __version__

    struct.pack_into("<2f", header, 112, 1.0, 0.0)
    struct.pack_into("<80s", header, 148, f"ulfsynth {__version__}".encode())
    struct.pack_into("<2h", header, 252, 0, 1)
    affine = grid.affine
    struct.pack_into("<4f", header, 280, *affine[0, :])
    struct.pack_into("<4f", header, 296, *affine[1, :])
    struct.pack_into("<4f", header, 312, *affine[2, :])
    struct.pack_into("<4s", header, 344, _MAGIC_SINGLE)

    payload = bytes(header) + b"\x00\x00\x00\x00" + arr.tobytes(order="F")
    if path.name.endswith(".gz"):
        # filename="" and mtime=0 keep the gzip header constant so identical
        # inputs produce byte-identical files regardless of path or wall clock.
        with open(path, "wb") as fh:
            with gzip.GzipFile(filename="", fileobj=fh, mode="wb", mtime=0) as gz:
                gz.write(payload)
    else:
        with open(path, "wb") as fh:
            fh.write(payload)
