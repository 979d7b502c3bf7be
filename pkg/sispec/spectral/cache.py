"""Binary containers for spectral bases, descriptors and functional maps.

All containers are little endian: a fixed header, then 64-bit floats.
Bases store eigenvalues, then the eigenfunctions column-major, then the
mass matrix as (row, col, value) triplets.
"""

import hashlib
import json
import logging
from pathlib import Path
import struct

import numpy as np
from numpy.typing import NDArray
from scipy import sparse

from ..exceptions import CacheFormatError
from ..geometry.mesh import TriMesh
from .basis import SpectralBasis
from .descriptors import DescriptorKind, DescriptorSet

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

BASIS_MAGIC = b"SISB"
DESCRIPTOR_MAGIC = b"SISD"
FMAP_MAGIC = b"SISF"

# magic, version, n, k, alpha, nnz, lumped
_BASIS_HEADER = struct.Struct("<4sIQQdQB")
# magic, version, n, d, kind, parameter bytes
_DESCRIPTOR_HEADER = struct.Struct("<4sIQQ8sQ")
# magic, version, k, alpha, direction
_FMAP_HEADER = struct.Struct("<4sIQd2s")


def cache_key(mesh: TriMesh, settings: dict, alpha: float) -> str:
    """Content hash of a mesh, the settings that shape its spectrum and
    alpha. Any change to either produces a new key."""
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(mesh.vertices).tobytes())
    digest.update(np.ascontiguousarray(mesh.faces).tobytes())
    digest.update(json.dumps(settings, sort_keys=True).encode())
    digest.update(struct.pack("<d", alpha))
    return digest.hexdigest()


def _read_header(
    data: bytes, layout: struct.Struct, magic: bytes, path: Path
) -> tuple:
    if len(data) < layout.size:
        raise CacheFormatError(f"{path}: truncated header")
    fields = layout.unpack_from(data)
    if fields[0] != magic:
        raise CacheFormatError(
            f"{path}: bad magic {fields[0]!r}, expected {magic!r}"
        )
    if fields[1] != FORMAT_VERSION:
        raise CacheFormatError(
            f"{path}: format version {fields[1]}, expected {FORMAT_VERSION}"
        )
    return fields[2:]


def _floats(data: bytes, offset: int, count: int, path: Path) -> NDArray:
    end = offset + 8 * count
    if len(data) < end:
        raise CacheFormatError(f"{path}: truncated payload")
    return np.frombuffer(data, dtype="<f8", count=count, offset=offset)


def write_basis(basis: SpectralBasis, path: str | Path) -> Path:
    path = Path(path)
    mass = sparse.coo_matrix(basis.mass)
    header = _BASIS_HEADER.pack(
        BASIS_MAGIC,
        FORMAT_VERSION,
        basis.n,
        basis.k,
        basis.alpha,
        mass.nnz,
        int(basis.lumped),
    )
    with open(path, "wb") as handle:
        handle.write(header)
        handle.write(basis.eigenvalues.astype("<f8").tobytes())
        handle.write(
            basis.eigenfunctions.astype("<f8").tobytes(order="F")
        )
        handle.write(mass.row.astype("<i8").tobytes())
        handle.write(mass.col.astype("<i8").tobytes())
        handle.write(mass.data.astype("<f8").tobytes())
    logger.debug(f"Wrote basis cache {path}")
    return path


def read_basis(path: str | Path) -> SpectralBasis:
    path = Path(path)
    data = path.read_bytes()
    n, k, alpha, nnz, lumped = _read_header(
        data, _BASIS_HEADER, BASIS_MAGIC, path
    )
    offset = _BASIS_HEADER.size
    eigenvalues = _floats(data, offset, k, path).copy()
    offset += 8 * k
    eigenfunctions = (
        _floats(data, offset, n * k, path).reshape((n, k), order="F").copy()
    )
    offset += 8 * n * k
    if len(data) != offset + 24 * nnz:
        raise CacheFormatError(f"{path}: payload size mismatch")
    rows = np.frombuffer(data, "<i8", nnz, offset)
    cols = np.frombuffer(data, "<i8", nnz, offset + 8 * nnz)
    values = np.frombuffer(data, "<f8", nnz, offset + 16 * nnz)
    mass = sparse.csr_matrix((values, (rows, cols)), shape=(n, n))
    return SpectralBasis(
        float(alpha), eigenvalues, eigenfunctions, mass, bool(lumped)
    )


def write_descriptors(descriptors: DescriptorSet, path: str | Path) -> Path:
    path = Path(path)
    parameters = json.dumps(descriptors.parameters, sort_keys=True).encode()
    header = _DESCRIPTOR_HEADER.pack(
        DESCRIPTOR_MAGIC,
        FORMAT_VERSION,
        descriptors.n,
        descriptors.d,
        descriptors.kind.value.encode(),
        len(parameters),
    )
    with open(path, "wb") as handle:
        handle.write(header)
        handle.write(parameters)
        handle.write(descriptors.values.astype("<f8").tobytes(order="C"))
    return path


def read_descriptors(path: str | Path) -> DescriptorSet:
    path = Path(path)
    data = path.read_bytes()
    n, d, kind, size = _read_header(
        data, _DESCRIPTOR_HEADER, DESCRIPTOR_MAGIC, path
    )
    offset = _DESCRIPTOR_HEADER.size
    try:
        parameters = json.loads(data[offset : offset + size])
        kind = DescriptorKind(kind.rstrip(b"\0").decode())
    except ValueError as error:
        raise CacheFormatError(f"{path}: {error}") from error
    offset += size
    if len(data) != offset + 8 * n * d:
        raise CacheFormatError(f"{path}: payload size mismatch")
    values = _floats(data, offset, n * d, path).reshape(n, d).copy()
    return DescriptorSet(values, kind, parameters)


def write_functional_map(
    C: NDArray[np.float64], alpha: float, direction: str, path: str | Path
) -> Path:
    """``direction`` is ``"xy"`` (source to target coefficients) or
    ``"yx"``."""
    if direction not in ("xy", "yx"):
        raise ValueError(f"direction must be 'xy' or 'yx', got {direction}")
    path = Path(path)
    C = np.asarray(C, dtype="<f8")
    header = _FMAP_HEADER.pack(
        FMAP_MAGIC, FORMAT_VERSION, C.shape[0], alpha, direction.encode()
    )
    with open(path, "wb") as handle:
        handle.write(header)
        handle.write(C.tobytes(order="C"))
    return path


def read_functional_map(
    path: str | Path,
) -> tuple[NDArray[np.float64], float, str]:
    path = Path(path)
    data = path.read_bytes()
    k, alpha, direction = _read_header(data, _FMAP_HEADER, FMAP_MAGIC, path)
    if len(data) != _FMAP_HEADER.size + 8 * k * k:
        raise CacheFormatError(f"{path}: payload size mismatch")
    C = _floats(data, _FMAP_HEADER.size, k * k, path).reshape(k, k).copy()
    return C, float(alpha), direction.decode()


class BasisCache:
    """Directory of basis containers keyed by :func:`cache_key`."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)

    def path(self, key: str) -> Path:
        return self.directory / f"{key}.sisb"

    def load(self, key: str) -> SpectralBasis | None:
        path = self.path(key)
        if not path.exists():
            return None
        try:
            basis = read_basis(path)
        except CacheFormatError as error:
            logger.warning(f"Ignoring unreadable cache entry: {error}")
            return None
        logger.info(f"Cache hit {path.name} (alpha = {basis.alpha})")
        return basis

    def store(self, key: str, basis: SpectralBasis) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        return write_basis(basis, self.path(key))
