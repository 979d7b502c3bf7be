from collections.abc import Iterator
from enum import StrEnum
import logging
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from ..exceptions import InvalidMesh, ParseError, UnsupportedFormat
from .mesh import TriMesh

logger = logging.getLogger(__name__)


class MeshFormat(StrEnum):
    OFF = "off"
    PLY = "ply"
    OBJ = "obj"


def infer_format(path: str | Path) -> MeshFormat:
    suffix = Path(path).suffix.lower().lstrip(".")
    try:
        return MeshFormat(suffix)
    except ValueError:
        raise UnsupportedFormat(
            f"Cannot infer mesh format from '{path}'; supported: "
            f"{', '.join(f.value for f in MeshFormat)}"
        ) from None


def load_mesh(
    path: str | Path, format: MeshFormat | str | None = None
) -> TriMesh:
    """Read a triangle mesh, preserving the vertex order of the file.

    Polygons with more than three corners are fan-triangulated.

    Args:
        path (str | Path): Mesh file.
        format (MeshFormat | str): (optional) One of ``"off"``, ``"ply"``
            (ASCII only) or ``"obj"``. Inferred from the extension when
            omitted.

    Returns:
        TriMesh: The mesh, named after the file stem.

    Raises:
        ParseError: Malformed content, with the offending line number.
        UnsupportedFormat: Unknown format or binary PLY.
    """
    path = Path(path)
    if format is None:
        fmt = infer_format(path)
    else:
        try:
            fmt = MeshFormat(str(format).lower())
        except ValueError:
            raise UnsupportedFormat(
                f"Unknown mesh format '{format}'"
            ) from None

    with open(path, encoding="utf-8", errors="replace") as handle:
        text = handle.read()

    reader = {
        MeshFormat.OFF: _read_off,
        MeshFormat.PLY: _read_ply,
        MeshFormat.OBJ: _read_obj,
    }[fmt]
    vertices, faces = reader(path, text)

    try:
        mesh = TriMesh(vertices, faces, name=path.stem)
    except InvalidMesh as error:
        raise ParseError(path, 0, str(error)) from error

    logger.info(
        f"Loaded {path} ({fmt.value}): {mesh.n_vertices} vertices, "
        f"{mesh.n_faces} faces"
    )
    return mesh


def _content_lines(text: str) -> Iterator[tuple[int, list[str]]]:
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if line:
            yield number, line.split()


def _fan(
    path: Path, line: int, indices: list[int], n_vertices: int
) -> list[tuple[int, int, int]]:
    if len(indices) < 3:
        raise ParseError(path, line, f"face with {len(indices)} corners")
    if len(set(indices)) != len(indices):
        raise ParseError(path, line, "face repeats a vertex index")
    for index in indices:
        if not 0 <= index < n_vertices:
            raise ParseError(
                path,
                line,
                f"vertex index {index} out of range [0, {n_vertices})",
            )
    return [
        (indices[0], indices[i], indices[i + 1])
        for i in range(1, len(indices) - 1)
    ]


def _floats(path: Path, line: int, tokens: list[str]) -> list[float]:
    try:
        return [float(t) for t in tokens]
    except ValueError:
        raise ParseError(
            path, line, f"expected numbers, got {tokens}"
        ) from None


def _ints(path: Path, line: int, tokens: list[str]) -> list[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise ParseError(
            path, line, f"expected integers, got {tokens}"
        ) from None


def _read_off(path: Path, text: str) -> tuple[NDArray, NDArray]:
    lines = _content_lines(text)
    try:
        number, tokens = next(lines)
    except StopIteration:
        raise ParseError(path, 1, "empty file") from None
    if not tokens[0].upper().endswith("OFF"):
        raise ParseError(path, number, f"expected OFF header, got {tokens[0]}")

    counts = tokens[1:]
    if not counts:
        try:
            number, counts = next(lines)
        except StopIteration:
            raise ParseError(path, number, "missing element counts") from None
    if len(counts) < 2:
        raise ParseError(path, number, "expected vertex and face counts")
    n_vertices, n_faces = _ints(path, number, counts[:2])

    vertices = []
    for _ in range(n_vertices):
        try:
            number, tokens = next(lines)
        except StopIteration:
            raise ParseError(
                path, number, f"expected {n_vertices} vertices"
            ) from None
        if len(tokens) < 3:
            raise ParseError(path, number, "vertex needs three coordinates")
        vertices.append(_floats(path, number, tokens[:3]))

    faces = []
    for _ in range(n_faces):
        try:
            number, tokens = next(lines)
        except StopIteration:
            raise ParseError(
                path, number, f"expected {n_faces} faces"
            ) from None
        size = _ints(path, number, tokens[:1])[0]
        if len(tokens) < size + 1:
            raise ParseError(path, number, f"face declares {size} corners")
        indices = _ints(path, number, tokens[1 : size + 1])
        faces.extend(_fan(path, number, indices, n_vertices))

    return np.array(vertices, dtype=float).reshape(-1, 3), np.array(
        faces, dtype=np.int64
    ).reshape(-1, 3)


def _read_ply(path: Path, text: str) -> tuple[NDArray, NDArray]:
    lines = iter(enumerate(text.splitlines(), start=1))
    number, first = next(lines, (1, ""))
    if first.strip() != "ply":
        raise ParseError(path, number, "missing 'ply' magic")

    # Header: a list of (element name, count, [(property, is_list)])
    elements: list[tuple[str, int, list[tuple[str, bool]]]] = []
    for number, line in lines:
        tokens = line.split()
        if not tokens or tokens[0] in ("comment", "obj_info"):
            continue
        if tokens[0] == "format":
            if len(tokens) < 2 or tokens[1] != "ascii":
                raise UnsupportedFormat(
                    f"{path}: only ASCII PLY is supported, got "
                    f"'{' '.join(tokens[1:2])}'"
                )
        elif tokens[0] == "element":
            if len(tokens) != 3:
                raise ParseError(path, number, "malformed element line")
            count = _ints(path, number, tokens[2:])[0]
            elements.append((tokens[1], count, []))
        elif tokens[0] == "property":
            if not elements:
                raise ParseError(path, number, "property before element")
            is_list = len(tokens) > 1 and tokens[1] == "list"
            elements[-1][2].append((tokens[-1], is_list))
        elif tokens[0] == "end_header":
            break
        else:
            raise ParseError(path, number, f"unknown header line '{line}'")
    else:
        raise ParseError(path, number, "missing end_header")

    body = ((n, line.split()) for n, line in lines if line.strip())
    vertices: list[list[float]] = []
    faces: list[tuple[int, int, int]] = []
    vertex_count = 0
    for name, count, properties in elements:
        names = [p for p, _ in properties]
        if name == "vertex":
            vertex_count = count
            try:
                columns = [names.index(axis) for axis in ("x", "y", "z")]
            except ValueError:
                raise ParseError(
                    path, number, "vertex element lacks x/y/z"
                ) from None
        for _ in range(count):
            try:
                number, tokens = next(body)
            except StopIteration:
                raise ParseError(
                    path, number, f"expected {count} '{name}' rows"
                ) from None
            if name == "vertex":
                if len(tokens) < len(properties):
                    raise ParseError(path, number, "short vertex row")
                row = _floats(path, number, tokens)
                vertices.append([row[c] for c in columns])
            elif name == "face":
                position = 0
                for _, is_list in properties:
                    if is_list:
                        size = _ints(
                            path, number, tokens[position : position + 1]
                        )
                        if not size:
                            raise ParseError(path, number, "short face row")
                        indices = _ints(
                            path,
                            number,
                            tokens[position + 1 : position + 1 + size[0]],
                        )
                        if len(indices) != size[0]:
                            raise ParseError(path, number, "short face row")
                        faces.extend(_fan(path, number, indices, vertex_count))
                        position += 1 + size[0]
                    else:
                        position += 1

    return np.array(vertices, dtype=float).reshape(-1, 3), np.array(
        faces, dtype=np.int64
    ).reshape(-1, 3)


def _read_obj(path: Path, text: str) -> tuple[NDArray, NDArray]:
    vertices: list[list[float]] = []
    polygons: list[tuple[int, list[int]]] = []
    for number, tokens in _content_lines(text):
        if tokens[0] == "v":
            if len(tokens) < 4:
                raise ParseError(
                    path, number, "vertex needs three coordinates"
                )
            vertices.append(_floats(path, number, tokens[1:4]))
        elif tokens[0] == "f":
            refs = [t.split("/", 1)[0] for t in tokens[1:]]
            indices = _ints(path, number, refs)
            # OBJ is 1-based; negative indices count back from the last vertex
            polygons.append(
                (
                    number,
                    [i - 1 if i > 0 else len(vertices) + i for i in indices],
                )
            )

    faces = []
    for number, indices in polygons:
        faces.extend(_fan(path, number, indices, len(vertices)))
    return np.array(vertices, dtype=float).reshape(-1, 3), np.array(
        faces, dtype=np.int64
    ).reshape(-1, 3)


def write_off(mesh: TriMesh, path: str | Path) -> Path:
    """Write an OFF file with 17 significant digits per coordinate so that
    reading it back reproduces the positions bit for bit."""
    path = Path(path)
    rows = [
        "OFF",
        f"{mesh.n_vertices} {mesh.n_faces} {len(mesh.edges)}",
    ]
    rows.extend(f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices)
    rows.extend(f"3 {a} {b} {c}" for a, b, c in mesh.faces)
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path


def write_ground_truth(mapping: NDArray[np.int64], path: str | Path) -> Path:
    """One source vertex index per line; line ``i`` belongs to target
    vertex ``i``."""
    path = Path(path)
    path.write_text(
        "".join(f"{int(j)}\n" for j in mapping), encoding="utf-8"
    )
    return path


def read_ground_truth(path: str | Path) -> NDArray[np.int64]:
    path = Path(path)
    values = []
    with open(path, encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(int(line.split()[0]))
            except ValueError:
                raise ParseError(
                    path, number, f"expected an index, got '{line}'"
                ) from None
    return np.array(values, dtype=np.int64)
