"""Load voxel volumes from raw payloads or PGM image stacks."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from voxshell.exceptions import PreconditionError, VolumeLoadError
from voxshell.volume import ScalarGrid, ValueKind

logger = logging.getLogger(__name__)

HEADER_SUFFIX = ".hdr"
PAYLOAD_SUFFIX = ".raw"
PGM_MAGIC = b"P5"


@dataclass(frozen=True)
class VolumeHeader:
    """Shape and storage of a raw volume payload.

    Attributes
    ----------
    dims : tuple[int, int, int]
        ``(nx, ny, nz)``; values are stored x-fastest, then y, then z.
    value_kind : ValueKind
        Little-endian storage type.
    spacing : tuple[float, float, float]
        Voxel size along each axis.
    data : str | None
        Payload file name relative to the header, if the header names one.
    """

    dims: tuple[int, int, int]
    value_kind: ValueKind = ValueKind.U8
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    data: str | None = None

    @property
    def payload_size(self) -> int:
        """Expected payload size in bytes."""
        nx, ny, nz = self.dims
        return nx * ny * nz * self.value_kind.dtype.itemsize

    def to_text(self) -> str:
        lines = [
            f"dims: {' '.join(str(n) for n in self.dims)}",
            f"value_kind: {self.value_kind}",
            f"spacing: {' '.join(repr(s) for s in self.spacing)}",
        ]
        if self.data is not None:
            lines.append(f"data: {self.data}")
        return "\n".join(lines) + "\n"


def _triple(raw: str, key: str) -> tuple[str, str, str]:
    parts = raw.replace(",", " ").split()
    if len(parts) != 3:
        msg = f"header field {key!r} needs three values, got {raw!r}"
        raise VolumeLoadError(msg)
    return (parts[0], parts[1], parts[2])


def _ints(raw: str, key: str) -> tuple[int, int, int]:
    a, b, c = _triple(raw, key)
    try:
        return (int(a), int(b), int(c))
    except ValueError:
        msg = f"header field {key!r} has a malformed value {raw!r}"
        raise VolumeLoadError(msg) from None


def _floats(raw: str, key: str) -> tuple[float, float, float]:
    a, b, c = _triple(raw, key)
    try:
        return (float(a), float(b), float(c))
    except ValueError:
        msg = f"header field {key!r} has a malformed value {raw!r}"
        raise VolumeLoadError(msg) from None


def parse_header(text: str) -> VolumeHeader:
    """Parse a ``key: value`` volume header.

    Parameters
    ----------
    text : str
        Header contents. Blank lines and lines starting with ``#`` are
        ignored. Recognised keys are ``dims``, ``value_kind``, ``spacing``
        and ``data``.

    Returns
    -------
    VolumeHeader
        The parsed header.

    Raises
    ------
    VolumeLoadError
        If ``dims`` is missing or any field is malformed.

    Examples
    --------
    >>> parse_header("dims: 2 2 2\\nvalue_kind: u8").dims
    (2, 2, 2)
    """
    fields: dict[str, str] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition(":")
        if not sep:
            msg = f"header line {number} is not 'key: value': {line!r}"
            raise VolumeLoadError(msg)
        fields[key.strip().lower()] = value.strip()

    if "dims" not in fields:
        msg = "header has no 'dims' field"
        raise VolumeLoadError(msg)
    dims = _ints(fields["dims"], "dims")
    if min(dims) < 1:
        msg = f"dims must be positive, got {dims}"
        raise VolumeLoadError(msg)

    raw_kind = fields.get("value_kind", ValueKind.U8.value).lower()
    try:
        kind = ValueKind(raw_kind)
    except ValueError:
        known = ", ".join(k.value for k in ValueKind)
        msg = f"unknown value kind {raw_kind!r}, expected one of {known}"
        raise VolumeLoadError(msg) from None

    spacing = (1.0, 1.0, 1.0)
    if "spacing" in fields:
        spacing = _floats(fields["spacing"], "spacing")
        if min(spacing) <= 0:
            msg = f"spacing must be positive, got {spacing}"
            raise VolumeLoadError(msg)

    return VolumeHeader(dims=dims, value_kind=kind, spacing=spacing, data=fields.get("data"))


def read_header(file_path: str | Path) -> VolumeHeader:
    """Read and parse a header file.

    Raises
    ------
    VolumeLoadError
        If the file cannot be read or does not parse.
    """
    path = Path(file_path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        msg = f"cannot read header {path}: {exc}"
        raise VolumeLoadError(msg) from exc
    return parse_header(text)


def load_raw(header: VolumeHeader, payload: str | Path) -> ScalarGrid:
    """Load a raw payload described by ``header``.

    Parameters
    ----------
    header : VolumeHeader
        Shape and storage type.
    payload : str | Path
        Binary file with exactly ``header.payload_size`` bytes.

    Returns
    -------
    ScalarGrid
        The volume.

    Raises
    ------
    VolumeLoadError
        If the file is unreadable or its size does not match the header.
    """
    path = Path(payload)
    try:
        size = path.stat().st_size
    except OSError as exc:
        msg = f"cannot read payload {path}: {exc}"
        raise VolumeLoadError(msg) from exc
    if size != header.payload_size:
        msg = (
            f"payload {path} holds {size} bytes but a {header.dims} "
            f"{header.value_kind} volume needs {header.payload_size}"
        )
        raise VolumeLoadError(msg)
    flat = np.fromfile(path, dtype=header.value_kind.dtype)
    logger.info("Loaded %s volume %s from %s", header.value_kind, header.dims, path)
    try:
        return ScalarGrid.from_flat(flat, header.dims, header.value_kind, header.spacing)
    except PreconditionError as exc:
        raise VolumeLoadError(str(exc)) from exc


def _read_pgm(path: Path) -> np.ndarray:
    with path.open("rb") as f:
        magic = f.read(2)
    if magic != PGM_MAGIC:
        msg = f"{path} is not a binary PGM (P5) image"
        raise VolumeLoadError(msg)
    try:
        with Image.open(path) as image:
            return np.asarray(image)
    except OSError as exc:
        msg = f"cannot decode {path}: {exc}"
        raise VolumeLoadError(msg) from exc


def load_image_stack(directory: str | Path) -> ScalarGrid:
    """Stack the PGM slices of a directory along z.

    Parameters
    ----------
    directory : str | Path
        Directory holding one binary PGM (``P5``) per z-slice. Slices are
        taken in lexicographic file-name order.

    Returns
    -------
    ScalarGrid
        Grid of shape ``(width, height, number of slices)``.

    Raises
    ------
    VolumeLoadError
        If there are no slices, a slice is not P5, or slice sizes differ.
    """
    folder = Path(directory)
    files = sorted(p for p in folder.iterdir() if p.suffix.lower() == ".pgm")
    if not files:
        msg = f"no .pgm slices in {folder}"
        raise VolumeLoadError(msg)
    slices = [_read_pgm(p) for p in files]
    shape = slices[0].shape
    for path, image in zip(files, slices, strict=True):
        if image.shape != shape:
            msg = f"slice {path.name} is {image.shape[::-1]}, expected {shape[::-1]}"
            raise VolumeLoadError(msg)
    # rows are y, columns are x
    stack = np.stack(slices, axis=0).transpose(2, 1, 0)
    kind = ValueKind.U8 if stack.dtype == np.uint8 else ValueKind.U16
    logger.info("Stacked %d slices of %dx%d from %s", len(files), shape[1], shape[0], folder)
    return ScalarGrid(stack, value_kind=kind)


def load_volume(source: str | Path, header: str | Path | None = None) -> ScalarGrid:
    """Load a volume from an image-stack directory or a raw payload.

    Parameters
    ----------
    source : str | Path
        A directory of PGM slices, a raw payload, or a header file.
    header : str | Path | None, optional
        Header for a raw payload. When omitted the header is looked up next
        to ``source`` with the ``.hdr`` suffix.

    Returns
    -------
    ScalarGrid
        The volume.

    Raises
    ------
    VolumeLoadError
        If nothing loadable is found at ``source``.
    """
    path = Path(source)
    if path.is_dir():
        return load_image_stack(path)
    if header is None:
        header = path if path.suffix == HEADER_SUFFIX else path.with_suffix(HEADER_SUFFIX)
    header_path = Path(header)
    if not header_path.exists():
        msg = f"File not found: {header_path}"
        raise VolumeLoadError(msg)
    parsed = read_header(header_path)
    if path == header_path:
        name = parsed.data or header_path.with_suffix(PAYLOAD_SUFFIX).name
        path = header_path.parent / name
    return load_raw(parsed, path)


def save_volume(grid: ScalarGrid, file_path: str | Path) -> tuple[Path, Path]:
    """Write ``grid`` as a header and a raw payload.

    Parameters
    ----------
    grid : ScalarGrid
        Volume to write.
    file_path : str | Path
        Target path; its suffix is replaced by ``.hdr`` and ``.raw``.

    Returns
    -------
    tuple[Path, Path]
        Header and payload paths.
    """
    base = Path(file_path)
    header_path = base.with_suffix(HEADER_SUFFIX)
    payload_path = base.with_suffix(PAYLOAD_SUFFIX)
    kind = ValueKind(grid.value_kind or ValueKind.U8)
    header = VolumeHeader(
        dims=grid.dims, value_kind=kind, spacing=grid.spacing, data=payload_path.name
    )
    header_path.parent.mkdir(parents=True, exist_ok=True)
    header_path.write_text(header.to_text(), encoding="utf-8")
    grid.flat_values().astype(kind.dtype).tofile(payload_path)
    return header_path, payload_path
