"""Tests for the data_loader module."""

from __future__ import annotations

from typing import TYPE_CHECKING
from unittest.mock import MagicMock, patch

import numpy as np
import pytest
from PIL import Image

from voxshell.data_loader import (
    VolumeHeader,
    load_image_stack,
    load_raw,
    load_volume,
    parse_header,
    read_header,
    save_volume,
)
from voxshell.exceptions import VolumeLoadError
from voxshell.volume import ScalarGrid, ValueKind

if TYPE_CHECKING:
    from pathlib import Path


def _write_raw(tmp_path: Path, name: str, values: np.ndarray, header: str) -> Path:
    payload = tmp_path / f"{name}.raw"
    values.tofile(payload)
    (tmp_path / f"{name}.hdr").write_text(header, encoding="utf-8")
    return payload


class TestParseHeader:
    """Tests for parse_header function."""

    def test_full_header(self) -> None:
        """Test that every recognised field is parsed."""
        text = "# scan\ndims: 4 3 2\nvalue_kind: u16\nspacing: 0.5, 0.5, 2\ndata: scan.bin\n"
        header = parse_header(text)
        assert header.dims == (4, 3, 2)
        assert header.value_kind is ValueKind.U16
        assert header.spacing == (0.5, 0.5, 2.0)
        assert header.data == "scan.bin"
        assert header.payload_size == 4 * 3 * 2 * 2

    def test_defaults(self) -> None:
        """Test that kind and spacing default to u8 and unit voxels."""
        header = parse_header("dims: 2 2 2")
        assert header.value_kind is ValueKind.U8
        assert header.spacing == (1.0, 1.0, 1.0)
        assert header.data is None

    def test_to_text_parses_back(self) -> None:
        """Test that a rendered header parses to the same header."""
        header = VolumeHeader(dims=(5, 6, 7), value_kind=ValueKind.F32, spacing=(1.0, 2.0, 0.25))
        assert parse_header(header.to_text()) == header

    @pytest.mark.parametrize(
        "text",
        [
            "value_kind: u8",
            "dims: 2 2",
            "dims: 2 two 2",
            "dims: 0 2 2",
            "dims: 2 2 2\nvalue_kind: i64",
            "dims: 2 2 2\nspacing: 1 -1 1",
            "dims 2 2 2",
        ],
    )
    def test_malformed(self, text: str) -> None:
        """Test that malformed headers raise VolumeLoadError.

        Parameters
        ----------
        text : str
            Header contents.
        """
        with pytest.raises(VolumeLoadError):
            parse_header(text)

    def test_read_header_missing(self, tmp_path: Path) -> None:
        """Test that an unreadable header raises VolumeLoadError.

        Parameters
        ----------
        tmp_path : Path
            Temporary directory path provided by pytest.
        """
        with pytest.raises(VolumeLoadError):
            read_header(tmp_path / "absent.hdr")


class TestLoadRaw:
    """Tests for raw payload loading."""

    def test_x_fastest_order(self, tmp_path: Path) -> None:
        """Test that payload values are stored x-fastest, then y, then z.

        Parameters
        ----------
        tmp_path : Path
            Temporary directory path provided by pytest.
        """
        flat = np.arange(24, dtype=np.uint8)
        payload = _write_raw(tmp_path, "ramp", flat, "dims: 4 3 2\n")
        grid = load_raw(parse_header("dims: 4 3 2"), payload)
        assert grid.dims == (4, 3, 2)
        assert grid.value((1, 0, 0)) == 1
        assert grid.value((0, 1, 0)) == 4
        assert grid.value((0, 0, 1)) == 12
        assert grid.value((3, 2, 1)) == 23

    def test_u16_little_endian(self, tmp_path: Path) -> None:
        """Test that u16 payloads are read little-endian.

        Parameters
        ----------
        tmp_path : Path
            Temporary directory path provided by pytest.
        """
        payload = tmp_path / "wide.raw"
        payload.write_bytes(bytes([0x01, 0x02]))
        grid = load_raw(parse_header("dims: 1 1 1\nvalue_kind: u16"), payload)
        assert grid.value((0, 0, 0)) == 0x0201
        assert grid.value_kind is ValueKind.U16

    def test_size_mismatch(self, tmp_path: Path) -> None:
        """Test that a payload of the wrong size is rejected.

        Parameters
        ----------
        tmp_path : Path
            Temporary directory path provided by pytest.
        """
        payload = _write_raw(tmp_path, "short", np.zeros(7, dtype=np.uint8), "dims: 2 2 2\n")
        with pytest.raises(VolumeLoadError, match="needs 8"):
            load_raw(parse_header("dims: 2 2 2"), payload)

    def test_missing_payload(self, tmp_path: Path) -> None:
        """Test that a missing payload raises VolumeLoadError.

        Parameters
        ----------
        tmp_path : Path
            Temporary directory path provided by pytest.
        """
        with pytest.raises(VolumeLoadError):
            load_raw(parse_header("dims: 1 1 1"), tmp_path / "nothing.raw")


class TestImageStack:
    """Tests for PGM slice stacks."""

    def test_stack_axes(self, tmp_path: Path) -> None:
        """Test that rows map to y, columns to x and files to z.

        Parameters
        ----------
        tmp_path : Path
            Temporary directory path provided by pytest.
        """
        for z in range(3):
            image = np.zeros((2, 4), dtype=np.uint8)
            image[1, 3] = 10 + z
            Image.fromarray(image).save(tmp_path / f"slice_{z:02d}.pgm")
        grid = load_image_stack(tmp_path)
        assert grid.dims == (4, 2, 3)
        assert grid.value_kind is ValueKind.U8
        assert [grid.value((3, 1, z)) for z in range(3)] == [10, 11, 12]
        assert grid.value((1, 1, 0)) == 0

    def test_empty_directory(self, tmp_path: Path) -> None:
        """Test that a directory without slices is rejected.

        Parameters
        ----------
        tmp_path : Path
            Temporary directory path provided by pytest.
        """
        with pytest.raises(VolumeLoadError, match="no .pgm"):
            load_image_stack(tmp_path)

    def test_size_mismatch(self, tmp_path: Path) -> None:
        """Test that slices of different sizes are rejected.

        Parameters
        ----------
        tmp_path : Path
            Temporary directory path provided by pytest.
        """
        Image.fromarray(np.zeros((2, 2), dtype=np.uint8)).save(tmp_path / "a.pgm")
        Image.fromarray(np.zeros((3, 2), dtype=np.uint8)).save(tmp_path / "b.pgm")
        with pytest.raises(VolumeLoadError, match="expected"):
            load_image_stack(tmp_path)

    def test_ascii_pgm_rejected(self, tmp_path: Path) -> None:
        """Test that plain-text P2 images are not accepted.

        Parameters
        ----------
        tmp_path : Path
            Temporary directory path provided by pytest.
        """
        (tmp_path / "a.pgm").write_text("P2\n1 1\n255\n0\n", encoding="ascii")
        with pytest.raises(VolumeLoadError, match="P5"):
            load_image_stack(tmp_path)

    @patch("voxshell.data_loader.Image.open")
    def test_undecodable_slice(self, mock_open: MagicMock, tmp_path: Path) -> None:
        """Test that a decoder failure becomes a VolumeLoadError.

        Parameters
        ----------
        mock_open : MagicMock
            Mocked PIL opener.
        tmp_path : Path
            Temporary directory path provided by pytest.
        """
        (tmp_path / "a.pgm").write_bytes(b"P5\n1 1\n255\n\x00")
        mock_open.side_effect = OSError("truncated")
        with pytest.raises(VolumeLoadError, match="cannot decode"):
            load_image_stack(tmp_path)
        mock_open.assert_called_once()


class TestLoadVolume:
    """Tests for load_volume and save_volume."""

    def test_save_then_load(self, tmp_path: Path) -> None:
        """Test that a saved grid loads back from its header or its payload.

        Parameters
        ----------
        tmp_path : Path
            Temporary directory path provided by pytest.
        """
        values = np.arange(30, dtype=np.uint8).reshape(2, 3, 5)
        grid = ScalarGrid(values, spacing=(1.0, 0.5, 2.0))
        header_path, payload_path = save_volume(grid, tmp_path / "vol")
        assert header_path.name == "vol.hdr"
        assert payload_path.name == "vol.raw"
        for source in (header_path, payload_path):
            loaded = load_volume(source)
            np.testing.assert_array_equal(loaded.values, values)
            assert loaded.spacing == (1.0, 0.5, 2.0)

    def test_explicit_header(self, tmp_path: Path) -> None:
        """Test that a header given separately describes the payload.

        Parameters
        ----------
        tmp_path : Path
            Temporary directory path provided by pytest.
        """
        payload = tmp_path / "data.bin"
        np.ones(8, dtype=np.uint8).tofile(payload)
        header = tmp_path / "describe.txt"
        header.write_text("dims: 2 2 2\n", encoding="utf-8")
        grid = load_volume(payload, header)
        assert grid.dims == (2, 2, 2)

    def test_missing_header(self, tmp_path: Path) -> None:
        """Test that a payload without a header reports the missing file.

        Parameters
        ----------
        tmp_path : Path
            Temporary directory path provided by pytest.
        """
        payload = tmp_path / "lonely.raw"
        np.ones(8, dtype=np.uint8).tofile(payload)
        with pytest.raises(VolumeLoadError, match="File not found"):
            load_volume(payload)

    def test_directory(self, tmp_path: Path) -> None:
        """Test that a directory is loaded as an image stack.

        Parameters
        ----------
        tmp_path : Path
            Temporary directory path provided by pytest.
        """
        Image.fromarray(np.full((2, 2), 7, dtype=np.uint8)).save(tmp_path / "0.pgm")
        assert load_volume(tmp_path).dims == (2, 2, 1)
