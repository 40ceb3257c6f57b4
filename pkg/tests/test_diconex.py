"""Tests for 2D contour tracing."""

from __future__ import annotations

import numpy as np
import pytest

from voxshell.diconex import (
    Contour2D,
    PixelGrid,
    collect_icvs,
    displace_contour,
    extract_contours,
    link_contours,
)
from voxshell.exceptions import PreconditionError
from voxshell.volume import ConnectivityMode, IsoConfig, ScalarGrid

ISO = IsoConfig(1)


def _pixels(rows: list[str]) -> PixelGrid:
    """Image from text rows, ``#`` active; the first row is y = 0."""
    values = np.array([[c == "#" for c in row] for row in rows], dtype=np.uint8)
    return PixelGrid(values.T)


class TestCollect:
    """Tests for initial contour vectors."""

    def test_single_pixel(self) -> None:
        """Test that a lone pixel exposes four vectors around itself."""
        icvs = collect_icvs(_pixels(["#"]), ISO)
        assert [icv.midpoint for icv in icvs] == [(0, -1), (-1, 0), (1, 0), (0, 1)]
        for icv in icvs:
            assert icv.owner == (0, 0)
            assert abs(icv.normal[0]) + abs(icv.normal[1]) == 1

    def test_owner_on_the_left(self) -> None:
        """Test that each vector turns its owner to the left."""
        for icv in collect_icvs(_pixels(["##", "#."]), ISO):
            dx, dy = icv.end[0] - icv.start[0], icv.end[1] - icv.start[1]
            ox, oy = 2 * icv.owner[0] - icv.start[0], 2 * icv.owner[1] - icv.start[1]
            assert dx * oy - dy * ox > 0


class TestLink:
    """Tests for contour linking."""

    def test_single_pixel(self) -> None:
        """Test the diamond around one pixel."""
        (contour,) = extract_contours(_pixels(["#"]), ISO, displace=False)
        assert contour.keys == ((0, -1), (1, 0), (0, 1), (-1, 0))
        assert contour.signed_area == pytest.approx(0.5)
        assert contour.orientation == 1

    def test_ring_has_shape_and_hole(self) -> None:
        """Test that a ring gives a counterclockwise shape and a clockwise hole."""
        contours = extract_contours(_pixels(["###", "#.#", "###"]), ISO, displace=False)
        by_size = sorted(contours, key=len)
        assert [len(c) for c in by_size] == [4, 12]
        assert by_size[0].orientation == -1
        assert by_size[1].orientation == 1

    @pytest.mark.parametrize(
        ("mode", "sizes"),
        [
            (ConnectivityMode.DISCONNECT, [4, 4]),
            (ConnectivityMode.CONNECT, [8]),
        ],
    )
    def test_diagonal_pair(self, mode: ConnectivityMode, sizes: list[int]) -> None:
        """Test the two decisions at a corner shared by diagonal pixels.

        Parameters
        ----------
        mode : ConnectivityMode
            Decision at the shared corner.
        sizes : list[int]
            Expected contour lengths.
        """
        contours = extract_contours(_pixels(["#.", ".#"]), ISO, mode, displace=False)
        assert sorted(len(c) for c in contours) == sizes
        assert all(c.orientation == 1 for c in contours)

    @pytest.mark.parametrize(("threshold", "sizes"), [(None, [8]), (101.0, [4, 4])])
    def test_mixed(self, threshold: float | None, sizes: list[int]) -> None:
        """Test that mixed mode compares the corner average with the threshold.

        Parameters
        ----------
        threshold : float | None
            Mixed-mode threshold.
        sizes : list[int]
            Expected contour lengths.
        """
        grid = PixelGrid(np.array([[200, 0], [0, 200]], dtype=np.uint8))
        iso = IsoConfig(100, mixed_threshold=threshold)
        contours = extract_contours(grid, iso, ConnectivityMode.MIXED, displace=False)
        assert sorted(len(c) for c in contours) == sizes

    def test_every_vector_used_once(self) -> None:
        """Test that linking partitions the vectors."""
        grid = _pixels(["#.#.", ".#.#", "##..", "..##"])
        icvs = collect_icvs(grid, ISO)
        contours = link_contours(icvs, ConnectivityMode.DISCONNECT, grid, ISO)
        used = [icv for c in contours for icv in c.icvs]
        assert sorted(used, key=lambda i: (i.midpoint, i.owner)) == sorted(
            icvs, key=lambda i: (i.midpoint, i.owner)
        )

    def test_empty_image(self) -> None:
        """Test that an image without active pixels has no contours."""
        assert extract_contours(_pixels(["..", ".."]), ISO) == []


class TestDisplace:
    """Tests for support-point displacement in the plane."""

    def test_interpolated_edge(self) -> None:
        """Test that interior edges slide to the isovalue."""
        grid = PixelGrid(np.array([[133], [0]], dtype=np.uint8))
        (contour,) = extract_contours(grid, IsoConfig(100))
        right = contour.points[contour.keys.index((1, 0))]
        np.testing.assert_allclose(right, [33 / 133, 0.0])
        left = contour.points[contour.keys.index((-1, 0))]
        np.testing.assert_allclose(left, [-0.5, 0.0])

    def test_without_vectors(self) -> None:
        """Test that contours without vectors are returned unchanged."""
        contour = Contour2D(keys=((0, 0),), points=np.zeros((1, 2)))
        assert displace_contour(contour, _pixels(["#"]), ISO) is contour


class TestFromSlice:
    """Tests for PixelGrid.from_slice."""

    def test_axes_follow_volume(self) -> None:
        """Test that slice axes are the two axes following the normal."""
        values = np.arange(24, dtype=np.uint8).reshape(2, 3, 4)
        grid = ScalarGrid(values)
        np.testing.assert_array_equal(PixelGrid.from_slice(grid, 2, 1).values, values[:, :, 1])
        np.testing.assert_array_equal(PixelGrid.from_slice(grid, 0, 1).values, values[1])
        np.testing.assert_array_equal(PixelGrid.from_slice(grid, 1, 2).values, values[:, 2, :].T)

    def test_bad_layer(self) -> None:
        """Test that layers outside the grid are rejected."""
        grid = ScalarGrid(np.zeros((2, 2, 2), dtype=np.uint8))
        with pytest.raises(PreconditionError):
            PixelGrid.from_slice(grid, 2, 2)
