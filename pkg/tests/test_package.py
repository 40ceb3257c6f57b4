from __future__ import annotations

import importlib.metadata

import voxshell as m


def test_version():
    """Test that the version matches."""
    assert importlib.metadata.version("voxshell") == m.__version__


def test_public_names():
    """Test that the top-level names resolve."""
    for name in m.__all__:
        assert hasattr(m, name)
