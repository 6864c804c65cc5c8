"""Shared fixtures: generated datasets are session-scoped, outputs are not."""

from __future__ import annotations

import pytest

import fixture_gen
from travgrid.config import parse_config_text


@pytest.fixture(scope="session")
def light_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("light_dataset")
    fixture_gen.generate(root, fixture_gen.LIGHT)
    return root


@pytest.fixture(scope="session")
def dense_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("dense_dataset")
    fixture_gen.generate(root, fixture_gen.DENSE)
    return root


@pytest.fixture
def light_config(light_root, tmp_path):
    out = tmp_path / "out"
    text = fixture_gen.fixture_config_text(light_root, out)
    return parse_config_text(text, source="<light fixture>")


@pytest.fixture
def dense_config(dense_root, tmp_path):
    out = tmp_path / "out"
    text = fixture_gen.fixture_config_text(dense_root, out, max_range=12.0,
                                           test_frames="5..9")
    return parse_config_text(text, source="<dense fixture>")
