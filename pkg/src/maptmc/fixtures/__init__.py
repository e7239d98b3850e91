"""Bundled example models."""

from importlib import resources


def fixture_path(name):
    """Filesystem path of a bundled model file, e.g. fixture_path('two_tasks.json')."""
    return resources.files(__package__) / name


def load_fixture(name):
    from ..model import loads_model
    return loads_model(fixture_path(name).read_text(encoding="utf-8"))
