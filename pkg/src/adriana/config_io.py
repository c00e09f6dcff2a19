"""TOML reading/writing and access to the bundled presets."""

from __future__ import annotations

import sys
from importlib import resources
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import InvalidSpec


def loads(text: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise InvalidSpec(f"malformed TOML: {exc}") from exc


def load(path) -> dict:
    return loads(Path(path).read_text(encoding="utf-8"))


def dumps(mapping: dict) -> str:
    return tomli_w.dumps(mapping)


def preset_names() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("adriana.presets").iterdir()
                  if p.name.endswith(".toml"))


def load_preset(name: str) -> dict:
    """Bundled preset by name (``des-default``, ``seir-default``)."""
    f = resources.files("adriana.presets") / f"{name}.toml"
    if not f.is_file():
        raise InvalidSpec(f"no preset named {name!r}; available: {', '.join(preset_names())}")
    return loads(f.read_text(encoding="utf-8"))


def load_config_or_preset(ref) -> dict:
    """A path to a TOML file, or the name of a bundled preset."""
    p = Path(ref)
    if p.suffix == ".toml" and p.exists():
        return load(p)
    if p.suffix == ".toml":
        raise InvalidSpec(f"config file {ref} not found")
    return load_preset(str(ref))
