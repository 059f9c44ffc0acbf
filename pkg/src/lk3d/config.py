"""Pipeline configuration: sensor presets, parameter bundles, text round-trip.

The sensor preset fixes the only dataset-dependent default (the
distinct-scan-line threshold: 10 for 64-ring sensors, 4 for 16-ring);
every field can be overridden, from a ``key=value`` config file or from
CLI flags.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .descriptor import DescriptorParams
from .extraction import ExtractorParams
from .matching import MatcherParams
from .scan_io import SensorPreset, sensor_preset


@dataclass(frozen=True)
class PipelineConfig:
    preset: str = "hdl64"
    extractor: ExtractorParams = field(default_factory=ExtractorParams)
    descriptor: DescriptorParams = field(default_factory=DescriptorParams)
    matcher: MatcherParams = field(default_factory=MatcherParams)
    confidence_threshold: float = 0.5  # match score / max nonzero dims
    use_centroids: bool = False        # register on keypoint centroids instead of edge matches
    use_ransac: bool = False
    threads: int = 1
    seed: int = 0

    @classmethod
    def from_preset(cls, name: str = "hdl64", **overrides) -> "PipelineConfig":
        p = sensor_preset(name)
        cfg = cls(preset=name,
                  extractor=ExtractorParams(min_scan_lines=p.min_scan_lines))
        return cfg.with_overrides(**overrides) if overrides else cfg

    @property
    def sensor(self) -> SensorPreset:
        return sensor_preset(self.preset)

    def with_overrides(self, **overrides) -> "PipelineConfig":
        """Replace top-level or dotted nested fields, e.g. matcher.score_threshold."""
        cfg = self
        for key, value in overrides.items():
            if value is None:
                continue
            cfg = cfg._set(key, value)
        return cfg

    def _set(self, key: str, value) -> "PipelineConfig":
        if "." in key:
            group, name = key.split(".", 1)
            sub = getattr(self, group)
            typed = _coerce(type(sub), name, value)
            return replace(self, **{group: replace(sub, **{name: typed})})
        typed = _coerce(PipelineConfig, key, value)
        return replace(self, **{key: typed})

    def to_text(self) -> str:
        lines = [f"preset={self.preset}"]
        for key in ("confidence_threshold", "use_centroids", "use_ransac", "threads", "seed"):
            lines.append(f"{key}={_fmt(getattr(self, key))}")
        for group in ("extractor", "descriptor", "matcher"):
            sub = getattr(self, group)
            for f in fields(sub):
                lines.append(f"{group}.{f.name}={_fmt(getattr(sub, f.name))}")
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        cfg: PipelineConfig | None = None
        pending: dict[str, str] = {}
        for raw in Path(path).read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}: expected key=value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key == "preset":
                cfg = cls.from_preset(value)
            else:
                pending[key] = value
        cfg = cfg or cls()
        return cfg.with_overrides(**pending)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(owner, name: str, value):
    target = {f.name: f.type for f in fields(owner)}.get(name)
    if target is None:
        raise ValueError(f"unknown config field {name!r}")
    if not isinstance(value, str):
        return value
    if target in ("int", int):
        return int(value)
    if target in ("float", float):
        return float(value)
    if target in ("bool", bool):
        if value.lower() in ("true", "1", "yes"):
            return True
        if value.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"bad boolean {value!r} for {name}")
    return value
