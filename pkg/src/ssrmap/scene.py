"""Scene markup: templates with placeholders, instantiation, parsing.

A scene is described in a small XML dialect (rooms, sources, one receiver,
a reverb block, plus walkable-area and furniture annotations used by the
map UI). Scene files may contain placeholders -- all-caps tokens such as
``PROBEMUTE`` or ``RECEIVERAZIMUTH`` -- which are bound to concrete values
when the scene is instantiated for one rendering request.
"""
from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from importlib import resources
from typing import Optional

import numpy as np

from .seeds import fnv1a64

MODE_ENVIRONMENT = "environment"
MODE_HRIR = "hrir"

# All-caps tokens of length >= 4 are treated as placeholders. Scene authors
# keep ordinary attribute values lowercase (the bundled scene does).
PLACEHOLDER_RE = re.compile(r"\b[A-Z][A-Z0-9]{3,}\b")


class SceneError(Exception):
    pass


class SceneParseError(SceneError):
    """Malformed markup; carries the parser's line/column when available."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class SceneValidationError(SceneError):
    pass


@dataclass(frozen=True)
class SceneTemplate:
    raw_text: str
    placeholder_names: frozenset


@dataclass(frozen=True)
class SceneParams:
    """Parameter set for one rendering request.

    Follows the render-script convention: ``tv_on``/``connected_room_on``
    mean the corresponding sources are audible in environment mode; in hrir
    mode all noise sources are muted and the probe is active regardless.
    """

    mode: str = MODE_ENVIRONMENT
    outfile: Optional[str] = None
    start_s: float = 0.0
    duration_s: Optional[float] = None
    probe_xyz: tuple = (2.5, 2.5, 1.5)
    receiver_type: str = "ortf"
    receiver_azimuth_deg: float = 0.0
    tv_on: bool = True
    connected_room_on: bool = True
    reverb_on: bool = True

    def __post_init__(self):
        if self.mode not in (MODE_ENVIRONMENT, MODE_HRIR):
            raise SceneValidationError(f"unknown mode {self.mode!r}")
        if self.receiver_type != "ortf":
            raise SceneValidationError(
                f"unsupported receiver type {self.receiver_type!r}"
            )
        if self.start_s < 0:
            raise SceneValidationError("start_s must be >= 0")
        if self.duration_s is None:
            object.__setattr__(
                self, "duration_s",
                10.0 if self.mode == MODE_ENVIRONMENT else 1.0,
            )
        if self.duration_s <= 0:
            raise SceneValidationError("duration_s must be > 0")
        if not -180.0 <= self.receiver_azimuth_deg <= 180.0:
            raise SceneValidationError("receiver azimuth outside [-180, 180]")
        if len(self.probe_xyz) != 3:
            raise SceneValidationError("probe_xyz must have 3 components")


@dataclass(frozen=True)
class Room:
    name: str
    origin: np.ndarray
    size: np.ndarray
    reflection: float

    def contains(self, point, tol: float = 1e-9) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(
            np.all(p >= self.origin - tol)
            and np.all(p <= self.origin + self.size + tol)
        )


@dataclass(frozen=True)
class SignalSpec:
    kind: str
    level_db_spl: float
    attrs: dict


@dataclass(frozen=True)
class SourceSpec:
    name: str
    position: np.ndarray
    signal: SignalSpec
    muted: bool
    directivity: str = "omni"


@dataclass(frozen=True)
class ReceiverSpec:
    name: str
    type: str
    position: np.ndarray
    azimuth_deg: float


@dataclass(frozen=True)
class ReverbSpec:
    enabled: bool
    rt60_s: float
    level_db: float
    seed: int


@dataclass(frozen=True)
class WalkableArea:
    """Axis-aligned rectangle of candidate talker positions."""

    x0: float
    y0: float
    x1: float
    y1: float
    z: float

    def lattice(self, mesh_m: float):
        """(nx, ny) lattice point counts at the given mesh size."""
        nx = int(np.floor((self.x1 - self.x0) / mesh_m + 1e-9)) + 1
        ny = int(np.floor((self.y1 - self.y0) / mesh_m + 1e-9)) + 1
        return nx, ny

    def cell_position(self, ix: int, iy: int, mesh_m: float):
        return (self.x0 + ix * mesh_m, self.y0 + iy * mesh_m, self.z)


@dataclass(frozen=True)
class SceneInstance:
    name: str
    sample_rate: int
    rooms: tuple
    sources: tuple
    receiver: ReceiverSpec
    reverb: ReverbSpec
    walkable: WalkableArea
    furniture: tuple = ()
    apertures: tuple = ()
    mode: str = MODE_ENVIRONMENT
    start_s: float = 0.0
    duration_s: float = 10.0

    def room_of(self, point) -> Room:
        for room in self.rooms:
            if room.contains(point):
                return room
        raise SceneValidationError(f"position {point} lies outside all rooms")

    @property
    def main_room(self) -> Room:
        return self.room_of(self.receiver.position)

    def source(self, name: str) -> SourceSpec:
        for src in self.sources:
            if src.name == name:
                return src
        raise KeyError(name)

    def unmuted_sources(self):
        return [s for s in self.sources if not s.muted]


def parse_template(text: str) -> SceneTemplate:
    """Parse scene markup into a template, extracting its placeholder set.

    The text must be well-formed XML apart from the placeholder tokens
    (placeholders are legal attribute values / text, so plain XML parsing
    applies). Duplicate source names are rejected here so instantiation can
    assume a consistent template.
    """
    if not text or not text.strip():
        raise SceneParseError("empty scene text")
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, column = exc.position
        raise SceneParseError(f"malformed scene markup: {exc.msg}",
                              line=line, column=column) from exc
    names = [el.get("name") for el in root.iter("source")]
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise SceneValidationError(f"duplicate source names: {sorted(dupes)}")
    placeholders = frozenset(PLACEHOLDER_RE.findall(text))
    return SceneTemplate(raw_text=text, placeholder_names=placeholders)


def bundled_template() -> SceneTemplate:
    text = (resources.files("ssrmap.data") / "living_room.scene.xml").read_text()
    return parse_template(text)


def _xml_bool(value: str, context: str) -> bool:
    v = value.strip().lower()
    if v in ("true", "1", "yes"):
        return True
    if v in ("false", "0", "no"):
        return False
    raise SceneValidationError(f"{context}: expected boolean, got {value!r}")


def _vector(value: str, n: int, context: str) -> np.ndarray:
    parts = value.split()
    if len(parts) != n:
        raise SceneValidationError(
            f"{context}: expected {n} numbers, got {value!r}"
        )
    return np.array([float(p) for p in parts])


def substitutions(params: SceneParams) -> dict:
    """Placeholder bindings for one rendering request."""
    env = params.mode == MODE_ENVIRONMENT
    x, y, z = params.probe_xyz
    return {
        "PROBEMUTE": "true" if env else "false",
        "PROBEXXX": f"{x:.6g}",
        "PROBEYYY": f"{y:.6g}",
        "PROBEZZZ": f"{z:.6g}",
        "PROBESTART": f"{params.start_s:.6g}",
        "RECEIVERAZIMUTH": f"{params.receiver_azimuth_deg:.6g}",
        "TVMUTE": "false" if (env and params.tv_on) else "true",
        "CRMUTE": "false" if (env and params.connected_room_on) else "true",
        "REVERB": "true" if params.reverb_on else "false",
    }


def instantiate(tpl: SceneTemplate, params: SceneParams) -> SceneInstance:
    """Bind every placeholder and parse the result into a typed scene.

    Raises if any placeholder token survives substitution or if a source or
    the probe ends up outside all room volumes.
    """
    bindings = substitutions(params)
    text = tpl.raw_text
    for name, value in bindings.items():
        text = re.sub(rf"\b{name}\b", value, text)
    leftover = PLACEHOLDER_RE.findall(text)
    if leftover:
        raise SceneValidationError(
            f"unbound placeholders after substitution: {sorted(set(leftover))}"
        )
    instance = _parse_instance(text, params)
    _validate_instance(instance, params)
    return instance


def _parse_instance(text: str, params: SceneParams) -> SceneInstance:
    root = ET.fromstring(text)
    if root.tag != "scene":
        raise SceneValidationError(f"root element must be <scene>, got {root.tag}")
    sample_rate = int(root.get("samplerate", "16000"))

    rooms = []
    for el in root.iter("room"):
        rooms.append(Room(
            name=el.get("name", f"room{len(rooms)}"),
            origin=_vector(el.get("origin", "0 0 0"), 3, "room origin"),
            size=_vector(el.get("size"), 3, "room size"),
            reflection=float(el.get("reflection", "0.7")),
        ))
    if not rooms:
        raise SceneValidationError("scene has no rooms")

    sources = []
    for el in root.iter("source"):
        sig_el = el.find("signal")
        if sig_el is None:
            raise SceneValidationError(
                f"source {el.get('name')!r} has no <signal> element"
            )
        attrs = dict(sig_el.attrib)
        kind = attrs.pop("kind")
        level = float(attrs.pop("level", "60"))
        sources.append(SourceSpec(
            name=el.get("name"),
            position=_vector(el.get("position"), 3, "source position"),
            signal=SignalSpec(kind=kind, level_db_spl=level, attrs=attrs),
            muted=_xml_bool(el.get("mute", "false"), "source mute"),
        ))

    receivers = root.findall("receiver")
    if len(receivers) != 1:
        raise SceneValidationError(
            f"scene must have exactly one receiver, found {len(receivers)}"
        )
    rel = receivers[0]
    receiver = ReceiverSpec(
        name=rel.get("name", "listener"),
        type=rel.get("type", "ortf"),
        position=_vector(rel.get("position"), 3, "receiver position"),
        azimuth_deg=float(rel.get("azimuth", "0")),
    )

    rev_el = root.find("reverb")
    if rev_el is not None:
        reverb = ReverbSpec(
            enabled=_xml_bool(rev_el.get("enabled", "true"), "reverb enabled"),
            rt60_s=float(rev_el.get("rt60", "0.4")),
            level_db=float(rev_el.get("level_db", "-28")),
            seed=int(rev_el.get("seed", "0")),
        )
    else:
        reverb = ReverbSpec(enabled=False, rt60_s=0.4, level_db=-28.0, seed=0)

    walk_el = root.find("walkable")
    if walk_el is not None:
        walkable = WalkableArea(
            x0=float(walk_el.get("x0")), y0=float(walk_el.get("y0")),
            x1=float(walk_el.get("x1")), y1=float(walk_el.get("y1")),
            z=float(walk_el.get("z", "1.5")),
        )
    else:
        r0 = rooms[0]
        walkable = WalkableArea(
            x0=float(r0.origin[0] + 0.75), y0=float(r0.origin[1] + 0.75),
            x1=float(r0.origin[0] + r0.size[0] - 0.75),
            y1=float(r0.origin[1] + r0.size[1] - 0.75), z=1.5,
        )

    furniture = tuple(
        (el.get("name"), tuple(float(v) for v in el.get("box").split()))
        for el in root.iter("furniture")
    )
    apertures = tuple(
        (el.get("name"), dict(el.attrib)) for el in root.iter("aperture")
    )

    return SceneInstance(
        name=root.get("name", "scene"),
        sample_rate=sample_rate,
        rooms=tuple(rooms),
        sources=tuple(sources),
        receiver=receiver,
        reverb=reverb,
        walkable=walkable,
        furniture=furniture,
        apertures=apertures,
        mode=params.mode,
        start_s=params.start_s,
        duration_s=params.duration_s,
    )


def _validate_instance(instance: SceneInstance, params: SceneParams) -> None:
    for src in instance.sources:
        if src.name == "probe" and src.muted:
            continue  # muted probe keeps its placeholder-free default spot
        instance.room_of(src.position)  # raises if outside
    instance.room_of(instance.receiver.position)
    if params.mode == MODE_HRIR:
        probe = instance.source("probe")
        if probe.muted:
            raise SceneValidationError("hrir mode requires an unmuted probe")
        for src in instance.sources:
            if src.name != "probe" and not src.muted:
                raise SceneValidationError(
                    f"hrir mode requires noise source {src.name!r} muted"
                )


def serialize(instance: SceneInstance) -> str:
    """Canonical text form of an instantiated scene (placeholder-free)."""
    lines = [f'<scene name="{instance.name}" samplerate="{instance.sample_rate}">']
    for room in instance.rooms:
        o, s = room.origin, room.size
        lines.append(
            f'  <room name="{room.name}" origin="{o[0]:g} {o[1]:g} {o[2]:g}"'
            f' size="{s[0]:g} {s[1]:g} {s[2]:g}" reflection="{room.reflection:g}"/>'
        )
    for name, attrs in instance.apertures:
        attr_text = " ".join(f'{k}="{v}"' for k, v in attrs.items() if k != "name")
        lines.append(f'  <aperture name="{name}" {attr_text}/>')
    for name, box in instance.furniture:
        lines.append(
            f'  <furniture name="{name}" box="{" ".join(f"{v:g}" for v in box)}"/>'
        )
    w = instance.walkable
    lines.append(
        f'  <walkable x0="{w.x0:g}" y0="{w.y0:g}" x1="{w.x1:g}" y1="{w.y1:g}" z="{w.z:g}"/>'
    )
    r = instance.receiver
    lines.append(
        f'  <receiver name="{r.name}" type="{r.type}"'
        f' position="{r.position[0]:g} {r.position[1]:g} {r.position[2]:g}"'
        f' azimuth="{r.azimuth_deg:g}"/>'
    )
    for src in instance.sources:
        p = src.position
        lines.append(
            f'  <source name="{src.name}" mute="{"true" if src.muted else "false"}"'
            f' position="{p[0]:g} {p[1]:g} {p[2]:g}">'
        )
        sig = src.signal
        attr_text = " ".join(f'{k}="{v}"' for k, v in sig.attrs.items())
        lines.append(
            f'    <signal kind="{sig.kind}" level="{sig.level_db_spl:g}"'
            + (f" {attr_text}" if attr_text else "") + "/>"
        )
        lines.append("  </source>")
    v = instance.reverb
    lines.append(
        f'  <reverb enabled="{"true" if v.enabled else "false"}" rt60="{v.rt60_s:g}"'
        f' level_db="{v.level_db:g}" seed="{v.seed}"/>'
    )
    lines.append("</scene>")
    return "\n".join(lines) + "\n"


def scene_hash(tpl: SceneTemplate) -> int:
    """Stable 64-bit identity of a scene template's text."""
    return fnv1a64(tpl.raw_text)
