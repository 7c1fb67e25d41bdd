"""Campaign data model, CSV reading/writing and deflection components."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields
from typing import IO, Iterable, Optional, Union

import numpy as np

from deflect_stats.errors import MissingColumnError, ParseError, ValidationError

# Header name -> Observation attribute, in the fixed active-column order.
ACTIVE_COLUMNS = ("P", "T", "H", "rms1", "img", "rms2", "A", "z", "V")
_ACTIVE_ATTRS = (
    "pressure",
    "temperature",
    "humidity",
    "rms1",
    "img_count",
    "rms2",
    "azimuth",
    "zenith_distance",
    "velocity",
)
SUPPLEMENTARY_COLUMNS = ("xi", "eta")
LABEL_COLUMNS = ("star", "night")
HEADER = LABEL_COLUMNS + ACTIVE_COLUMNS + SUPPLEMENTARY_COLUMNS

ARCSEC_PER_DEGREE = 3600.0


@dataclass(frozen=True)
class Observation:
    """One star measurement: labels, nine active variables, optional xi/eta (arcsec)."""

    star: str
    night: str
    pressure: float
    temperature: float
    humidity: float
    rms1: float
    img_count: int
    rms2: float
    azimuth: float
    zenith_distance: float
    velocity: float
    xi: Optional[float] = None
    eta: Optional[float] = None

    def __post_init__(self):
        problems = _check_observation(self)
        if problems:
            raise ValidationError("; ".join(problems))

    def active_values(self) -> tuple:
        return tuple(getattr(self, a) for a in _ACTIVE_ATTRS)


def _check_observation(obs):
    problems = []
    if not obs.star:
        problems.append("star must be non-empty")
    if not obs.night:
        problems.append("night must be non-empty")
    for f in fields(obs):
        value = getattr(obs, f.name)
        if isinstance(value, float) and not math.isfinite(value):
            problems.append(f"{f.name} must be finite")
    if not 0.0 <= obs.humidity <= 100.0:
        problems.append(f"humidity {obs.humidity} outside [0, 100]")
    if obs.img_count < 0 or obs.img_count != int(obs.img_count):
        problems.append(f"img_count {obs.img_count} must be a non-negative integer")
    if not 0.0 <= obs.azimuth < 360.0:
        problems.append(f"azimuth {obs.azimuth} outside [0, 360)")
    if not 0.0 <= obs.zenith_distance <= 180.0:
        problems.append(f"zenith_distance {obs.zenith_distance} outside [0, 180]")
    return problems


@dataclass(frozen=True)
class Dataset:
    observations: tuple
    active_columns: tuple = ACTIVE_COLUMNS

    def __post_init__(self):
        object.__setattr__(self, "observations", tuple(self.observations))
        if len(self.observations) < 2:
            raise ValidationError(
                f"dataset needs at least 2 observations, got {len(self.observations)}"
            )
        if tuple(self.active_columns) != ACTIVE_COLUMNS:
            raise ValidationError(f"active columns must be {ACTIVE_COLUMNS}")

    def __len__(self):
        return len(self.observations)

    def matrix(self) -> np.ndarray:
        """I x 9 float matrix of the active variables."""
        return np.array([o.active_values() for o in self.observations], dtype=float)

    @property
    def nights(self) -> list:
        return [o.night for o in self.observations]

    @property
    def stars(self) -> list:
        return [o.star for o in self.observations]

    def has_supplementary(self, name: str) -> bool:
        return all(getattr(o, name) is not None for o in self.observations)

    def supplementary(self, name: str) -> np.ndarray:
        """Supplementary series ``xi`` or ``eta``; raises if any value is absent."""
        if name not in SUPPLEMENTARY_COLUMNS:
            raise KeyError(name)
        if not self.has_supplementary(name):
            raise MissingColumnError(name, f"supplementary column {name!r} is not available")
        return np.array([getattr(o, name) for o in self.observations], dtype=float)

    def subset(self, rows: Iterable[int]) -> "Dataset":
        return Dataset(tuple(self.observations[i] for i in rows))


def _parse_number(text, line, column):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"non-numeric value {text!r}", line, column) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite value {text!r}", line, column)
    return value


def parse_dataset(source: Union[bytes, str, IO], format: str = "csv") -> Dataset:
    """Parse a campaign table.

    ``source`` may be raw bytes, decoded text or a binary/text stream. Only the
    ``csv`` format is supported: UTF-8, mandatory header, LF or CRLF line ends.
    The ``xi`` and ``eta`` columns are optional; a column that is present must
    carry a value on every row.
    """
    if format != "csv":
        raise ParseError(f"unsupported format {format!r}")
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        try:
            source = source.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not valid UTF-8 ({exc})") from None
    elif source.startswith("\ufeff"):
        source = source[1:]

    reader = csv.reader(io.StringIO(source, newline=""))
    header = None
    for row in reader:
        if any(cell.strip() for cell in row):
            header = [cell.strip() for cell in row]
            break
    if header is None:
        raise ParseError("empty dataset")
    header_line = reader.line_num

    for name in LABEL_COLUMNS + ACTIVE_COLUMNS:
        if name not in header:
            raise MissingColumnError(name)
    if len(set(header)) != len(header):
        raise ParseError("duplicate column names in header", header_line)
    index = {name: header.index(name) for name in HEADER if name in header}

    observations = []
    for row in reader:
        line = reader.line_num
        if not any(cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ParseError(
                f"expected {len(header)} fields, found {len(row)}", line
            )
        values = {}
        for name in LABEL_COLUMNS:
            values[name] = row[index[name]].strip()
            if not values[name]:
                raise ParseError("empty label", line, name)
        for name, attr in zip(ACTIVE_COLUMNS, _ACTIVE_ATTRS):
            values[attr] = _parse_number(row[index[name]].strip(), line, name)
        img = values["img_count"]
        if img != int(img):
            raise ParseError(f"img must be integral, got {img!r}", line, "img")
        values["img_count"] = int(img)
        for name in SUPPLEMENTARY_COLUMNS:
            if name in index:
                values[name] = _parse_number(row[index[name]].strip(), line, name)
        try:
            observations.append(Observation(**values))
        except ValidationError as exc:
            raise ValidationError(f"line {line}: {exc}") from None

    if not observations:
        raise ParseError("empty dataset")
    return Dataset(tuple(observations))


def _fmt(value):
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def write_dataset(dataset: Dataset, stream: Optional[IO[str]] = None) -> str:
    """Serialize to the CSV format read by :func:`parse_dataset`.

    Floats are written with ``repr`` so a parse round trip is exact. Returns
    the text; it is also written to ``stream`` when one is given.
    """
    with_supp = [n for n in SUPPLEMENTARY_COLUMNS if dataset.has_supplementary(n)]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(LABEL_COLUMNS + ACTIVE_COLUMNS) + with_supp)
    for obs in dataset.observations:
        row = [obs.star, obs.night]
        row += [_fmt(v) for v in obs.active_values()]
        row += [_fmt(getattr(obs, n)) for n in with_supp]
        writer.writerow(row)
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def deflection_components(Phi, Lambda, phi, lam):
    """Vertical-deflection components from astronomic and geodetic coordinates.

    Parameters
    ----------
    Phi, Lambda : float or array_like
        Astronomic latitude and longitude in decimal degrees.
    phi, lam : float or array_like
        Geodetic latitude and longitude in decimal degrees; ``|phi| <= 90``.

    Returns
    -------
    xi, eta : float or ndarray
        Meridian and prime-vertical components in arcseconds,
        ``xi = Phi - phi`` and ``eta = (Lambda - lam) * cos(phi)``.
    """
    Phi, Lambda, phi, lam = (np.asarray(a, dtype=float) for a in (Phi, Lambda, phi, lam))
    for name, a in (("Phi", Phi), ("Lambda", Lambda), ("phi", phi), ("lambda", lam)):
        if not np.all(np.isfinite(a)):
            raise ValidationError(f"{name} must be finite")
    if np.any(np.abs(phi) > 90.0):
        raise ValidationError("geodetic latitude phi must lie in [-90, 90]")
    xi = (Phi - phi) * ARCSEC_PER_DEGREE
    # cos(+-90 deg) evaluates to ~6e-17, not 0
    cos_phi = np.where(np.abs(phi) == 90.0, 0.0, np.cos(np.radians(phi)))
    eta = (Lambda - lam) * cos_phi * ARCSEC_PER_DEGREE
    if xi.ndim == 0:
        return float(xi), float(eta)
    return xi, eta
