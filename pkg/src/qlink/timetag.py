"""Photon time-tag streams and the v1 text file format.

A stream is a pair of parallel arrays: integer-picosecond timestamps and
small-integer channel codes, sorted by timestamp. The file format is::

    #qlink-timetag v1 epoch=<ISO8601>
    <timestamp_ps>,<channel>
    ...

with channel one of ``fire``, ``return``, ``background``.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import EpochMismatch, TimeTagFormatError

CHANNELS = ("fire", "return", "background")
FIRE, RETURN, BACKGROUND = 0, 1, 2
_CODE = {name: i for i, name in enumerate(CHANNELS)}

HEADER_PREFIX = "#qlink-timetag v1 epoch="
# at most 18 digits keeps every timestamp inside int64
_EVENT_LINES = re.compile(r"(?:\d{1,18},(?:fire|return|background)\n)*")
DEFAULT_EPOCH = "2000-01-01T00:00:00Z"


@dataclass(frozen=True)
class PhotonEvent:
    timestamp: int
    channel: str


@dataclass(frozen=True, eq=False)
class TimeTagStream:
    timestamps: np.ndarray
    channels: np.ndarray
    epoch: str = DEFAULT_EPOCH
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ts = np.ascontiguousarray(self.timestamps, dtype=np.int64)
        ch = np.ascontiguousarray(self.channels, dtype=np.uint8)
        if ts.shape != ch.shape or ts.ndim != 1:
            raise ValueError("timestamps and channels must be 1-D arrays of equal length")
        if ts.size and (ts[0] < 0 or np.any(np.diff(ts) < 0)):
            raise ValueError("timestamps must be non-negative and sorted")
        if ch.size and ch.max() >= len(CHANNELS):
            raise ValueError("unknown channel code")
        ts.setflags(write=False)
        ch.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "channels", ch)

    @classmethod
    def empty(cls, epoch: str = DEFAULT_EPOCH, meta=None) -> "TimeTagStream":
        return cls(np.empty(0, np.int64), np.empty(0, np.uint8), epoch, dict(meta or {}))

    @classmethod
    def from_unsorted(cls, timestamps, channels, epoch: str = DEFAULT_EPOCH,
                      meta=None) -> "TimeTagStream":
        ts = np.asarray(timestamps, dtype=np.int64)
        ch = np.asarray(channels, dtype=np.uint8)
        order = np.argsort(ts, kind="stable")
        return cls(ts[order], ch[order], epoch, dict(meta or {}))

    def __len__(self):
        return int(self.timestamps.size)

    def __iter__(self):
        for t, c in zip(self.timestamps.tolist(), self.channels.tolist()):
            yield PhotonEvent(t, CHANNELS[c])

    def __eq__(self, other):
        if not isinstance(other, TimeTagStream):
            return NotImplemented
        return (self.epoch == other.epoch
                and np.array_equal(self.timestamps, other.timestamps)
                and np.array_equal(self.channels, other.channels))

    def select(self, *names: str) -> np.ndarray:
        """Timestamps of events on the named channels."""
        codes = [_CODE[n] for n in names]
        return self.timestamps[np.isin(self.channels, codes)]

    def count(self, name: str) -> int:
        return int(np.count_nonzero(self.channels == _CODE[name]))

    def subset(self, mask) -> "TimeTagStream":
        return TimeTagStream(self.timestamps[mask], self.channels[mask], self.epoch, dict(self.meta))


def merge_streams(a: TimeTagStream, b: TimeTagStream) -> TimeTagStream:
    """Sorted merge; ties keep ``a``'s events before ``b``'s."""
    if a.epoch != b.epoch:
        raise EpochMismatch(f"cannot merge epochs {a.epoch!r} and {b.epoch!r}")
    ts = np.concatenate([a.timestamps, b.timestamps])
    ch = np.concatenate([a.channels, b.channels])
    order = np.argsort(ts, kind="stable")
    meta = {**b.meta, **a.meta}
    return TimeTagStream(ts[order], ch[order], a.epoch, meta)


def apply_dead_time(stream: TimeTagStream, dead_time_ps: int) -> TimeTagStream:
    """Drop events arriving within ``dead_time_ps`` of the last kept event on the same channel.

    Non-paralysable: a dropped event does not extend the dead interval.
    """
    if dead_time_ps <= 0 or len(stream) < 2:
        return stream
    keep = np.ones(len(stream), dtype=bool)
    for code in range(len(CHANNELS)):
        idx = np.flatnonzero(stream.channels == code)
        if idx.size < 2:
            continue
        ts = stream.timestamps[idx]
        # fast path: nothing to drop on this channel
        if np.all(np.diff(ts) >= dead_time_ps):
            continue
        last = None
        for j, t in zip(idx.tolist(), ts.tolist()):
            if last is not None and t - last < dead_time_ps:
                keep[j] = False
            else:
                last = t
    return stream.subset(keep)


def write_timetag(stream: TimeTagStream, path) -> None:
    names = np.array(CHANNELS)[stream.channels]
    body = "\n".join(f"{t},{n}" for t, n in zip(stream.timestamps.tolist(), names.tolist()))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"{HEADER_PREFIX}{stream.epoch}\n")
        if body:
            fh.write(body)
            fh.write("\n")


def read_timetag(path) -> TimeTagStream:
    """Parse a v1 time-tag file; raises TimeTagFormatError with the offending line."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, "r", encoding="ascii", errors="strict", newline="") as fh:
        try:
            text = fh.read()
            lines = text.split("\n")
        except UnicodeDecodeError as exc:
            raise TimeTagFormatError(f"non-ASCII content: {exc}") from exc
    if not lines or not lines[0].startswith(HEADER_PREFIX):
        raise TimeTagFormatError("missing '#qlink-timetag v1' header", 1)
    epoch = lines[0][len(HEADER_PREFIX):]
    if not epoch:
        raise TimeTagFormatError("empty epoch in header", 1)
    body = text[len(lines[0]) + 1:]
    if not body:
        return TimeTagStream.empty(epoch)
    if not body.endswith("\n"):
        body += "\n"
    if not _EVENT_LINES.fullmatch(body):
        _locate_error(lines)
    ts, ch = _parse_body(body)
    bad = np.flatnonzero(np.diff(ts) < 0)
    if bad.size:
        raise TimeTagFormatError("timestamps not sorted", int(bad[0]) + 3)
    return TimeTagStream(ts, ch, epoch)


def _parse_body(body: str):
    for name, code in _CODE.items():
        body = body.replace(f",{name}\n", f" {code}\n")
    pairs = np.fromstring(body, dtype=np.int64, sep=" ").reshape(-1, 2)
    return pairs[:, 0].copy(), pairs[:, 1].astype(np.uint8)


def _locate_error(lines):
    """Line-by-line pass that raises on the first bad line."""
    if lines[-1] == "":
        lines = lines[:-1]
    for i, line in enumerate(lines[1:]):
        t_str, sep, name = line.partition(",")
        if not sep or name not in _CODE or not (t_str.isdigit() and len(t_str) <= 18):
            raise TimeTagFormatError(f"malformed event {line!r}", i + 2)
    raise TimeTagFormatError("malformed event lines")
