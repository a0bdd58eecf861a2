"""Per-tick experiment logs and their CSV representation.

A RunLog holds one column per logged controller signal.  Drop runs log seven
columns, bilateral runs add the plane distance and the wall position:

    t,q,qdot,F_des,I_des,c,F_mon[,d,q_lim]

Files start with ``# key = value`` comment lines carrying the fully resolved
configuration and seed, so any log can be reproduced and re-analyzed without
the original config file.  Floats are written with 9 significant digits; the
contact flag is 0/1; unknown values (no plane received yet, wall not set) are
NaN.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

__all__ = [
    "DROP_COLUMNS",
    "BILATERAL_COLUMNS",
    "LogRecord",
    "RunLog",
    "write_log_csv",
    "read_log_csv",
]

DROP_COLUMNS = ("t", "q", "qdot", "F_des", "I_des", "c", "F_mon")
BILATERAL_COLUMNS = DROP_COLUMNS + ("d", "q_lim")


@dataclass
class LogRecord:
    """One controller tick of logged signals (d/q_lim NaN for drop runs)."""

    t: float
    q: float
    qdot: float
    F_des: float
    I_des: float
    c: bool
    F_mon: float
    d: float = float("nan")
    q_lim: float = float("nan")


@dataclass
class RunLog:
    """Column-wise experiment trace plus resolved-config metadata."""

    t: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    F_des: np.ndarray
    I_des: np.ndarray
    c: np.ndarray
    F_mon: np.ndarray
    d: np.ndarray | None = None
    q_lim: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def columns(self) -> tuple[str, ...]:
        return BILATERAL_COLUMNS if self.d is not None else DROP_COLUMNS

    def row(self, i: int) -> LogRecord:
        return LogRecord(
            t=float(self.t[i]),
            q=float(self.q[i]),
            qdot=float(self.qdot[i]),
            F_des=float(self.F_des[i]),
            I_des=float(self.I_des[i]),
            c=bool(self.c[i]),
            F_mon=float(self.F_mon[i]),
            d=float(self.d[i]) if self.d is not None else float("nan"),
            q_lim=float(self.q_lim[i]) if self.q_lim is not None else float("nan"),
        )

    @staticmethod
    def from_lists(cols: dict, meta: dict) -> "RunLog":
        kwargs = {}
        for name in DROP_COLUMNS:
            dtype = bool if name == "c" else float
            kwargs[name] = np.asarray(cols[name], dtype=dtype)
        for name in ("d", "q_lim"):
            kwargs[name] = np.asarray(cols[name], dtype=float) if name in cols else None
        return RunLog(meta=dict(meta), **kwargs)


def _flatten(prefix: str, obj, out: list) -> None:
    if isinstance(obj, dict):
        for k in obj:
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], out)
    else:
        if isinstance(obj, tuple):
            obj = list(obj)
        out.append((prefix, obj))


def _meta_lines(meta: dict) -> list[str]:
    flat: list = []
    _flatten("", meta, flat)
    return [f"# {key} = {_fmt_meta_value(val)}" for key, val in flat]


def _fmt_meta_value(val) -> str:
    if isinstance(val, float):
        return repr(val)
    if isinstance(val, list):
        return "[" + ", ".join(_fmt_meta_value(v) for v in val) + "]"
    return str(val)


def _unflatten(pairs: list[tuple[str, object]]) -> dict:
    root: dict = {}
    for key, val in pairs:
        node = root
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = val
    return root


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def write_log_csv(log: RunLog, path) -> None:
    cols = log.columns
    arrays = [getattr(log, name) for name in cols]
    with open(path, "w", newline="") as fh:
        for line in _meta_lines(log.meta):
            fh.write(line + "\n")
        fh.write(",".join(cols) + "\n")
        n = len(log)
        for i in range(n):
            parts = []
            for name, arr in zip(cols, arrays):
                if name == "c":
                    parts.append("1" if arr[i] else "0")
                else:
                    parts.append(_fmt(float(arr[i])))
            fh.write(",".join(parts) + "\n")


def read_log_csv(path) -> RunLog:
    meta_pairs: list[tuple[str, object]] = []
    header: list[str] | None = None
    cols: dict[str, list] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" in body:
                    key, _, val = body.partition("=")
                    meta_pairs.append((key.strip(), yaml.safe_load(val.strip())))
                continue
            if header is None:
                header = line.split(",")
                if tuple(header) not in (DROP_COLUMNS, BILATERAL_COLUMNS):
                    raise ValueError(f"{path}: line {lineno}: unexpected header {line!r}")
                cols = {name: [] for name in header}
                continue
            parts = line.split(",")
            if len(parts) != len(header):
                raise ValueError(
                    f"{path}: line {lineno}: expected {len(header)} fields, got {len(parts)}"
                )
            for name, text in zip(header, parts):
                try:
                    if name == "c":
                        if text not in ("0", "1"):
                            raise ValueError(f"contact flag must be 0 or 1, got {text!r}")
                        cols[name].append(text == "1")
                    else:
                        cols[name].append(float(text))
                except ValueError as exc:
                    raise ValueError(f"{path}: line {lineno}: {exc}") from None
    if header is None:
        raise ValueError(f"{path}: missing header row")
    return RunLog.from_lists(cols, _unflatten(meta_pairs))
