"""On-disk cache of enumerated point tables, keyed by the Gram matrix."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .points import enumerate_array, row_heights
from .quadform import QuadraticForm

log = logging.getLogger(__name__)

SPOT_CHECK_MAX = 24


def form_hash(form: QuadraticForm) -> str:
    return hashlib.sha256(json.dumps(form.gram).encode()).hexdigest()[:16]


@dataclass
class EnumerationCache:
    form_hash: str
    h_max: int
    table: np.ndarray
    hit: bool = False


def _path(cache_dir: Path, form: QuadraticForm) -> Path:
    return Path(cache_dir) / f"points-{form_hash(form)}.npz"


def _load(path: Path, form: QuadraticForm) -> Optional[tuple[int, np.ndarray]]:
    if not path.exists():
        return None
    try:
        with np.load(path, allow_pickle=False) as z:
            gram = z["gram"]
            h = int(z["h_max"])
            table = z["table"].astype(np.int64)
        if gram.tolist() != [list(r) for r in form.gram] or table.ndim != 2 or table.shape[1] != form.size:
            raise ValueError("cache does not match the form")
        hs = row_heights(table)
        if len(table) and (hs.max() > h or np.any(np.diff(hs) < 0)):
            raise ValueError("cache table is not a sorted prefix")
    except Exception as err:  # noqa: BLE001 -- any unreadable file is rebuilt
        log.warning("corrupt enumeration cache %s (%s); rebuilding", path, err)
        return None
    return h, table


def _save(path: Path, form: QuadraticForm, h: int, table: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".npz")
    os.close(fd)
    with open(tmp, "wb") as fh:
        np.savez(fh, gram=np.array(form.gram, dtype=np.int64), h_max=np.int64(h), table=table)
    os.replace(tmp, path)


def _prefix(table: np.ndarray, h: int) -> np.ndarray:
    return table[row_heights(table) <= h] if len(table) else table


def cache_get_or_build(form: QuadraticForm, h_max: int, cache_dir, seed: int = 0) -> EnumerationCache:
    """Table of all points with height <= h_max, loaded or built and persisted.

    A hit is spot-checked against a fresh enumeration up to a random small
    height; a request beyond the stored height rebuilds and checks that the
    old table is a prefix of the new one.
    """
    path = _path(Path(cache_dir), form)
    stored = _load(path, form)
    key = form_hash(form)
    if stored is not None:
        h_old, table = stored
        if h_old >= h_max:
            out = _prefix(table, h_max)
            hs = int(np.random.default_rng(seed).integers(1, min(h_max, SPOT_CHECK_MAX) + 1))
            fresh = enumerate_array(form, hs)
            if not np.array_equal(fresh, _prefix(out, hs)):
                log.warning("enumeration cache %s failed its spot check; rebuilding", path)
            else:
                return EnumerationCache(key, h_max, out, hit=True)
    table = enumerate_array(form, h_max)
    if stored is not None and stored[0] < h_max and not np.array_equal(stored[1], _prefix(table, stored[0])):
        log.warning("cached table in %s disagrees with a fresh enumeration", path)
    _save(path, form, h_max, table)
    return EnumerationCache(key, h_max, table)
