"""Cache-size detection from the Linux sysfs topology.

Containers and some VMs hide the cache hierarchy; every function here
returns None in that case and callers must take an explicit size flag.
"""

from __future__ import annotations

import glob
import os

__all__ = ["detect_cache_sizes", "detect_l3_bytes", "detect_cache_budget"]

_UNITS = {"K": 1024, "M": 1024**2, "G": 1024**3}


def _parse_size(text: str) -> int:
    text = text.strip()
    if text and text[-1].upper() in _UNITS:
        return int(text[:-1]) * _UNITS[text[-1].upper()]
    return int(text)


def detect_cache_sizes() -> dict[int, int] | None:
    """Total bytes per cache level, counting each shared instance once."""
    seen: set[tuple[int, str]] = set()
    totals: dict[int, int] = {}
    for index_dir in glob.glob("/sys/devices/system/cpu/cpu*/cache/index*"):
        try:
            with open(os.path.join(index_dir, "level")) as f:
                level = int(f.read())
            with open(os.path.join(index_dir, "type")) as f:
                ctype = f.read().strip()
            with open(os.path.join(index_dir, "size")) as f:
                size = _parse_size(f.read())
            with open(os.path.join(index_dir, "shared_cpu_list")) as f:
                shared = f.read().strip()
        except (OSError, ValueError):
            continue
        if ctype == "Instruction":
            continue
        key = (level, shared)
        if key in seen:
            continue
        seen.add(key)
        totals[level] = totals.get(level, 0) + size
    return totals or None


def detect_l3_bytes() -> int | None:
    sizes = detect_cache_sizes()
    if sizes and 3 in sizes:
        return sizes[3]
    return None


def detect_cache_budget() -> int | None:
    """Total L2+L3 bytes, the default budget for cache-resident structures."""
    sizes = detect_cache_sizes()
    if not sizes:
        return None
    budget = sizes.get(2, 0) + sizes.get(3, 0)
    return budget or None
