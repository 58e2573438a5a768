"""Pure-Python timeout list core. Mirrors ``_tom_fast`` exactly."""

from __future__ import annotations


class TomClosedError(RuntimeError):
    """Raised when inserting into a closed timeout list."""


class TimeoutCore:
    __slots__ = ("_now", "_closed", "_entries_by_key")

    def __init__(self, now: int = 0) -> None:
        self._now = now
        self._closed = False
        # (kind, subid) -> [deadline, expiry, cyclic, suspended]
        self._entries_by_key: dict[tuple[int, int], list] = {}

    @property
    def now(self) -> int:
        return self._now

    @property
    def closed(self) -> bool:
        return self._closed

    def __len__(self) -> int:
        return len(self._entries_by_key)

    def _insert(self, kind: int, subid: int, deadline: int, cyclic: bool) -> bool:
        if self._closed:
            raise TomClosedError("timeout list is closed")
        key = (kind, subid)
        if key in self._entries_by_key:
            return False
        self._entries_by_key[key] = [deadline, self._now + deadline, bool(cyclic), False]
        return True

    def renew(self, kind: int, subid: int) -> bool:
        if self._closed:
            return False
        entry = self._entries_by_key.get((kind, subid))
        if entry is None or entry[3]:
            return False
        entry[1] = self._now + entry[0]
        return True

    def delete(self, kind: int, subid: int) -> bool:
        if self._closed:
            return False
        return self._entries_by_key.pop((kind, subid), None) is not None

    def is_present(self, kind: int, subid: int) -> bool:
        return (kind, subid) in self._entries_by_key

    def next_expiry(self):
        if self._closed or not self._entries_by_key:
            return None
        return min(e[1] for e in self._entries_by_key.values())

    def advance(self, dt: int) -> list[tuple[int, int]]:
        if dt < 0:
            raise ValueError(f"negative advance: {dt}")
        if self._closed:
            return []
        target = self._now + dt
        fired: list[tuple[int, int]] = []
        entries = self._entries_by_key
        while entries:
            key, entry = min(entries.items(), key=lambda kv: (kv[1][1], kv[0]))
            if entry[1] > target:
                break
            fired.append(key)
            if entry[2]:
                entry[1] += entry[0]
            else:
                del entries[key]
        self._now = target
        return fired

    def close(self) -> None:
        self._closed = True

    def _entries(self) -> list[tuple[int, int, int, int, bool, bool]]:
        rows = [
            (key[0], key[1], e[0], e[1], e[2], e[3])
            for key, e in self._entries_by_key.items()
        ]
        rows.sort(key=lambda r: (r[3], r[0], r[1]))
        return rows
