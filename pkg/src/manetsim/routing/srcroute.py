"""Source-route helpers: a path cache and link bookkeeping."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

Route = tuple[int, ...]


def header_bytes(route: Sequence[int]) -> int:
    """Bytes a full hop list adds to a packet: 4 fixed + 4 per hop."""
    return 4 + 4 * (len(route) - 1)


def has_link(route: Sequence[int], a: int, b: int) -> bool:
    for u, v in zip(route, route[1:]):
        if (u == a and v == b) or (u == b and v == a):
            return True
    return False


def is_simple(route: Sequence[int]) -> bool:
    return len(set(route)) == len(route)


def splice(path: Sequence[int], ext: Sequence[int]) -> Route:
    """Append ``ext`` (which starts at ``path[-1]``) to ``path``, cutting out
    any loop the join creates."""
    out = list(path)
    pos = {n: i for i, n in enumerate(out)}
    for n in ext[1:]:
        i = pos.get(n)
        if i is not None:
            for m in out[i + 1:]:
                del pos[m]
            del out[i + 1:]
        else:
            pos[n] = len(out)
            out.append(n)
    return tuple(out)


@dataclass(frozen=True, slots=True)
class RouteError:
    """Reports the broken link ``(a, b)``; travels source-routed along ``route``."""
    a: int
    b: int
    route: Route


class RouteCache:
    """Paths from the owner, indexed by every node they reach."""

    def __init__(self, owner: int, lifetime: int):
        self.owner = owner
        self.lifetime = lifetime
        self._by_dest: dict[int, dict[Route, int]] = {}
        # link -> number of cached routes using it; lets purges skip quickly
        self._links: Counter = Counter()

    def __len__(self) -> int:
        return sum(len(v) for v in self._by_dest.values())

    def add(self, route: Sequence[int], now: int) -> None:
        route = tuple(route)
        if len(route) < 2 or route[0] != self.owner or not is_simple(route):
            return
        for k in range(1, len(route)):
            entries = self._by_dest.setdefault(route[k], {})
            r = route[:k + 1]
            if r not in entries:
                self._count(r, 1)
            entries[r] = now

    def _count(self, route: Route, delta: int) -> None:
        links = self._links
        for u, v in zip(route, route[1:]):
            key = (u, v) if u < v else (v, u)
            links[key] += delta
            if not links[key]:
                del links[key]

    def lookup(self, dest: int, now: int) -> Optional[Route]:
        entries = self._by_dest.get(dest)
        if not entries:
            return None
        stale = [r for r, t in entries.items() if now - t > self.lifetime]
        for r in stale:
            del entries[r]
            self._count(r, -1)
        if not entries:
            return None
        return min(entries, key=lambda r: (len(r), r))

    def routes(self) -> list[Route]:
        return [r for d in self._by_dest.values() for r in d]

    def purge_link(self, a: int, b: int) -> int:
        if ((a, b) if a < b else (b, a)) not in self._links:
            return 0
        n = 0
        for d in self._by_dest.values():
            bad = [r for r in d if has_link(r, a, b)]
            for r in bad:
                del d[r]
                self._count(r, -1)
            n += len(bad)
        return n
