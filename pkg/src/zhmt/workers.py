"""Order-preserving parallel map used by the corpus pipelines.

Worker functions must be pure and picklable; results come back in input
order, so any worker count produces output identical to workers=1.
"""

from __future__ import annotations

import multiprocessing
from typing import Callable, Iterable, Iterator, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def map_ordered(
    func: Callable[[T], R],
    items: Sequence[T] | Iterable[T],
    workers: int = 1,
    chunksize: int = 512,
) -> Iterator[R]:
    if workers <= 1:
        yield from map(func, items)
        return
    with multiprocessing.Pool(processes=workers) as pool:
        yield from pool.imap(func, items, chunksize=chunksize)
