import logging
import multiprocessing as mp
from typing import Any, Callable, Iterable, List, Optional, Sequence

from tqdm import tqdm

logger = logging.getLogger(__name__)


def ordered_map(func: Callable[[Any], Any], items: Sequence[Any], jobs: int = 1,
                initializer: Optional[Callable[..., None]] = None, initargs: Iterable[Any] = (),
                desc: str = "", progress: bool = True) -> List[Any]:
    """Apply ``func`` to every item, in worker processes when ``jobs > 1``.

    Results come back in item order whatever the worker count, so callers merge
    them deterministically. ``initializer`` runs once per worker (or once
    in-process) to install shared read-only state.
    """
    bar = tqdm(total=len(items), desc=desc, leave=False, disable=not progress)
    results = []
    try:
        if jobs > 1 and len(items) > 1:
            logger.debug(f"{desc}: {len(items)} tasks on {jobs} workers")
            with mp.Pool(processes=jobs, initializer=initializer, initargs=tuple(initargs)) as pool:
                for result in pool.imap(func, items):
                    results.append(result)
                    bar.update(1)
        else:
            if initializer is not None:
                initializer(*initargs)
            for item in items:
                results.append(func(item))
                bar.update(1)
    finally:
        bar.close()
    return results
