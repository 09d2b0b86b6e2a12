import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Callable, Iterable, List, Optional, Type, TypeVar

import cattr
import dask

from .errors import ShapeException, YellowLightException

SCHEDULER_ENV = "YELLOWLIGHT_SCHEDULER"

T = TypeVar("T")


@contextmanager
def atomic_write(path, mode="w"):
    """Write to a temporary file next to `path` and move it into place on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode, encoding=None if "b" in mode else "utf-8", newline="") as f:
            yield f
        os.replace(name, path)
    except BaseException:
        os.unlink(name)
        raise


def default_scheduler() -> str:
    return os.environ.get(SCHEDULER_ENV, "threads")


def compute_ordered(
    func: Callable[..., Any], items: Iterable[Any], scheduler: Optional[str] = None
) -> List[Any]:
    """Apply `func` to every item as dask delayed tasks; results keep submission order."""
    tasks = [dask.delayed(func)(item) for item in items]
    if not tasks:
        return []
    return list(dask.compute(*tasks, scheduler=scheduler or "synchronous"))


def _first_yellowlight_error(error: BaseException) -> Optional[YellowLightException]:
    if isinstance(error, YellowLightException):
        return error
    # cattrs groups validation errors; older releases chain them instead
    nested = list(getattr(error, "exceptions", ()))
    if error.__cause__ is not None:
        nested.append(error.__cause__)
    for inner in nested:
        found = _first_yellowlight_error(inner)
        if found is not None:
            return found
    return None


def structure(converter: cattr.Converter, d: Any, cls: Type[T], what: str) -> T:
    """Structure `d` into `cls`, surfacing the first validation error from inside cattrs."""
    try:
        return converter.structure(d, cls)
    except Exception as e:
        found = _first_yellowlight_error(e)
        if found is not None:
            raise found from e
        raise ShapeException(what, str(e)) from e
