"""Utility functions for the PCAAC toolkit."""
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, List, Optional, Tuple, Union

PathLike = Union[str, Path]


@contextmanager
def atomic_write(target: PathLike) -> Iterator[Path]:
    """
    Yield a temporary path next to ``target`` and move it into place on success.

    The temporary file lives in the target directory so the final
    ``os.replace`` never crosses file systems.
    """
    target = Path(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp",
                                    dir=str(target.parent))
    os.close(fd)
    tmp_path = Path(tmp_name)
    try:
        yield tmp_path
        os.replace(tmp_path, target)
    finally:
        if tmp_path.exists():
            tmp_path.unlink()


def write_text_atomic(target: PathLike, text: str) -> None:
    """Write text through a temp file + rename."""
    with atomic_write(target) as tmp:
        tmp.write_text(text, encoding='utf-8')


def sidecar_path(output: PathLike, suffix: str) -> Path:
    """Path of a file written alongside ``output``, e.g. ``scene.xyz.labels``."""
    output = Path(output)
    return output.with_name(output.name + suffix)


def format_fraction(value: Optional[float], digits: int = 6) -> str:
    """Render a metric, using ``n/a`` for undefined values."""
    if value is None:
        return "n/a"
    return f"{value:.{digits}f}"


def parse_int_list(text: str) -> List[int]:
    """Parse ``"1000,2000, 4000"`` into a list of positive integers."""
    values = []
    for chunk in text.split(','):
        chunk = chunk.strip()
        if not chunk:
            continue
        value = int(chunk)
        if value <= 0:
            raise ValueError(f"expected positive integers, got {value}")
        values.append(value)
    if not values:
        raise ValueError("empty integer list")
    return values


def parse_point(text: str) -> Tuple[float, float, float]:
    """Parse ``"x,y,z"`` into three floats."""
    chunks = [chunk.strip() for chunk in text.split(',')]
    if len(chunks) != 3:
        raise ValueError(f"expected three comma-separated numbers, got '{text}'")
    x, y, z = (float(chunk) for chunk in chunks)
    return x, y, z
