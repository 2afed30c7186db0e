from __future__ import annotations

import os


def worker_count(default: int | None = None) -> int:
    """Worker cap for internal thread pools; ``PHC_LAB_THREADS`` overrides."""
    env = os.environ.get("PHC_LAB_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"PHC_LAB_THREADS must be an integer, got {env!r}") from None
        return max(1, n)
    return max(1, default or os.cpu_count() or 1)
