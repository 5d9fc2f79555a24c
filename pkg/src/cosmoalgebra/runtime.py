"""Small runtime knobs."""

import os


def worker_count() -> int:
    """Worker bound from COSMO_ALGEBRA_THREADS (default 1, never below 1)."""
    try:
        n = int(os.environ.get("COSMO_ALGEBRA_THREADS", "1"))
    except ValueError:
        return 1
    return max(1, n)
