"""Worker-count policy shared by sweeps and simulation replications."""
import os


def thread_cap() -> int:
    """Worker processes to use: ``RELAYLAB_THREADS`` if set, else the CPU count."""
    env = os.environ.get("RELAYLAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1
