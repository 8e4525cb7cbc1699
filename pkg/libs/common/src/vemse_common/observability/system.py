"""Host snapshot recorded next to timing results."""

import datetime
import os
import platform
from typing import Any

import psutil


def host_snapshot() -> dict[str, Any]:
    """Describe the machine a benchmark ran on.

    Timing ratios between engines only mean something together with the hardware
    they were measured on, so the benchmark summary embeds this record.
    """
    snapshot: dict[str, Any] = {
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "platform": platform.platform(),
        "python": platform.python_version(),
        "cpu_count_logical": os.cpu_count(),
    }

    try:
        freq = psutil.cpu_freq()
        memory = psutil.virtual_memory()
        snapshot.update(
            {
                "cpu_count_physical": psutil.cpu_count(logical=False),
                "cpu_freq_mhz": round(freq.current, 1) if freq else None,
                "memory_total_mb": round(memory.total / 2**20, 1),
                "memory_percent": round(memory.percent, 2),
            }
        )
    except Exception as e:
        # Containers without /proc/cpuinfo or sysfs still get the basic record
        snapshot["error"] = f"Extended host snapshot failed: {e}"

    return snapshot
