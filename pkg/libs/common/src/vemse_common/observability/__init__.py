from vemse_common.observability.logging import configure_logging
from vemse_common.observability.records import (
    JsonlWriter,
    dumps_record,
    read_jsonl,
    write_json,
    write_jsonl,
)
from vemse_common.observability.system import host_snapshot

__all__ = [
    "JsonlWriter",
    "configure_logging",
    "dumps_record",
    "host_snapshot",
    "read_jsonl",
    "write_json",
    "write_jsonl",
]
