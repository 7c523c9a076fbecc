"""File formats: flat key/value sidecars and 8-bit image output."""

from t2net.io.images import error_map, to_uint8, write_pgm, write_png
from t2net.io.sidecar import dump_sidecar, parse_sidecar, read_sidecar, write_sidecar

__all__ = [
    "dump_sidecar",
    "error_map",
    "parse_sidecar",
    "read_sidecar",
    "to_uint8",
    "write_pgm",
    "write_png",
    "write_sidecar",
]
