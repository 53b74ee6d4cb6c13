"""Regenerate src/hookcost/data/scenarios.json, the bundled benchmark catalog.

    python tools/gen_catalog.py
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from hookcost.syscalls import BENCHMARKS, PathSpec, SyscallScenario, depth_path  # noqa: E402

OUT = ROOT / "src" / "hookcost" / "data" / "scenarios.json"

# LMBench's default open/stat target.
DEFAULT_LOOKUP = PathSpec.parse("usr/include/x86_64-linux-gnu/sys/types.h")
DATA_FILE = PathSpec.parse("test/1.txt")
SINGLE = PathSpec.parse("XXXXXX")
DOTTED = PathSpec.parse("XX/YY/././AA/BB/././HH")


def make(name, path, buffer_size=0, repeat=None):
    seq, cls = BENCHMARKS[name.split(":")[0]]
    return SyscallScenario(name, seq, cls, path, buffer_size, repeat or {})


def scenarios():
    out = []
    for bench in ("open", "stat"):
        out.append(make(bench, DEFAULT_LOOKUP))
        for d in range(1, 9):
            out.append(make(f"{bench}:d{d}", depth_path(d)))
        out.append(make(f"{bench}:hardlink", PathSpec(DEFAULT_LOOKUP.components, "hard_link")))
        out.append(make(f"{bench}:softlink", PathSpec(DEFAULT_LOOKUP.components, "soft_link")))
        out.append(make(f"{bench}:nonexistent",
                        PathSpec(DEFAULT_LOOKUP.components, "nonexistent", 2)))
        out.append(make(f"{bench}:dotted", DOTTED))
    for bench in ("rename", "chmod"):
        out.append(make(bench, depth_path(1)))
        for d in range(1, 6):
            out.append(make(f"{bench}:d{d}", depth_path(d)))
    for bench in ("openat", "creat", "unlink", "symlink"):
        out.append(make(bench, SINGLE))
    for bench in ("mkdir", "rmdir", "fstatat"):
        out.append(make(bench, depth_path(1)))
    for bench in ("read", "write", "copy"):
        out.append(make(bench, DATA_FILE))
        for size in (1024, 2048, 4096):
            out.append(make(f"{bench}:b{size}", DATA_FILE, size))
    return out


def main():
    docs = [s.to_dict() for s in scenarios()]
    OUT.write_text(json.dumps(docs, indent=1) + "\n")
    print(f"wrote {len(docs)} scenarios to {OUT}")


if __name__ == "__main__":
    main()
