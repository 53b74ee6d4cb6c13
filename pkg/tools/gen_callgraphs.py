"""Regenerate the bundled call graphs under src/hookcost/data/callgraphs.

    python tools/gen_callgraphs.py
"""

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from hookcost.callgraph import format_callgraph, module_callgraph  # noqa: E402
from hookcost.hooks import BUNDLED_MODULES, bundled_module  # noqa: E402

OUT = ROOT / "src" / "hookcost" / "data" / "callgraphs"

TOY = """\
# main() { foo1(); foo2(); }   foo1() { fun(); }
node main
node foo1
node foo2
node fun
call main -> foo1, foo2
call foo1 -> fun
"""


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "toy.cg").write_text(TOY)
    for name in BUNDLED_MODULES:
        g = module_callgraph(bundled_module(name))
        header = f"{name}: generated by tools/gen_callgraphs.py from the module descriptor"
        (OUT / f"{name}.cg").write_text(format_callgraph(g, header))


if __name__ == "__main__":
    main()
