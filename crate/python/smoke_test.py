"""Smoke test for the Python bindings.

Build first:
    cargo build --release -p fastfuzz-py --features extension-module
    cp target/release/libfastfuzz_py.so python/fastfuzz_py.so
"""
import json
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import fastfuzz_py as ff

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
EXPR = os.path.join(ROOT, "crates", "core", "grammars", "expr.json")


def main():
    g = ff.Grammar.load(EXPR)
    assert g.start == "<start>"
    assert g.max_mu_depth == 6
    assert g.mu_depth("<factor>") == 3
    assert g.min_rules("<factor>") == [3, 4]
    assert len(g.pool("<digit>")) == 10
    assert len(g.pool("<factor>")) == 110

    want = g.produce("pooled", depth=8, count=200, seed=3)
    assert want.count(b"\n") == 200
    for engine in ("vm-switch", "vm-threaded", "compiled"):
        assert g.produce(engine, depth=8, count=200, seed=3) == want, engine

    try:
        g.produce("vm-ct")
        raise AssertionError("vm-ct should be unsupported")
    except ValueError as e:
        assert "unsupported" in str(e)

    text, tree = g.derive(depth=8, seed=1)
    assert json.loads(tree)
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "out.txt")
        report = g.produce_to(path, "vm-switch", depth=8, count=200, seed=3)
        assert report["bytes"] == len(want)
        with open(path, "rb") as f:
            assert f.read() == want

    assert "int main" in g.compile("c")
    assert g.disassemble().startswith("0000 INVOKE")
    assert ff.map_range(255, 2) == 1
    assert "vm-ct" in ff.engines()
    print("smoke test ok:", g, len(want), "bytes")


if __name__ == "__main__":
    main()
