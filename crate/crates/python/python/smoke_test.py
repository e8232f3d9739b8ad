"""Smoke test for the pydehum extension.

Build it with
    cargo build --release -p dehum-python --features extension-module
    cp target/release/libpydehum.so crates/python/python/pydehum.so
then run this script from any directory.
"""
import math
import os
import random
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
import pydehum  # noqa: E402

lex = {"good": 0.9, "bad": 0.1, "ok": 0.5}
assert pydehum.paragraph_affect(["good", "bad", "cat"], lex) == 0.5
assert pydehum.paragraph_affect(["goods"], lex, ["good"]) == 0.9
assert pydehum.paragraph_affect(["cat"], lex) is None

stat, p, n, method = pydehum.wilcoxon([1, 2, 3, 4, 5], [0, 0, 0, 0, 0])
assert (stat, n, method) == (0.0, 5, "exact") and abs(p - 0.0625) < 1e-12

slope, se, intercept, p = pydehum.linear_trend([2000, 2001, 2002, 2003], [1.0, 3.0, 5.0, 7.0])
assert abs(slope - 2.0) < 1e-12 and abs(intercept + 3999.0) < 1e-6

w, b = pydehum.ridge_solve([[1.0], [2.0], [3.0]], [3.0, 5.0, 7.0], 0.0)
assert abs(w[0] - 2.0) < 1e-9 and abs(b - 1.0) < 1e-9

assert len(pydehum.lowess([0, 1, 2, 3, 4, 5], [0, 1, 0, 1, 0, 1], 0.8, 2)) == 6

rng = random.Random(0)
topics = [[f"t{t}w{i}" for i in range(10)] for t in range(2)]
sentences = [[rng.choice(topics[s % 2]) for _ in range(8)] for s in range(3000)]
model = pydehum.Model.train(sentences, dim=16, window=3, epochs=5, seed=1)
assert model.dim == 16 and len(model) == 20
assert abs(math.fsum(x * x for x in model.vector("t0w0")) - 1.0) < 1e-9
near = [w for w, _ in model.neighbors("t0w0", 5, ["t0w0"])]
assert sum(w.startswith("t0") for w in near) >= 4, near
value, scored = model.neighbor_affect("t0w0", 9, {f"t0w{i}": 1.0 for i in range(10)}, ["t0w0"])
assert value == 1.0 and scored >= 1

with tempfile.TemporaryDirectory() as d:
    path = os.path.join(d, "m.dhem")
    model.save(path)
    again = pydehum.Model.load(path)
    assert again.vector("t1w3") == model.vector("t1w3")

try:
    pydehum.wilcoxon([1.0], [1.0, 2.0])
except ValueError:
    pass
else:
    raise AssertionError("length mismatch accepted")

print("pydehum smoke test passed")
