"""End-to-end acceptance suite: one test per criterion, each printing a single PASS/FAIL line."""

import pytest

from nlforms import acceptance
from nlforms.records import dumps

SEED = 0
_cache: dict = {}


def first_run(cid):
    if cid not in _cache:
        _cache[cid] = acceptance.CRITERIA[cid - 1](SEED)
    return _cache[cid]


def _scalars(rec):
    parts = [f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
             for k, v in rec.items()
             if k not in ("id", "name", "passed") and isinstance(v, (int, float, str))]
    if isinstance(rec.get("rows"), list):
        parts.append(f"checks={len(rec['rows'])}")
    return ", ".join(parts)


def report(rec, capsys):
    line = f"criterion {rec['id']:2d} {'PASS' if rec['passed'] else 'FAIL'}  {rec['name']}"
    extra = _scalars(rec)
    with capsys.disabled():
        print(f"\n{line}  ({extra})" if extra else f"\n{line}")
    assert rec["passed"], rec


@pytest.mark.parametrize("cid", range(1, 13))
def test_criterion(cid, capsys):
    report(first_run(cid), capsys)


def test_criterion_13_determinism(capsys):
    serialized = {cid: dumps(first_run(cid)) for cid in acceptance.STOCHASTIC}
    report(acceptance.criterion_13(SEED, serialized), capsys)
