import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nlforms import cli, rng
from nlforms.errors import InvalidInputError, UnsupportedModelError
from nlforms.records import dump_lines, dumps, loads, summary_table

FORM_CFG = """\
command = form
seed = 7

[model gauss]
kind = product-normal
N = 2

[function u]
kind = cutoff
coordinate = 0

[form]
model = gauss
function = u
alpha = 1.0
delta = 0.1
nsamples = 2000
"""


def errors_of(text, **kw):
    with pytest.raises(cli.ConfigError) as info:
        cli.parse_config(text, **kw)
    return info.value.errors


def test_empty_config_needs_command():
    assert errors_of("") == ["line 1: missing command"]


def test_config_round_trip():
    cfg = cli.parse_config(FORM_CFG)
    text = cli.dump_config(cfg)
    again = cli.parse_config(text)
    assert again == cfg
    assert cli.dump_config(again) == text


def test_every_error_is_reported_with_its_line():
    errs = errors_of("command = form\nbogus = 1\n[form]\nalpha = 1\nalpha = 2\nmodel = nope\n")
    joined = "\n".join(errs)
    assert "line 2: unknown key 'bogus'" in joined
    assert "line 5: duplicate key 'alpha' (first on line 4)" in joined
    assert "missing seed" in joined
    assert "model 'nope' is not defined" in joined
    assert any(e.startswith("line 6:") for e in errs)
    assert "'function'" in joined and "'delta'" in joined


def test_unknown_command_and_mismatch():
    assert any("unknown command" in e for e in errors_of("command = launch\n"))
    assert any("command" in e for e in errors_of(FORM_CFG, command="chain"))


def test_bad_values():
    errs = errors_of(FORM_CFG.replace("alpha = 1.0", "alpha = one").replace("seed = 7", "seed = -1"))
    assert any(e.startswith("line 2:") and "seed" in e for e in errs)
    assert any("alpha" in e for e in errs)


def test_cli_overrides():
    cfg = cli.parse_config(FORM_CFG, command="form", seed=11)
    assert cfg.seed == 11
    cfg = cli.parse_config(FORM_CFG.replace("seed = 7\n", ""), seed=5)
    assert cfg.seed == 5


def test_main_unknown_command_exits_2():
    with pytest.raises(SystemExit) as info:
        cli.main(["launch"])
    assert info.value.code == 2


def test_main_bad_config_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("command = form\nbogus = 1\n")
    assert cli.main(["form", "--config", str(path)]) == InvalidInputError.exit_code
    assert "line 2" in capsys.readouterr().err


def test_fixed_seed_output_is_byte_identical(tmp_path):
    path = tmp_path / "f.cfg"
    path.write_text(FORM_CFG)
    outs = []
    for k in range(2):
        out = tmp_path / f"out{k}.jsonl"
        assert cli.main(["form", "--config", str(path), "--out", str(out), "--threads", "3"]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] and outs[0]
    rec = loads(outs[0].decode().splitlines()[0])
    for key in ("value", "stderr", "nsamples", "alpha", "delta", "per_coordinate"):
        assert key in rec
    assert rec["seed"] == 7 and rec["threads"] == 3 and rec["command"] == "form"


def test_seed_changes_output(tmp_path):
    a = cli.run(cli.parse_config(FORM_CFG))[1]
    b = cli.run(cli.parse_config(FORM_CFG, seed=8))[1]
    assert a[0]["value"] != b[0]["value"]


def test_every_command_runs():
    cfg = cli.parse_config("command = propagator\n[propagator]\nm2 = 1.0\n")
    status, records, err = cli.run(cfg)
    assert status == 0 and err is None
    assert records[0]["value"] == pytest.approx(1 / math.sqrt(5), abs=1e-8)
    chain = """\
command = chain
seed = 3
[model g]
kind = product-normal
N = 2
[function u]
kind = cutoff
coordinate = 1
[chain]
model = g
function = u
alpha = 1.0
delta = 0.2
T = 0.5
chains = 200
trajectories = 1
dump = true
"""
    status, records, _ = cli.run(cli.parse_config(chain))
    assert status == 0
    kinds = {r.get("record") for r in records}
    assert {"invariance", "trajectory", "event"} <= kinds
    qr = """\
command = qr-report
seed = 1
[model g]
kind = product-normal
N = 20
[scheme s]
kind = lp
N = 20
beta = constant:1
gamma = power:2
alpha = 1.0
[qr]
model = g
scheme = s
conditions = 4.3, 4.8
"""
    status, records, _ = cli.run(cli.parse_config(qr))
    assert status == 0 and [r["condition"] for r in records] == ["4.3", "4.8"]


def test_runtime_error_keeps_partial_records():
    text = """\
command = qr-report
seed = 1
[model d]
kind = discrete
N = 1
atoms = 0, 1
masses = 1, 1
[scheme s]
kind = lp
N = 1
beta = constant:1
gamma = constant:1
alpha = 1.0
[qr]
model = d
scheme = s
conditions = 4.3, 4.53
"""
    status, records, err = cli.run(cli.parse_config(text))
    assert isinstance(err, UnsupportedModelError)
    assert status == UnsupportedModelError.exit_code == 6
    assert [r["condition"] for r in records] == ["4.3"]


def test_verify_subset_exits_zero(tmp_path):
    out = tmp_path / "v.jsonl"
    path = tmp_path / "v.cfg"
    path.write_text("[verify]\ncriteria = 1, 10\n")
    assert cli.main(["verify", "--config", str(path), "--out", str(out)]) == 0
    recs = [loads(line) for line in out.read_text().splitlines()]
    assert [r["id"] for r in recs] == [1, 10] and all(r["passed"] for r in recs)


def test_empty_records():
    buf, table = io.StringIO(), io.StringIO()
    cli.emit([], buf, table, "form")
    assert buf.getvalue() == ""
    assert table.getvalue() == "0 records\n"


def test_summary_table_counts_records():
    text = summary_table([{"a": 1, "b": 2.5}, {"a": 2, "b": -1.0}])
    assert text.rstrip().endswith("2 records")


@given(st.lists(st.floats(allow_nan=False), max_size=20))
def test_float_records_reparse_exactly(xs):
    rec = {"values": xs, "first": xs[0] if xs else 0.0}
    back = loads(dumps(rec))
    assert back["values"] == xs
    assert all(type(v) is float for v in back["values"])


def test_special_floats_and_types():
    line = dumps({"nan": float("nan"), "inf": -np.inf, "i": np.int64(3), "b": np.bool_(True),
                  "arr": np.arange(2.0), "none": None})
    back = loads(line)
    assert math.isnan(back["nan"]) and back["inf"] == -math.inf
    assert back["i"] == 3 and back["b"] is True and back["arr"] == [0.0, 1.0]
    assert list(back) == ["nan", "inf", "i", "b", "arr", "none"]
    assert dump_lines([{"x": 1.0}, {"x": 2.0}]) == '{"x": 1.0}\n{"x": 2.0}\n'
    with pytest.raises(TypeError):
        dumps({"s": {1, 2}})


def test_streams_are_keyed_not_ordered():
    a = rng.stream(5, "form", 3).random(4)
    rng.stream(5, "other").random(100)
    b = rng.stream(5, "form", 3).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, rng.stream(5, "form", 4).random(4))
    assert not np.array_equal(a, rng.stream(6, "form", 3).random(4))
    with pytest.raises(ValueError):
        rng.stream(1, -1)


@given(st.integers(0, 10_000), st.integers(1, 64))
def test_block_sizes_partition(n, parts):
    sizes = rng.block_sizes(n, parts)
    assert sum(sizes) == n
    assert max(sizes) - min(sizes) <= 1


def test_pool_matches_direct_moments():
    x = np.random.default_rng(0).normal(size=1000)
    chunks = np.split(x, [100, 450])
    mean, var = rng.pool([c.mean() for c in chunks], [c.var() for c in chunks],
                         [len(c) for c in chunks])
    assert mean == pytest.approx(x.mean(), rel=1e-12)
    assert var == pytest.approx(x.var(), rel=1e-12)
