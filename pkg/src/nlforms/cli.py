"""Configuration-driven command line entry point.

Config files are ``key = value`` lines grouped under section headers::

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

Top-level keys come before the first header.  ``model``, ``function`` and
``scheme`` sections are named; the command sections (``eigen``, ``sample``,
``propagator``, ``form``, ``chain``, ``qr``, ``verify``) are not.  Lines starting
with ``#`` are comments and lists are comma separated.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, forms, hilbert_scale as hs, measures, process, qr_check, seqspace
from . import rng as rngmod
from .errors import InvalidInputError, NLFormsError
from .records import dump_lines, summary_table

COMMANDS = ("eigen", "sample", "propagator", "form", "chain", "qr-report", "verify")
STOCHASTIC = ("sample", "form", "chain", "qr-report")
COMMAND_SECTION = {"eigen": "eigen", "sample": "sample", "propagator": "propagator",
                   "form": "form", "chain": "chain", "qr-report": "qr", "verify": "verify"}
NAMED = ("model", "function", "scheme")


# value parsers -------------------------------------------------------------

def _int(s):
    return int(s)


def _seed(s):
    v = int(s)
    if not 0 <= v < 2 ** 64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return v


def _float(s):
    return float(s)


def _bool(s):
    low = s.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _list(conv):
    def parse(s):
        return tuple(conv(p.strip()) for p in s.split(",") if p.strip())
    return parse


def _str(s):
    return s


def _generator(s):
    name, _, param = s.partition(":")
    if name not in ("constant", "power", "eigen") or not param:
        raise ValueError(f"expected constant:c, power:a or eigen:m, got {s!r}")
    float(param)
    return s


def _terms(s):
    """Polynomial terms ``e0,e1:coef; ...``."""
    out = {}
    for chunk in s.split(";"):
        if not chunk.strip():
            continue
        exps, _, coef = chunk.partition(":")
        key = tuple(int(e) for e in exps.split(","))
        out[key] = float(coef)
    if not out:
        raise ValueError("empty polynomial")
    return s


def _ref(kind):
    def parse(s):
        return s
    parse.ref = kind
    return parse


TOP = {"command": _str, "seed": _seed, "out": _str, "threads": _int, "threshold": _float}

MODEL_KEYS = {
    "product-normal": {"N": _int, "mean": _float, "variance": _float},
    "product-uniform": {"N": _int, "low": _float, "high": _float},
    "correlated-gaussian": {"N": _int, "cov": _list(_float)},
    "lattice-phi4": {"d": _int, "L": _int, "m2": _float, "lam": _float, "eps": _float,
                     "a_eps": _float, "burn_in": _int, "thin": _int, "chains": _int,
                     "guard": _float},
    "discrete": {"N": _int, "atoms": _list(_float), "masses": _list(_float)},
    "discretized-normal": {"N": _int, "points": _int, "width": _float},
    "free-field": {"grid_d": _int, "grid_R": _float, "grid_n": _int, "K": _int, "m2": _float},
}
MODEL_REQUIRED = {"product-normal": ("N",), "product-uniform": ("N", "low", "high"),
                  "correlated-gaussian": ("N", "cov"), "lattice-phi4": ("d", "L", "m2"),
                  "discrete": ("N", "atoms", "masses"), "discretized-normal": ("points",),
                  "free-field": ()}

FUNCTION_KEYS = {
    "coordinate": {"coordinate": _int},
    "cutoff": {"coordinate": _int, "scale": _float, "amplitude": _float},
    "product-of-cutoffs": {"scales": _list(_float), "amplitude": _float},
    "polynomial": {"terms": _terms},
}
FUNCTION_REQUIRED = {"coordinate": ("coordinate",), "cutoff": ("coordinate",),
                     "product-of-cutoffs": ("scales",), "polynomial": ("terms",)}

SCHEME_KEYS = {
    "lp": {"N": _int, "beta": _generator, "gamma": _generator, "p": _float, "alpha": _float,
           "M0": _list(_float), "M_grid": _list(_float), "eigen_table": _str},
    "free-field": {"m": _int, "alpha": _float, "M0": _list(_float), "M_grid": _list(_float),
                   "eigen_table": _str},
}
SCHEME_KEYS["linf"] = SCHEME_KEYS["lp"]
SCHEME_KEYS["RN"] = SCHEME_KEYS["lp"]
SCHEME_REQUIRED = {"lp": ("N", "beta", "gamma", "alpha"), "linf": ("N", "beta", "gamma", "alpha"),
                   "RN": ("N", "beta", "gamma", "alpha"), "free-field": ("m", "alpha")}

SECTION_KEYS = {
    "eigen": {"d": _int, "R": _float, "n": _int, "K": _int, "table": _str},
    "sample": {"model": _ref("model"), "nsamples": _int},
    "propagator": {"d": _int, "eps": _float, "m2": _float, "x": _list(_int), "L": _int},
    "form": {"model": _ref("model"), "function": _ref("function"),
             "function2": _ref("function"), "alpha": _float, "delta": _float,
             "nsamples": _int, "coords": _list(_int)},
    "chain": {"model": _ref("model"), "function": _ref("function"), "alpha": _float,
              "delta": _float, "T": _float, "chains": _int, "trajectories": _int,
              "max_events": _int, "dump": _bool},
    "qr": {"model": _ref("model"), "scheme": _ref("scheme"), "conditions": _list(_str),
           "N_terms": _int, "nsamples": _int, "n_rest": _int},
    "verify": {"criteria": _list(_int)},
}
SECTION_REQUIRED = {"eigen": (), "sample": ("model",), "propagator": ("m2",),
                    "form": ("model", "function", "alpha", "delta"),
                    "chain": ("model", "alpha", "delta", "T"),
                    "qr": ("model", "scheme", "conditions"), "verify": ()}


class ConfigError(InvalidInputError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass
class Section:
    kind: str                 # section type: model, function, scheme, or a command section
    name: str | None
    values: dict
    lines: dict = field(default_factory=dict, compare=False, repr=False)
    line: int = field(default=0, compare=False, repr=False)

    @property
    def label(self) -> str:
        return self.kind if self.name is None else f"{self.kind} {self.name}"


@dataclass
class ExperimentConfig:
    command: str
    seed: int | None = None
    out: str | None = None
    threads: int = 1
    threshold: float = 1e-6
    sections: list = field(default_factory=list)

    def named(self, kind: str, name: str) -> Section:
        for s in self.sections:
            if s.kind == kind and s.name == name:
                return s
        raise InvalidInputError(f"{kind} {name!r} is not defined")

    def section(self, kind: str) -> Section | None:
        for s in self.sections:
            if s.kind == kind and s.name is None:
                return s
        return None

    def parameters(self) -> dict:
        return {s.label: dict(s.values) for s in self.sections}


def _schema(kind, values):
    """Allowed keys and required keys for a section, given its ``kind`` value if any."""
    if kind == "model":
        sub = values.get("kind")
        return MODEL_KEYS.get(sub), MODEL_REQUIRED.get(sub, ()), sorted(MODEL_KEYS)
    if kind == "function":
        sub = values.get("kind")
        return FUNCTION_KEYS.get(sub), FUNCTION_REQUIRED.get(sub, ()), sorted(FUNCTION_KEYS)
    if kind == "scheme":
        sub = values.get("kind")
        return SCHEME_KEYS.get(sub), SCHEME_REQUIRED.get(sub, ()), sorted(SCHEME_KEYS)
    return SECTION_KEYS[kind], SECTION_REQUIRED[kind], None


def parse_config(text: str, command: str | None = None, seed: int | None = None) -> ExperimentConfig:
    """Parse and validate a config; every problem is reported, each with its line number.

    ``command`` and ``seed`` override the values in the text (command line flags).
    """
    errors = []
    top, top_lines = {}, {}
    raw_sections = []          # (kind, name, header_line, {key: (raw, line)})
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                errors.append(f"line {lineno}: malformed section header {line!r}")
                current = None
                continue
            parts = line[1:-1].split()
            if not parts:
                errors.append(f"line {lineno}: empty section header")
                current = None
                continue
            kind, name = parts[0], (parts[1] if len(parts) > 1 else None)
            if kind in NAMED and (name is None or len(parts) > 2):
                errors.append(f"line {lineno}: {kind} sections need exactly one name")
            elif kind not in NAMED and kind not in SECTION_KEYS:
                errors.append(f"line {lineno}: unknown section {kind!r}")
                current = None
                continue
            elif kind not in NAMED and name is not None:
                errors.append(f"line {lineno}: section {kind!r} takes no name")
            for k0, n0, l0, _ in raw_sections:
                if (k0, n0) == (kind, name):
                    errors.append(f"line {lineno}: duplicate section [{line[1:-1]}] "
                                  f"(first on line {l0})")
            current = (kind, name, lineno, {})
            raw_sections.append(current)
            continue
        key, eq, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key:
            errors.append(f"line {lineno}: expected 'key = value'")
            continue
        target = top if current is None else current[3]
        if key in target:
            errors.append(f"line {lineno}: duplicate key {key!r} (first on line {target[key][1]})")
            continue
        target[key] = (value, lineno)

    # top-level keys
    values = {}
    for key, (value, lineno) in top.items():
        if key not in TOP:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        try:
            values[key] = TOP[key](value)
        except ValueError as exc:
            errors.append(f"line {lineno}: bad value for {key!r}: {exc}")
        top_lines[key] = lineno
    if command is not None:
        if "command" in values and values["command"] != command:
            errors.append(f"line {top_lines['command']}: config command {values['command']!r} "
                          f"does not match requested command {command!r}")
        values["command"] = command
    if seed is not None:
        values["seed"] = seed
    cmd = values.get("command")
    if cmd is None:
        errors.append("line 1: missing command")
    elif cmd not in COMMANDS:
        errors.append(f"line {top_lines.get('command', 1)}: unknown command {cmd!r}")
    if cmd in STOCHASTIC and values.get("seed") is None:
        errors.append(f"line {top_lines.get('command', 1)}: missing seed "
                      f"(required for the stochastic command {cmd!r})")
    if values.get("threads", 1) < 1:
        errors.append(f"line {top_lines['threads']}: threads must be positive")

    # sections
    sections = []
    for kind, name, header, entries in raw_sections:
        parsed, lines = {}, {}
        if kind in NAMED:
            if "kind" not in entries:
                errors.append(f"line {header}: {kind} {name!r} needs a 'kind' key")
            else:
                parsed["kind"] = entries["kind"][0]
                lines["kind"] = entries["kind"][1]
        allowed, required, kinds = _schema(kind, parsed)
        if allowed is None:
            if "kind" in parsed:
                errors.append(f"line {lines['kind']}: unknown {kind} kind {parsed['kind']!r} "
                              f"(expected one of {', '.join(kinds)})")
            continue
        for key, (value, lineno) in entries.items():
            if key == "kind" and kind in NAMED:
                continue
            if key not in allowed:
                errors.append(f"line {lineno}: unknown key {key!r} in [{kind}"
                              f"{'' if name is None else ' ' + name}]")
                continue
            try:
                parsed[key] = allowed[key](value)
            except ValueError as exc:
                errors.append(f"line {lineno}: bad value for {key!r}: {exc}")
                continue
            lines[key] = lineno
        for key in required:
            if key not in entries:
                errors.append(f"line {header}: [{kind}{'' if name is None else ' ' + name}] "
                              f"is missing required key {key!r}")
        sections.append(Section(kind, name, parsed, lines, header))

    # references and the command section
    defined = {(s.kind, s.name) for s in sections}
    for s in sections:
        allowed, _, _ = _schema(s.kind, s.values)
        for key, value in s.values.items():
            target = getattr(allowed.get(key), "ref", None) if allowed else None
            if target and (target, value) not in defined:
                errors.append(f"line {s.lines[key]}: {target} {value!r} is not defined")
    if cmd in COMMAND_SECTION and cmd != "verify":
        want = COMMAND_SECTION[cmd]
        if not any(s.kind == want and s.name is None for s in sections) and \
                not any(k == want for k, *_ in raw_sections):
            errors.append(f"line 1: command {cmd!r} needs a [{want}] section")

    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(values["command"], values.get("seed"), values.get("out"),
                            values.get("threads", 1), values.get("threshold", 1e-6), sections)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


def dump_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; ``parse_config(dump_config(c)) == c``."""
    lines = [f"command = {cfg.command}"]
    if cfg.seed is not None:
        lines.append(f"seed = {cfg.seed}")
    if cfg.out is not None:
        lines.append(f"out = {cfg.out}")
    lines.append(f"threads = {cfg.threads}")
    lines.append(f"threshold = {cfg.threshold!r}")
    for s in cfg.sections:
        lines += ["", f"[{s.label}]"]
        lines += [f"{k} = {_fmt(v)}" for k, v in s.values.items()]
    return "\n".join(lines) + "\n"


# builders ------------------------------------------------------------------

class _Context:
    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.models, self.eigen = {}, {}

    def model(self, name):
        if name in self.models:
            return self.models[name]
        v = self.cfg.named("model", name).values
        kind = v["kind"]
        if kind == "product-normal":
            m = measures.ProductModel([measures.Gaussian1D(v.get("mean", 0.0), v.get("variance", 1.0))
                                       for _ in range(v["N"])])
        elif kind == "product-uniform":
            m = measures.ProductModel([measures.GridDensity1D.uniform(v["low"], v["high"])
                                       for _ in range(v["N"])])
        elif kind == "correlated-gaussian":
            N = v["N"]
            if len(v["cov"]) != N * N:
                raise InvalidInputError(f"model {name!r}: cov needs {N * N} entries")
            m = measures.CorrelatedGaussian(np.reshape(v["cov"], (N, N)))
        elif kind == "lattice-phi4":
            keys = ("lam", "eps", "a_eps", "burn_in", "thin", "chains", "guard")
            m = measures.LatticePhi4(measures.Phi4Params(
                v["d"], v["L"], v["m2"], **{k: v[k] for k in keys if k in v}))
        elif kind == "discrete":
            atoms, masses = v["atoms"], v["masses"]
            if len(atoms) != len(masses):
                raise InvalidInputError(f"model {name!r}: atoms and masses differ in length")
            m = measures.DiscreteModel.product([atoms] * v["N"], [masses] * v["N"])
        elif kind == "discretized-normal":
            m = measures.DiscreteModel.discretized_gaussian(v["points"], v.get("N", 1),
                                                            v.get("width", 6.0))
        else:
            grid = hs.GridSpec(v.get("grid_d", 1), v.get("grid_R", 20.0), v.get("grid_n", 256))
            eig = hs.eigensystem(grid, v.get("K", 128))
            self.eigen[name] = eig.values
            m = hs.free_field_model(grid, v.get("m2", 1.0), eig)
        self.models[name] = m
        return m

    def function(self, name):
        v = self.cfg.named("function", name).values
        kind = v["kind"]
        if kind == "coordinate":
            return seqspace.coordinate(v["coordinate"])
        if kind == "cutoff":
            return seqspace.cutoff(v["coordinate"], v.get("scale", 1.0), v.get("amplitude", 1.0))
        if kind == "product-of-cutoffs":
            return seqspace.product_of_cutoffs(v["scales"], v.get("amplitude", 1.0))
        terms = {}
        for chunk in v["terms"].split(";"):
            if chunk.strip():
                exps, _, coef = chunk.partition(":")
                terms[tuple(int(e) for e in exps.split(","))] = float(coef)
        return seqspace.polynomial(terms)

    def _eigenvalues(self, v, model_name):
        if "eigen_table" in v:
            return hs.read_eigen_table(Path(v["eigen_table"]).read_text())
        self.model(model_name)
        if model_name not in self.eigen:
            raise InvalidInputError("eigen weights need an eigen_table or a free-field model")
        return self.eigen[model_name]

    def scheme(self, name, model_name):
        v = self.cfg.named("scheme", name).values
        M0 = v.get("M0", (1.0,))
        if v["kind"] == "free-field":
            s = qr_check.free_field_scheme(self._eigenvalues(v, model_name), v["m"], v["alpha"], M0)
        else:
            N = v["N"]
            lam = None
            if "eigen:" in v["beta"] + v["gamma"]:
                lam = self._eigenvalues(v, model_name)

            def gen(spec):
                g, _, param = spec.partition(":")
                return seqspace.weights(g, N, float(param), lam)

            s = qr_check.WeightScheme(v["kind"], gen(v["beta"]), gen(v["gamma"]), v["alpha"],
                                      v.get("p", 2.0), M0, source=f"config:{name}")
        if "M_grid" in v:
            s = qr_check.WeightScheme(s.kind, s.beta, s.gamma, s.alpha, s.p, s.M0,
                                      v["M_grid"], s.source)
        return s


# commands ------------------------------------------------------------------

def _cmd_eigen(ctx, sec):
    v = sec.values
    grid = hs.GridSpec(v.get("d", 1), v.get("R", 20.0), v.get("n", 256))
    eig = hs.eigensystem(grid, v.get("K", 128))
    if "table" in v:
        Path(v["table"]).write_text(eig.to_table())
    yield {"record": "eigensystem", "K": eig.K, "scale": eig.scale,
           "hs_sum": float(eig.hs_partial_sums()[-1])}
    for i, (lam, res, hsum) in enumerate(zip(eig.values, eig.residuals, eig.hs_partial_sums()), 1):
        yield {"record": "eigenpair", "index": i, "lambda": lam, "residual": res,
               "hs_partial_sum": hsum}


def _cmd_sample(ctx, sec):
    model = ctx.model(sec.values["model"])
    n = sec.values.get("nsamples", 1000)
    seed = ctx.cfg.seed
    sums, index = [], 0
    blocks = rngmod.block_sizes(n, ctx.cfg.threads)
    for b, nb in enumerate(blocks):
        X, groups = model.draw(rngmod.stream(seed, "sample", b), nb)
        stats = [measures.grouped_mean(X[:, i], groups) for i in range(model.N)]
        sums.append((nb, stats))
        for row in X:
            yield {"record": "sample", "index": index, "value": row}
            index += 1
    for i in range(model.N):
        w = np.array([nb for nb, _ in sums], float) / n
        means = np.array([st[i][0] for _, st in sums])
        ses = np.array([st[i][1] for _, st in sums])
        yield {"record": "estimate", "index": i, "value": float(np.sum(w * means)),
               "stderr": float(np.sqrt(np.sum((w * ses) ** 2))), "nsamples": n, "seed": seed}


def _cmd_propagator(ctx, sec):
    v = sec.values
    d, eps, m2 = v.get("d", 1), v.get("eps", 1.0), v["m2"]
    x = list(v.get("x", (0,) * d))
    if len(x) != d:
        raise InvalidInputError(f"x needs {d} integer coordinates")
    if "L" in v:
        value = hs.periodic_propagator(d, v["L"], eps, m2, x)
    else:
        value = hs.lattice_propagator(d, eps, m2, x)
    rec = {"record": "propagator", "x": x, "value": value, "periodic_box": v.get("L")}
    if d == 1 and eps == 1.0 and not any(x) and "L" not in v:
        rec["closed_form"] = 1.0 / (np.sqrt(m2) * np.sqrt(m2 + 4.0))
    yield rec


def _cmd_form(ctx, sec):
    v = sec.values
    model = ctx.model(v["model"])
    u = ctx.function(v["function"])
    w = ctx.function(v["function2"]) if "function2" in v else u
    spec = forms.FormSpec(v["alpha"], v["delta"], v.get("nsamples", 10_000),
                          v.get("coords"), ctx.cfg.threads)
    est = forms.form_estimate(model, u, w, spec, ctx.cfg.seed)
    yield {"record": "form", **est.record()}


def _cmd_chain(ctx, sec):
    v = sec.values
    model = ctx.model(v["model"])
    u = ctx.function(v["function"]) if "function" in v else seqspace.cutoff(0)
    seed = ctx.cfg.seed
    rep = process.invariance_test(model, u, v["alpha"], v["delta"], v["T"],
                                  v.get("chains", 1000), seed)
    yield {"record": "invariance", **rep}
    config = process.JumpChainConfig(v["alpha"], v["delta"], v["T"], v.get("max_events", 10**6))
    ntraj = v.get("trajectories", 1)
    starts = model.sample(rngmod.stream(seed, "chain", "start"), ntraj)
    for k in range(ntraj):
        traj = process.simulate(model, starts[k], config, rngmod.stream(seed, "chain", k))
        yield {"record": "trajectory", "chain": k, "events": traj.n_events,
               "terminal": traj.terminal, "final_state": traj.final()}
        if v.get("dump", False):
            for t, i, s in zip(traj.times[1:], traj.coords, traj.states[1:]):
                yield {"record": "event", "chain": k, "time": t, "coordinate": int(i),
                       "value": s[i]}


def _cmd_qr(ctx, sec):
    v = sec.values
    model = ctx.model(v["model"])
    scheme = ctx.scheme(v["scheme"], v["model"])
    for cond in v["conditions"]:
        rep = qr_check.check_condition(model, scheme, cond, v.get("N_terms", scheme.length),
                                       v.get("nsamples", 10_000), ctx.cfg.seed,
                                       ctx.cfg.threshold, v.get("n_rest", 32))
        yield {"record": "qr", **rep.record()}


def _cmd_verify(ctx, sec):
    from . import acceptance

    criteria = sec.values.get("criteria") if sec else None
    seed = 0 if ctx.cfg.seed is None else ctx.cfg.seed
    for rec in acceptance.run_all(seed, criteria):
        yield {"record": "criterion", **rec}


DISPATCH = {"eigen": _cmd_eigen, "sample": _cmd_sample, "propagator": _cmd_propagator,
            "form": _cmd_form, "chain": _cmd_chain, "qr-report": _cmd_qr, "verify": _cmd_verify}


def run(cfg: ExperimentConfig):
    """Execute a command.  Returns (exit status, records, error or None).

    Records produced before a failure are returned so they can still be written.
    """
    header = {"command": cfg.command, "version": __version__, "seed": cfg.seed,
              "threads": cfg.threads, "parameters": cfg.parameters()}
    ctx = _Context(cfg)
    records = []
    try:
        for payload in DISPATCH[cfg.command](ctx, cfg.section(COMMAND_SECTION[cfg.command])):
            records.append({**header, **payload})
    except NLFormsError as exc:
        return exc.exit_code, records, exc
    if cfg.command == "verify" and not all(r["passed"] for r in records):
        return 1, records, None
    return 0, records, None


SUMMARY_COLUMNS = {
    "verify": ["id", "name", "passed"],
    "qr-report": ["condition", "verdict", "total", "threshold"],
    "form": ["value", "stderr", "nsamples", "alpha", "delta"],
    "chain": ["record", "chain", "events", "terminal", "time", "coordinate", "difference",
              "pooled_stderr", "passed"],
    "eigen": ["record", "index", "lambda", "residual"],
    "propagator": ["x", "value", "closed_form"],
}


def emit(records, out=None, summary=None, command=None) -> None:
    """Write records as JSON lines to ``out`` (path or stream) and a text table to ``summary``."""
    text = dump_lines(records)
    if out is None:
        sys.stdout.write(text)
    elif hasattr(out, "write"):
        out.write(text)
    else:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            raise InvalidInputError(f"cannot write {out}: {exc}") from None
    if summary is not None:
        cols = SUMMARY_COLUMNS.get(command)
        if command == "sample":
            records = [r for r in records if r.get("record") == "estimate"]
            cols = ["index", "value", "stderr", "nsamples"]
        summary.write(summary_table(records, cols))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="nlforms", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="experiment config file")
    parser.add_argument("--seed", type=int, help="root seed (overrides the config)")
    parser.add_argument("--out", help="JSONL output path (default: stdout)")
    parser.add_argument("--threads", type=int, help="number of sample partitions")
    args = parser.parse_args(argv)
    try:
        text = Path(args.config).read_text() if args.config else ""
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise InvalidInputError("seed must be an unsigned 64-bit integer")
        cfg = parse_config(text, command=args.command, seed=args.seed)
        if args.threads is not None:
            if args.threads < 1:
                raise InvalidInputError("threads must be positive")
            cfg.threads = args.threads
        out = args.out or cfg.out
        status, records, error = run(cfg)
        emit(records, out, sys.stderr, cfg.command)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return InvalidInputError.exit_code
    except NLFormsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    if error is not None:
        print(f"error: {error}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
