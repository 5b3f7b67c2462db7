"""Command-line driver.

Each subcommand reads a JSON config, runs one computation and writes CSV
(or JSON for ``classify``) to ``--out`` or stdout. Output files are written
atomically. Exit codes: 0 ok, 2 configuration error, 3 numerical
degeneracy, 4 size cap exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import chain1d, looptree, oracle, percolation, siegelgraph, tree
from .errors import (BoundaryUnderflowError, CapExceededError, ConfigError, DegenerateDenominatorError,
                     IndeterminateError, InadmissibleModelError, KernelConditionError,
                     NumericalDegeneracyError, OutOfBandError)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CAP = 0, 2, 3, 4

COMMANDS = ("green", "density", "moments", "percolation", "looptree", "classify", "oracle-compare")

# keys accepted by every config, then per command
_COMMON = {"command", "seed"}
_KEYS = {
    "green": {"model", "k", "d", "side", "gamma", "potential", "lambda_grid", "eps", "depth", "oracle_depth",
              "edgelist"},
    "density": {"model", "potential", "interval", "eps", "grid", "depth"},
    "moments": {"model", "k", "a", "distribution", "joint", "root_distribution", "lambda", "eps_ladder", "pool",
                "generations", "p", "allow_inadmissible", "init"},
    "percolation": {"model", "q_del", "lambda", "eps_ladder", "pool", "generations", "p", "init"},
    "looptree": {"gamma", "lambda", "levels"},
    "classify": {"mode", "lambda_grid", "delta", "gamma", "joint", "c11", "c22", "c12"},
    "oracle-compare": {"model", "k", "d", "side", "gamma", "potential", "lambda", "depth", "q_del", "edgelist"},
}
_STOCHASTIC = {"moments", "percolation"}


def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return "%.17g" % float(x)


def git_describe():
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(["git", "describe", "--always", "--tags", "--dirty"], cwd=here,
                             capture_output=True, text=True, timeout=10)
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    from importlib.metadata import PackageNotFoundError, version
    try:
        return "v" + version("artifact")
    except PackageNotFoundError:
        return "unknown"


def write_atomic(path, text):
    """Write `text` to `path` through a temporary file in the same directory."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def render_csv(header, rows, meta=None):
    buf = io.StringIO()
    for key, value in (meta or {}).items():
        buf.write(f"# {key}={value}\r\n")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


# config helpers ----------------------------------------------------------------------

def _require(cfg, key):
    if key not in cfg:
        raise ConfigError("missing required key", key=key)
    return cfg[key]


def _complex(value, key):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigError("expected a number or [re, im]", key=key)


def _grid(cfg, key):
    g = _require(cfg, key)
    if not (isinstance(g, list) and len(g) == 3 and int(g[2]) >= 1):
        raise ConfigError("expected [lo, hi, n]", key=key)
    return np.linspace(float(g[0]), float(g[1]), int(g[2]))


def _positive_int(cfg, key, default):
    v = cfg.get(key, default)
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise ConfigError("expected a positive integer", key=key)
    return v


def _eps_ladder(cfg):
    ladder = _require(cfg, "eps_ladder")
    if not isinstance(ladder, list) or not ladder or any(float(e) <= 0 for e in ladder):
        raise ConfigError("expected a nonempty list of positive numbers", key="eps_ladder")
    return sorted((float(e) for e in ladder), reverse=True)


def validate_config(cfg, command, seed_override=None):
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    if "command" in cfg and cfg["command"] != command:
        raise ConfigError(f"config is for {cfg['command']!r}, not {command!r}", key="command")
    unknown = set(cfg) - _COMMON - _KEYS[command]
    if unknown:
        raise ConfigError("unknown key", key=sorted(unknown)[0])
    cfg = dict(cfg)
    if seed_override is not None:
        cfg["seed"] = seed_override
    if command in _STOCHASTIC or (command == "oracle-compare" and cfg.get("model") == "percolation_sample"):
        if "seed" not in cfg:
            raise ConfigError("stochastic runs need a seed", key="seed")
    if "seed" in cfg and (not isinstance(cfg["seed"], int) or isinstance(cfg["seed"], bool) or cfg["seed"] < 0):
        raise ConfigError("seed must be a nonnegative integer", key="seed")
    return cfg


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", key="--config") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
                          key="--config") from exc


def _potential(spec):
    if spec is None:
        return chain1d.PotentialSeq.zero()
    if isinstance(spec, list):
        return chain1d.PotentialSeq.explicit(spec)
    if isinstance(spec, dict):
        kind = spec.get("kind")
        try:
            if kind == "l1_decay":
                return chain1d.PotentialSeq.l1_decay(float(spec["amplitude"]), float(spec["rate"]))
            if kind == "mourre":
                return chain1d.PotentialSeq.mourre(float(spec["q_inf"]), float(spec["amplitude"]),
                                                   float(spec.get("power", 1.0)))
        except KeyError as exc:
            raise ConfigError("missing potential parameter", key=f"potential.{exc.args[0]}") from exc
    raise ConfigError("expected a list or {kind: l1_decay|mourre, ...}", key="potential")


# commands --------------------------------------------------------------------------

def _graph_for(cfg, depth):
    model = _require(cfg, "model")
    if model == "edgelist":
        return siegelgraph.RootedGraph.from_edgelist_file(_require(cfg, "edgelist"))
    if model == "box_Nd":
        return siegelgraph.lattice_box(int(cfg.get("d", 2)), int(cfg.get("side", depth + 2)))
    raise ConfigError(f"unsupported graph model {model!r}", key="model")


def _green_values(cfg, lams, depth):
    model = _require(cfg, "model")
    if model == "chain":
        return chain1d.green_1d(_potential(cfg.get("potential")), lams, depth), "mobius_chain"
    if model == "kary_tree":
        # radially symmetric: the k-ary recursion collapses to one scalar chain
        k = int(cfg.get("k", 2))
        z = np.full(lams.shape, 1j)
        for _ in range(depth + 1):
            z = -1.0 / (k * z + lams)
        return z, "tree_scalar"
    if model == "regular_loop_tree":
        gamma = float(cfg.get("gamma", 0.0))
        return np.array([complex(looptree.loop_green_root(gamma, lam, depth + 1)) for lam in lams]), "loop_fourier"
    g = _graph_for(cfg, depth)
    dec = siegelgraph.decompose_spheres(g, depth + 1)
    return np.array([complex(siegelgraph.green_root_graph(g, None, lam, depth, dec=dec)) for lam in lams]), \
        "siegel"


def _oracle_values(cfg, lams, depth):
    model = cfg["model"]
    if model == "edgelist":
        H = oracle.FiniteHamiltonian.from_graph(oracle.restrict_ball(_graph_for(cfg, depth), depth + 1))
    else:
        desc = {k: v for k, v in cfg.items() if k in ("model", "k", "d", "side", "gamma", "q_del")}
        if model == "chain":
            desc["potential"] = _potential(cfg.get("potential")).values(np.arange(depth + 2)).tolist()
        if model == "box_Nd":
            desc.setdefault("side", depth + 2)
        H = oracle.build_truncation(desc, depth + 1, cfg.get("seed"))
    return np.array([oracle.solve_green(H, lam) for lam in lams])


def cmd_green(cfg, args):
    eps = float(_require(cfg, "eps"))
    if eps <= 0:
        raise ConfigError("eps must be positive", key="eps")
    lams = _grid(cfg, "lambda_grid") + 1j * eps
    depth = _positive_int(cfg, "depth", chain1d.default_depth(lams))
    vals, method = _green_values(cfg, lams, depth)
    vals = np.atleast_1d(np.asarray(vals, dtype=complex))
    diff = [""] * len(lams)
    if args.oracle:
        odepth = _positive_int(cfg, "oracle_depth", depth)
        diff = np.abs(vals - _oracle_values(cfg, lams, odepth - 1))
    rows = [(lam.real, lam.imag, v.real, v.imag, method, d) for lam, v, d in zip(lams, vals, diff)]
    return render_csv(["lambda_re", "lambda_im", "G_re", "G_im", "method", "oracle_diff"], rows,
                      {"command": "green", "model": cfg["model"], "depth": depth, "git": git_describe()})


def cmd_density(cfg, args):
    if cfg.get("model", "chain") != "chain":
        raise ConfigError("density supports the chain model", key="model")
    interval = _require(cfg, "interval")
    eps = float(_require(cfg, "eps"))
    grid = _positive_int(cfg, "grid", 101)
    depth = cfg.get("depth")
    try:
        rows = chain1d.density_profile(_potential(cfg.get("potential")), tuple(interval), eps, grid, depth)
    except ValueError as exc:
        raise ConfigError(str(exc), key="interval") from exc
    return render_csv(["lambda", "density"], rows, {"command": "density", "eps": _fmt(eps), "git": git_describe()})


def _moment_rows(run, cfg, args, k, p):
    lam0 = float(_require(cfg, "lambda"))
    pool = _positive_int(cfg, "pool", 100_000)
    generations = _positive_int(cfg, "generations", 300)
    rows = []
    for eps in _eps_ladder(cfg):
        lam = complex(lam0, eps)
        samples = run(lam, pool, generations)
        z_ref = tree.tree_fixed_point(k, lam)
        rows.append((eps, tree.moment_Mp(samples, p, z_ref), tree.moment_stderr(samples, p, z_ref),
                     pool, generations))
    meta = {"seed": cfg["seed"], "pool": pool, "generations": generations, "lambda": _fmt(lam0),
            "p": _fmt(p), "git": git_describe()}
    return rows, meta


def cmd_moments(cfg, args):
    model = cfg.get("model", "iid_tree")
    k = int(cfg.get("k", 2))
    a = float(cfg.get("a", 0.0))
    p = float(cfg.get("p", 1.5))
    if p <= 1:
        raise ConfigError("p must be > 1", key="p")
    seed = cfg["seed"]
    init = _complex(cfg["init"], "init") if "init" in cfg else None
    if model == "iid_tree":
        dist = tree.Distribution.from_json(cfg.get("distribution", {"type": "bernoulli_pm1"}))
        m = tree.TreeModel.iid(dist, a, k) if a else tree.TreeModel(k=k)

        def run(lam, pool, gens):
            return tree.population_green(m, lam, pool, gens, seed, args.threads, init=init, p=p)
    elif model == "two_periodic":
        joint = tree.JointDistribution.from_json(_require(cfg, "joint"))
        root = cfg.get("root_distribution")
        m = tree.TreeModel.two_periodic(joint, a, tree.Distribution.from_json(root) if root else None)
        allow = bool(cfg.get("allow_inadmissible", False))
        k = 2

        def run(lam, pool, gens):
            try:
                return tree.two_periodic_population(m, lam, pool, gens, seed, args.threads, init=init,
                                                    allow_inadmissible=allow, p=p)
            except InadmissibleModelError as exc:
                raise ConfigError(str(exc), key="allow_inadmissible") from exc
    else:
        raise ConfigError(f"unknown moments model {model!r}", key="model")
    rows, meta = _moment_rows(run, cfg, args, k, p)
    meta = {"command": "moments", "model": model, **meta}
    return render_csv(["eps", "M_p_estimate", "stderr", "pool_size", "generations"], rows, meta)


def cmd_percolation(cfg, args):
    if cfg.get("model", "percolation") != "percolation":
        raise ConfigError("expected model 'percolation'", key="model")
    try:
        spec = percolation.PercolationSpec(float(_require(cfg, "q_del")))
    except ValueError as exc:
        raise ConfigError(str(exc), key="q_del") from exc
    p = float(cfg.get("p", 1.5))
    seed = cfg["seed"]
    init = _complex(cfg["init"], "init") if "init" in cfg else None

    def run(lam, pool, gens):
        return percolation.percolation_population(spec, lam, pool, gens, seed, args.threads, init=init, p=p)

    rows, meta = _moment_rows(run, cfg, args, 2, p)
    meta = {"command": "percolation", "q_del": _fmt(spec.q_del), **meta}
    return render_csv(["eps", "M_p_estimate", "stderr", "pool_size", "generations"], rows, meta)


def cmd_looptree(cfg, args):
    gamma = float(_require(cfg, "gamma"))
    lam = _complex(_require(cfg, "lambda"), "lambda")
    if lam.imag <= 0:
        raise ConfigError("lambda needs a positive imaginary part", key="lambda")
    levels = _positive_int(cfg, "levels", 8)
    rows = []
    for spec in looptree.loop_spectra(gamma, lam, levels):
        for theta, f in zip(spec.theta(), spec.f):
            rows.append((spec.n, theta, f.real, f.imag))
    return render_csv(["level", "theta", "f_re", "f_im"], rows,
                      {"command": "looptree", "gamma": _fmt(gamma), "git": git_describe()})


def cmd_classify(cfg, args):
    mode = _require(cfg, "mode")
    if mode == "oscillating":
        delta = float(cfg.get("delta", 0.0))
        out = [{"lambda": float(lam), "delta": delta, "classification": tree.oscillating_ac_test(lam, delta)}
               for lam in _grid(cfg, "lambda_grid")]
    elif mode == "meanfield":
        gamma = float(_require(cfg, "gamma"))
        out = {"gamma": gamma, "intervals": [list(iv) for iv in looptree.meanfield_spectrum(gamma)]}
    elif mode == "two_periodic":
        if "joint" in cfg:
            joint = tree.JointDistribution.from_json(cfg["joint"])
            c11, c22, c12 = joint.moments()
        else:
            c11, c22, c12 = (float(_require(cfg, key)) for key in ("c11", "c22", "c12"))
        try:
            delta, ok = tree.correlation_delta(c11, c22, c12)
        except ZeroDivisionError as exc:
            raise ConfigError("c11 + c22 must be positive", key="c11") from exc
        out = {"c11": c11, "c22": c22, "c12": c12, "delta": delta, "admissible": ok}
    elif mode == "loop_theta_zero":
        gamma = float(_require(cfg, "gamma"))
        out = {"gamma": gamma, "window": list(looptree.theta_zero_window(gamma))}
    else:
        raise ConfigError(f"unknown mode {mode!r}", key="mode")
    return json.dumps(out, indent=2, sort_keys=True) + "\n"


def cmd_oracle_compare(cfg, args):
    lam = _complex(_require(cfg, "lambda"), "lambda")
    depth = _positive_int(cfg, "depth", 10)
    lams = np.array([lam])
    ref = _oracle_values(cfg, lams, depth)[0]
    model = cfg["model"]
    rows = [(lam.real, lam.imag, ref.real, ref.imag, "oracle", 0.0)]
    if model in ("chain", "kary_tree", "regular_loop_tree", "meanfield_loop_tree", "box_Nd", "edgelist"):
        if model == "chain":
            g = siegelgraph.half_line(depth + 1)
            pot = _potential(cfg.get("potential")).values(np.arange(depth + 2))
        elif model in ("box_Nd", "edgelist"):
            g, pot = _graph_for(cfg, depth), None
        else:
            g, pot = oracle.model_graph(cfg, depth + 1)
        z = complex(siegelgraph.green_root_graph(g, pot, lam, depth, seed_matrix="dirichlet"))
        rows.append((lam.real, lam.imag, z.real, z.imag, "siegel_dirichlet", abs(z - ref)))
    return render_csv(["lambda_re", "lambda_im", "G_re", "G_im", "method", "oracle_diff"], rows,
                      {"command": "oracle-compare", "model": model, "depth": depth, "git": git_describe()})


HANDLERS = {"green": cmd_green, "density": cmd_density, "moments": cmd_moments, "percolation": cmd_percolation,
            "looptree": cmd_looptree, "classify": cmd_classify, "oracle-compare": cmd_oracle_compare}


def build_parser():
    parser = argparse.ArgumentParser(prog="mobiusgreen", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON run config")
        sp.add_argument("--seed", type=int, help="overrides the config seed")
        sp.add_argument("--oracle", action="store_true", help="add brute-force differences where supported")
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--threads", type=int, default=1, help="worker threads (does not change results)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("must be >= 1", key="--threads")
        cfg = validate_config(load_config(args.config), args.command, args.seed)
        text = HANDLERS[args.command](cfg, args)
    except (ConfigError, OutOfBandError, KernelConditionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapExceededError as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (BoundaryUnderflowError, NumericalDegeneracyError, DegenerateDenominatorError,
            IndeterminateError) as exc:
        print(f"numerical degeneracy: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
