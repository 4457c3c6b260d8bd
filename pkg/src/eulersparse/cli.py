"""Command-line front end: ``gen``, ``decompose``, ``sparsify``, ``verify``, ``bench``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import colouring, toggle
from .cycles import naive_short_cycle_decomposition, validate_decomposition
from .errors import EulerSparseError
from .graph import binary_decompose, generate_random_eulerian, partition_by_weight, read_graph, write_json, write_tsv
from .verify import certify

EXIT_OK, EXIT_VERIFY_FAILED, EXIT_USAGE = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    method: str = "toggle"
    oracle: str = "gaussian-walk"
    epsilon: float = 0.5
    seed: int = 0
    stop_constant: float | None = None  # None: the method's calibrated constant
    leverage_factor: float | None = None  # None: 4 (toggle) or 16 (colour)
    resistances: str = "exact"
    max_rounds: int | None = None
    verify: bool = False

    def run(self, g):
        if self.method == "toggle":
            kw = {}
            if self.leverage_factor is not None:
                kw["leverage_threshold_factor"] = self.leverage_factor
            if self.max_rounds is not None:
                kw["max_rounds"] = self.max_rounds
            cfg = toggle.ToggleConfig(
                epsilon=self.epsilon,
                stop_constant=self.stop_constant or toggle.CALIBRATED_STOP_CONSTANT,
                seed=self.seed,
                resistances=self.resistances,
                verify=self.verify,
                **kw,
            )
            return toggle.sparsify(g, cfg)
        kw = {}
        if self.leverage_factor is not None:
            kw["filter_factor"] = self.leverage_factor
        if self.max_rounds is not None:
            kw["max_rounds"] = self.max_rounds
        cfg = colouring.ColourConfig(
            epsilon=self.epsilon,
            stop_constant=self.stop_constant or colouring.CALIBRATED_STOP_CONSTANT,
            seed=self.seed,
            oracle=self.oracle,
            resistances=self.resistances,
            verify=self.verify,
            **kw,
        )
        return colouring.pcs(g, cfg)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


# -- subcommands -------------------------------------------------------------------


def cmd_gen(a) -> int:
    g = generate_random_eulerian(
        a.n, a.cycles, max_len=a.max_len, max_weight_exp=a.max_weight_exp, seed=a.seed,
        ensure_connected=a.connected,
    )
    _emit(write_json(g) if a.format == "json" else write_tsv(g), a.out)
    return EXIT_OK


def cmd_decompose(a) -> int:
    g = binary_decompose(read_graph(a.graph))
    rng = np.random.default_rng(a.seed)
    levels = []
    ok = True
    for lv in partition_by_weight(g).levels:
        d = naive_short_cycle_decomposition(lv.graph, int(rng.integers(2**31)))
        rep = validate_decomposition(lv.graph, d)
        ok &= rep.passed
        levels.append({
            "level": int(lv.level),
            "weight": 1 << int(lv.level),
            "edges": lv.graph.m,
            "num_cycles": len(d.cycles),
            "length_histogram": {str(k): v for k, v in sorted(d.length_histogram().items())},
            "leftover_count": len(d.leftover),
            "certificate": d.certificate,
            "valid": rep.passed,
        })
    _emit(json.dumps({"n": g.n, "m": g.m, "levels": levels}, indent=2), a.out)
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


def _config_from_args(a) -> RunConfig:
    return RunConfig(
        method=a.method,
        oracle=a.oracle,
        epsilon=a.eps,
        seed=a.seed,
        stop_constant=a.stop_constant,
        leverage_factor=a.leverage_factor,
        resistances=a.resistances,
        max_rounds=a.max_rounds,
        verify=a.verify,
    )


def cmd_sparsify(a) -> int:
    g = read_graph(a.graph)
    cfg = _config_from_args(a)
    res = cfg.run(g)
    h = res.graph
    if a.out:
        if a.method == "toggle":
            write_tsv(h, a.out)
        else:
            write_json(h, a.out)
    report = res.to_dict()
    report["config"] = asdict(cfg)
    code = EXIT_OK
    if a.verify:
        cert = certify(g, h, a.eps, power_of_two=a.method == "toggle")
        report["certificate"] = cert.to_dict()
        code = EXIT_OK if cert.passed else EXIT_VERIFY_FAILED
    _emit(json.dumps(report, indent=2, default=_json_default), a.report)
    return code


def cmd_verify(a) -> int:
    cert = certify(read_graph(a.original), read_graph(a.sparsified), a.eps, power_of_two=a.power_of_two)
    _emit(json.dumps(cert.to_dict(), indent=2, default=_json_default), a.out)
    return EXIT_OK if cert.passed else EXIT_VERIFY_FAILED


BENCH_FIELDS = ["n", "epsilon", "seed", "method", "edges_input", "edges_output", "measured_error", "rounds", "seconds"]


def _bench_cell(args) -> list[dict]:
    n, eps, seed, density, max_len, oracle = args
    g = generate_random_eulerian(n, density * n, max_len=max_len, seed=seed, ensure_connected=True)
    rows = []
    for method in ("toggle", "colour"):
        res = RunConfig(method=method, oracle=oracle, epsilon=eps, seed=seed, verify=True).run(g)
        rows.append({
            "n": n, "epsilon": eps, "seed": seed, "method": method,
            "edges_input": g.m, "edges_output": res.graph.m,
            "measured_error": round(float(res.measured_error), 6),
            "rounds": len(res.rounds), "seconds": round(res.seconds, 3),
        })
    return rows


def bench_threads() -> int:
    try:
        return max(1, int(os.environ.get("SPARSIFY_THREADS", "1")))
    except ValueError:
        return 1


def run_bench(ns, epss, seeds, density=60, max_len=6, oracle="gaussian-walk", threads=1) -> dict:
    """Both methods on every (n, eps, seed) cell; returns rows plus a monotonicity summary."""
    cells = [(n, e, s, density, max_len, oracle) for n in ns for e in epss for s in range(seeds)]
    if threads > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            rows = [r for part in ex.map(_bench_cell, cells) for r in part]
    else:
        rows = [r for c in cells for r in _bench_cell(c)]
    summary = []
    for method in ("toggle", "colour"):
        for n in ns:
            means = {e: float(np.mean([r["edges_output"] for r in rows if r["method"] == method and r["n"] == n and r["epsilon"] == e])) for e in epss}
            order = sorted(epss, reverse=True)
            summary.append({
                "method": method, "n": n,
                "mean_edges_by_epsilon": {str(e): means[e] for e in order},
                "edges_grow_as_epsilon_shrinks": all(means[a] <= means[b] for a, b in zip(order, order[1:])),
            })
    return {"rows": rows, "summary": summary}


def bench_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_FIELDS, lineterminator="\n")
    w.writeheader()
    w.writerows(report["rows"])
    return buf.getvalue()


def cmd_bench(a) -> int:
    report = run_bench(a.n, a.eps, a.seeds, a.density, a.max_len, a.oracle, bench_threads())
    _emit(bench_csv(report) if a.csv else json.dumps(report, indent=2), a.out)
    return EXIT_OK


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


# -- parser -------------------------------------------------------------------------


def _positive_float(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eulersparse", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random Eulerian multigraph")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--cycles", type=int, required=True)
    g.add_argument("--max-len", type=int, default=6)
    g.add_argument("--max-weight-exp", type=int, default=0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--connected", action="store_true", help="redraw until connected")
    g.add_argument("--format", choices=["tsv", "json"], default="tsv")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    d = sub.add_parser("decompose", help="per-level short cycle decomposition report")
    d.add_argument("graph")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out")
    d.set_defaults(func=cmd_decompose)

    s = sub.add_parser("sparsify", help="sparsify an Eulerian graph")
    s.add_argument("graph")
    s.add_argument("--method", choices=["toggle", "colour"], default="toggle")
    s.add_argument("--oracle", choices=["random-sign", "gaussian-walk"], default="gaussian-walk")
    s.add_argument("--eps", type=_positive_float, default=0.5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--stop-constant", type=_positive_float)
    s.add_argument("--leverage-factor", type=_positive_float)
    s.add_argument("--resistances", choices=["exact", "sketch"], default="exact")
    s.add_argument("--max-rounds", type=int)
    s.add_argument("--verify", action="store_true", help="certify the output; exit 1 on failure")
    s.add_argument("--out", help="sparsified graph (TSV for toggle, JSON for colour)")
    s.add_argument("--report", help="JSON round report (default stdout)")
    s.set_defaults(func=cmd_sparsify)

    v = sub.add_parser("verify", help="certify a sparsifier against its original")
    v.add_argument("original")
    v.add_argument("sparsified")
    v.add_argument("--eps", type=_positive_float, required=True)
    v.add_argument("--power-of-two", action="store_true", help="also require power-of-two integral weights")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="compare both methods over an (n, eps, seed) grid")
    b.add_argument("--n", type=int, nargs="+", default=[100])
    b.add_argument("--eps", type=_positive_float, nargs="+", default=[0.5])
    b.add_argument("--seeds", type=int, default=1)
    b.add_argument("--density", type=int, default=60, help="random cycles per vertex")
    b.add_argument("--max-len", type=int, default=6)
    b.add_argument("--oracle", choices=["random-sign", "gaussian-walk"], default="gaussian-walk")
    fmt = b.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="JSON report (default)")
    fmt.add_argument("--csv", action="store_true", help="CSV rows")
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    try:
        return a.func(a)
    except (EulerSparseError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
