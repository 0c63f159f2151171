"""``lorentzlab`` command line: gen, norm, scan, verify.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
Options may also come from ``--config FILE`` (``key=value`` lines); flags
win over the file, the file over built-in defaults.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .mms import Space
from .normlab import csv_rows, estimate
from .region import RegionSpec, RegionSpecError, axioms_check, emit, scan
from .scalar import arith_mode
from .suites import SUITES
from .testspace import ClassSpace, TestSpaceParams, check_sequences

log = logging.getLogger("lorentzlab")

DEFAULTS = {
    "gen": {"p": None, "N": None, "M": None, "L": 1, "K": 1, "out": None},
    "norm": {"space": None, "p": None, "q": None, "r": None, "budget": 200, "seed": 0,
             "tier": "auto"},
    "scan": {"spec": None, "variant": "Y-closed", "grid": 16, "depth": 3, "svg": None,
             "csv": None, "json": None, "seed": 0},
    "verify": {"trials": None, "seed": 0, "out": None},
}

# trial counts used when --trials is absent
VERIFY_TRIALS = {"lemma1": 100, "lemma2": 0, "sandwich": 100, "cor1": 0, "r1": 0, "interp": 200}


class UsageError(Exception):
    pass


def read_config(path):
    cfg = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        k, v = line.split("=", 1)
        cfg[k.strip().replace("-", "_")] = v.strip()
    return cfg


def _resolve(args, cfg):
    for key, default in DEFAULTS[args.command].items():
        if getattr(args, key, None) is None:
            setattr(args, key, cfg.get(key, default))
    return args


def _need(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m for m in missing))


def _write(path, data: bytes):
    if path in (None, "-"):
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        Path(path).write_bytes(data)


def cmd_gen(args):
    _need(args, "p", "N", "M")
    params = TestSpaceParams.generate(args.p, int(args.N), int(args.M), K=args.K, L=int(args.L))
    report = check_sequences(params.seq)
    _write(args.out, (json.dumps(params.to_json(), sort_keys=True, indent=1) + "\n").encode())
    print(json.dumps({"checks": report}, sort_keys=True), file=sys.stderr)
    return 0 if all(report.values()) else 1


def load_space(path, tier="auto"):
    """A test-space descriptor (class tier, or explicit with ``tier='explicit'``) or a Space JSON."""
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if "alpha" in obj:
        cs = ClassSpace(TestSpaceParams.from_json(obj))
        return cs.explicit() if tier == "explicit" else cs
    return Space.from_json(obj)


def cmd_norm(args):
    _need(args, "space", "p", "q", "r")
    space = load_space(args.space, args.tier)
    est = estimate(space, args.p, args.q, args.r, budget=int(args.budget), seed=int(args.seed),
                   space_id=Path(args.space).name)
    sys.stdout.write(csv_rows([est]))
    return 0


def cmd_scan(args):
    _need(args, "spec")
    spec = RegionSpec.from_json(json.loads(Path(args.spec).read_text(encoding="utf-8")))
    rmap = scan(spec, args.variant, int(args.grid), int(args.depth))
    rmap.meta["seed"] = int(args.seed)
    rmap.meta["mode"] = arith_mode()
    outs = [(args.csv, "csv"), (args.svg, "svg"), (args.json, "json")]
    if not any(path for path, _ in outs):
        outs = [("-", "csv")]
    for path, fmt in outs:
        if path:
            _write(path, emit(rmap, fmt))
    bad = axioms_check(rmap)
    n_bad = sum(len(v) for v in bad.values()) if isinstance(bad, dict) else len(bad)
    print(json.dumps({"classes": rmap.classes(), "axiom_violations": n_bad}, sort_keys=True),
          file=sys.stderr)
    return 0 if n_bad == 0 else 1


def cmd_verify(args):
    trials = VERIFY_TRIALS[args.suite] if args.trials is None else int(args.trials)
    log.info("verify %s trials=%s seed=%s", args.suite, trials, args.seed)
    res = SUITES[args.suite](trials=trials, seed=int(args.seed))
    res["trials"], res["seed"] = trials, int(args.seed)
    _write(args.out, (json.dumps(res, sort_keys=True, indent=1, default=str) + "\n").encode())
    return 0 if res["pass"] else 1


def build_parser():
    ap = argparse.ArgumentParser(prog="lorentzlab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--config", help="key=value file supplying option defaults")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a test-space descriptor")
    g.add_argument("--p")
    g.add_argument("--N")
    g.add_argument("--M")
    g.add_argument("--L")
    g.add_argument("--K")
    g.add_argument("--out", help="output file (default stdout)")

    n = sub.add_parser("norm", help="estimate ||M||_{L^{p,q} -> L^{p,r}} on a space")
    n.add_argument("--space", help="descriptor or space JSON")
    n.add_argument("--p")
    n.add_argument("--q")
    n.add_argument("--r")
    n.add_argument("--budget")
    n.add_argument("--seed")
    n.add_argument("--tier", choices=("auto", "explicit"))

    s = sub.add_parser("scan", help="classify a grid of exponent pairs")
    s.add_argument("--spec", help="region spec JSON")
    s.add_argument("--variant", choices=("Y-closed", "Z-open"))
    s.add_argument("--grid")
    s.add_argument("--depth")
    s.add_argument("--svg")
    s.add_argument("--csv")
    s.add_argument("--json")
    s.add_argument("--seed")

    v = sub.add_parser("verify", help="run a property suite")
    v.add_argument("suite", choices=sorted(SUITES))
    v.add_argument("--trials")
    v.add_argument("--seed")
    v.add_argument("--out")
    return ap


COMMANDS = {"gen": cmd_gen, "norm": cmd_norm, "scan": cmd_scan, "verify": cmd_verify}


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        arith_mode()
        cfg = read_config(args.config) if args.config else {}
        _resolve(args, cfg)
        return COMMANDS[args.command](args)
    except RegionSpecError as e:
        print(f"error: invalid region spec: {e}", file=sys.stderr)
        return 2
    except (UsageError, ValueError, KeyError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
