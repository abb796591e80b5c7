"""Command-line front-end: model loading, pipeline orchestration,
certificates and bound reports.

Every analysis subcommand emits a JSON report (schema "cbverify/1") whose
verdict is three-valued; the exit code keeps the three cases apart so
scripts never conflate incompleteness with falsity:

    0  the queried property holds
    1  the queried property fails
    2  model or usage error
    3  analysis was inconclusive under the given budgets

Positive verdicts carry self-contained certificates: the replayable
object together with the (serialized) machine it replays on, so `replay`
re-validates them without re-running the analysis.  Reports are
deterministic byte-for-byte for fixed model, budgets, and tool version.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys

from . import __version__
from .dcps import (
    Dcps,
    _sym_from_json,
    _sym_to_json,
    dcps_validate,
    progressivize,
)
from .foundations import (
    BoundReport,
    BudgetExceeded,
    Multiset,
    abstraction_bound_B,
    balloon_bound_N,
    pump_bound_M,
    ramsey_bound,
    symkey,
)
from .starvation import decide_starvation
from .vass import (
    VassConfig,
    VassModel,
    dcfs_to_vass,
    dcps_to_dcfs,
    decide_nontermination,
    reach_oracle,
    replay_path,
)
from .vassb import (
    AbWitness,
    VassbConfig,
    VassbModel,
    check_ab_witness,
    dcps_to_vassb,
    decide_progressive,
)

SCHEMA = "cbverify/1"


# ---------------------------------------------------------------------------
# report plumbing
# ---------------------------------------------------------------------------


def _jsonable(obj):
    """Best-effort conversion of analysis results to JSON-stable values."""
    if isinstance(obj, BoundReport):
        return obj.to_json()
    if isinstance(obj, Multiset):
        return obj.to_json()
    if isinstance(obj, dict):
        out = {}
        for k, v in sorted(obj.items(), key=lambda kv: symkey(kv[0])):
            out[k if isinstance(k, str) else symkey(k)] = _jsonable(v)
        return out
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj, key=symkey) if isinstance(obj, (set, frozenset)) else obj
        return [_jsonable(v) for v in items]
    if isinstance(obj, float):
        if obj == float("inf"):
            return "inf"
        return obj
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if hasattr(obj, "to_json"):
        return obj.to_json()
    if hasattr(obj, "_asdict"):
        return _jsonable(obj._asdict())
    return symkey(obj)


def _model_hash(data):
    body = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(body.encode()).hexdigest()


def _budget_args(args):
    return {
        "km_nodes": args.km_nodes,
        "bfs_nodes": args.bfs_nodes,
        "place_cutoff": args.place_cutoff,
        "balloon_budget": args.balloon_budget,
        "depth": args.depth,
        "jobs": args.jobs,
    }


def _report(kind, args, model_data, verdict, certificate, bounds=None, notes=None):
    return {
        "schema": SCHEMA,
        "tool_version": __version__,
        "query": {
            "kind": kind,
            "k": getattr(args, "k", None),
            "budgets": _budget_args(args),
        },
        "model_sha256": _model_hash(model_data) if model_data is not None else None,
        "verdict": verdict,
        "certificate": certificate,
        "bounds": _jsonable(bounds or []),
        "notes": _jsonable(notes or {}),
    }


def _emit(report, args):
    body = json.dumps(report, indent=2, sort_keys=True)
    if getattr(args, "report", None):
        with open(args.report, "w") as fh:
            fh.write(body + "\n")
        _render_figure(report, args.report)
        print(f"report written to {args.report}")
    else:
        print(body)


def _render_figure(report, report_path):
    """One PNG per report, next to the JSON: model and certificate size
    overview, enough to eyeball which pipeline stage dominated."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    labels, values = [], []
    cert = report.get("certificate") or {}
    for key in ("prefix", "cycle", "path"):
        if key in cert:
            labels.append(f"certificate {key} length")
            values.append(len(cert[key]))
    wit = cert.get("witness")
    if wit:
        labels.append("witness run length")
        values.append(len(wit.get("steps", [])))
    machine = cert.get("vass") or cert.get("vassb") or {}
    for key in ("states", "places", "balloon_states", "edges"):
        if key in machine:
            labels.append(f"machine {key}")
            values.append(len(machine[key]))
    if not labels:
        labels, values = ["(no certificate)"], [0]
    fig, ax = plt.subplots(figsize=(7, 0.6 * len(labels) + 1.2))
    ax.barh(range(len(labels)), values, color="#4878b0")
    ax.set_yticks(range(len(labels)))
    ax.set_yticklabels(labels)
    ax.invert_yaxis()
    ax.set_xlabel("count")
    ax.set_title(f"{report['query']['kind']}: {report['verdict']}")
    fig.tight_layout()
    base = report_path[:-5] if report_path.endswith(".json") else report_path
    fig.savefig(base + ".png")
    plt.close(fig)


def _vass_json(vass):
    return vass.to_json()


def _config_json(c):
    return {
        "state": _sym_to_json(c.state),
        "marking": {symkey(p): n for p, n in sorted(c.marking.items(), key=lambda kv: symkey(kv[0]))},
    }


def _config_from_json(model, data):
    by_key = {symkey(p): p for p in model.places}
    return VassConfig(
        _sym_from_json(data["state"]),
        Multiset({by_key[k]: n for k, n in data["marking"].items()}),
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_validate(args):
    data, model = _load_dcps(args.model)
    errors = dcps_validate(model, args.k)
    verdict = "valid" if not errors else "invalid"
    report = _report("validate", args, data, verdict, None, notes={"errors": errors})
    _emit(report, args)
    return 0 if not errors else 2


def _cmd_nonterm(args):
    data, model = _load_dcps(args.model)
    dcfs = dcps_to_dcfs(model, args.k)
    vass, init = dcfs_to_vass(dcfs, args.k)
    try:
        res = decide_nontermination(vass, init, budget=args.km_nodes)
    except BudgetExceeded as e:
        report = _report("nonterm", args, data, "unknown", None, notes={"reason": str(e)})
        _emit(report, args)
        return 3
    if res["status"] == "infinite_run":
        cert = {
            "kind": "lasso",
            "vass": _vass_json(vass),
            "initial": _config_json(init),
            "prefix": res["certificate"]["prefix"],
            "cycle": res["certificate"]["cycle"],
        }
        report = _report("nonterm", args, data, "infinite_run", cert)
        _emit(report, args)
        return 0
    report = _report("nonterm", args, data, "none", None)
    _emit(report, args)
    return 1


def _progressive_certificate(res):
    return {
        "kind": "progressive_witness",
        "vassb": res["model"].to_json(),
        "witness": res["witness"].to_json(),
    }


def _cmd_fair_nonterm(args):
    data, model = _load_dcps(args.model)
    pm = progressivize(model, args.k)
    mb, q0 = dcps_to_vassb(pm, args.k)
    s0 = VassbConfig(q0, Multiset(), Multiset())
    res = decide_progressive(
        mb, s0, km_nodes=args.km_nodes, bfs_nodes=args.bfs_nodes,
        n_budget=args.balloon_budget, search_nodes=args.depth,
    )
    if res["status"] == "progressive_run":
        cert = _progressive_certificate(res)
        report = _report("fair-nonterm", args, data, "infinite_fair_run", cert,
                         notes=res.get("notes"))
        _emit(report, args)
        return 0
    verdict = "none" if res["status"] == "none" else "unknown"
    report = _report("fair-nonterm", args, data, verdict, None,
                     notes={k: v for k, v in res.items() if k != "status"})
    _emit(report, args)
    return 1 if verdict == "none" else 3


def _thread_type_json(t):
    return {
        "initial_global": _sym_to_json(t.g),
        "initial_stack": _sym_to_json(t.gamma),
        "switches": [[_sym_to_json(a) for a in sw] for sw in t.switches],
        "final_global": _sym_to_json(t.final),
    }


def _cmd_starvation(args):
    data, model = _load_dcps(args.model)
    res = decide_starvation(
        model, args.k,
        km_nodes=args.km_nodes, bfs_nodes=args.bfs_nodes,
        n_budget=args.balloon_budget, search_nodes=args.depth,
    )
    if res["status"] == "starving_run":
        prog = res["progressive"]
        cert = _progressive_certificate(prog)
        cert.update({
            "kind": "starving_witness",
            "starved_segment": res["i"],
            "production_tuple": [
                {"type": _thread_type_json(t), "productions": [m.to_json() for m in ms]}
                for t, ms in sorted(res["u"].items(), key=lambda kv: symkey(kv[0]))
            ],
            "consistency_witness": [_sym_to_json(a) for a in res["consistency_witness"]],
        })
        report = _report("starvation", args, data, "starving_run", cert,
                         notes=res.get("notes"))
        _emit(report, args)
        return 0
    verdict = res["status"]
    report = _report("starvation", args, data, verdict, None,
                     notes={k: v for k, v in res.items() if k != "status"})
    _emit(report, args)
    return 1 if verdict == "none" else 3


def _cmd_vassb_progressive(args):
    with open(args.model) as fh:
        data = json.load(fh)
    model = VassbModel.from_json(data)
    state = _sym_from_json(json.loads(args.state)) if args.state else \
        _sym_from_json(data["initial_state"])
    s0 = VassbConfig(state, Multiset(), Multiset())
    res = decide_progressive(
        model, s0, km_nodes=args.km_nodes, bfs_nodes=args.bfs_nodes,
        n_budget=args.balloon_budget, search_nodes=args.depth,
    )
    if res["status"] == "progressive_run":
        cert = _progressive_certificate(res)
        report = _report("vassb-progressive", args, data, "progressive_run", cert,
                         notes=res.get("notes"))
        _emit(report, args)
        return 0
    verdict = "none" if res["status"] == "none" else "unknown"
    report = _report("vassb-progressive", args, data, verdict, None,
                     notes={k: v for k, v in res.items() if k != "status"})
    _emit(report, args)
    return 1 if verdict == "none" else 3


def _cmd_vass_reach(args):
    with open(args.model) as fh:
        data = json.load(fh)
    model = VassModel.from_json(data)
    c0 = _config_from_json(model, data["initial"])
    target = _config_from_json(model, data["target"])
    res = reach_oracle(model, c0, target, bfs_nodes=args.bfs_nodes,
                       km_nodes=args.km_nodes, place_cutoff=args.place_cutoff)
    if res["status"] == "reachable":
        cert = None
        if res["path"] is not None:
            cert = {
                "kind": "path",
                "vass": _vass_json(model),
                "initial": _config_json(c0),
                "target": _config_json(target),
                "path": res["path"],
            }
        report = _report("vass-reach", args, data, "reachable", cert)
        _emit(report, args)
        return 0
    verdict = res["status"]
    report = _report("vass-reach", args, data, verdict, None)
    _emit(report, args)
    return 1 if verdict == "unreachable" else 3


def _cmd_bounds(args):
    reports = []
    if args.family == "ramsey":
        reports.append(ramsey_bound(*map(int, args.values)))
    elif args.family == "pump":
        reports.append(pump_bound_M(*map(int, args.values)))
    elif args.family == "abstraction":
        reports.append(abstraction_bound_B(*map(int, args.values)))
    elif args.family == "balloon":
        reports.append(balloon_bound_N(*map(int, args.values)))
    else:
        print(f"unknown bound family {args.family!r}", file=sys.stderr)
        return 2
    report = _report("bounds", args, None, "computed", None, bounds=reports)
    _emit(report, args)
    return 0


def _replay_lasso(cert):
    vass = VassModel.from_json(cert["vass"])
    c0 = _config_from_json(vass, cert["initial"])
    prefix = replay_path(vass, c0, cert["prefix"])
    if prefix is None:
        return False, "prefix does not replay"
    cycle = replay_path(vass, prefix[-1], cert["cycle"])
    if cycle is None:
        return False, "cycle does not replay"
    start, end = cycle[0], cycle[-1]
    if end.state != start.state:
        return False, "cycle does not return to its state"
    if not start.marking <= end.marking:
        return False, "cycle is not pumpable"
    return True, "lasso replays and pumps"


def _replay_reach_path(cert):
    vass = VassModel.from_json(cert["vass"])
    c0 = _config_from_json(vass, cert["initial"])
    target = _config_from_json(vass, cert["target"])
    configs = replay_path(vass, c0, cert["path"])
    if configs is None:
        return False, "path does not replay"
    if configs[-1] != target:
        return False, "path misses the target"
    return True, "path replays to the target"


def _replay_witness(cert):
    model = VassbModel.from_json(cert["vassb"])
    wit = AbWitness.from_json(model, cert["witness"])
    res = check_ab_witness(wit, model)
    if res[0] != "valid":
        return False, f"witness condition {res[1]} fails"
    return True, "witness conditions verified"


def _cmd_replay(args):
    with open(args.model) as fh:
        report = json.load(fh)
    if report.get("schema") != SCHEMA:
        print(f"not a {SCHEMA} report", file=sys.stderr)
        return 2
    cert = report.get("certificate")
    if cert is None:
        print("report carries no certificate; nothing to replay")
        return 0
    checkers = {
        "lasso": _replay_lasso,
        "path": _replay_reach_path,
        "progressive_witness": _replay_witness,
        "starving_witness": _replay_witness,
    }
    checker = checkers.get(cert.get("kind"))
    if checker is None:
        print(f"unknown certificate kind {cert.get('kind')!r}", file=sys.stderr)
        return 2
    ok, msg = checker(cert)
    print(("valid: " if ok else "INVALID: ") + msg)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _load_dcps(path):
    with open(path) as fh:
        data = json.load(fh)
    return data, Dcps.load(path)


def _build_parser():
    p = argparse.ArgumentParser(
        prog="cbverify",
        description="Context-bounded liveness analyses for dynamic thread pools.",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, model_help):
        sp.add_argument("model", help=model_help)
        sp.add_argument("--k", type=int, default=1, help="context-switch bound")
        sp.add_argument("--report", help="write the JSON report (and a PNG figure) here")
        sp.add_argument("--km-nodes", type=int, default=200_000,
                        help="coverability / termination search budget")
        sp.add_argument("--bfs-nodes", type=int, default=200_000,
                        help="forward exploration budget")
        sp.add_argument("--place-cutoff", type=int, default=64,
                        help="per-place token cutoff for forward exploration")
        sp.add_argument("--balloon-budget", type=int, default=2,
                        help="balloons materialized per reachability reduction")
        sp.add_argument("--depth", type=int, default=20000,
                        help="witness search node budget")
        sp.add_argument("--jobs", type=int, default=1,
                        help="accepted for interface stability; queries run sequentially")

    sp = sub.add_parser("validate", help="structural model checks")
    common(sp, "DCPS model file")
    sp.set_defaults(fn=_cmd_validate)

    sp = sub.add_parser("nonterm", help="context-bounded infinite run")
    common(sp, "DCPS model file")
    sp.set_defaults(fn=_cmd_nonterm)

    sp = sub.add_parser("fair-nonterm", help="fair context-bounded infinite run")
    common(sp, "DCPS model file")
    sp.set_defaults(fn=_cmd_fair_nonterm)

    sp = sub.add_parser("starvation", help="fair run starving some thread")
    common(sp, "DCPS model file")
    sp.set_defaults(fn=_cmd_starvation)

    sp = sub.add_parser("vassb-progressive", help="progressive run of a balloon machine")
    common(sp, "VASSB model file")
    sp.add_argument("--state", help="initial state (JSON symbol); default from the file")
    sp.set_defaults(fn=_cmd_vassb_progressive)

    sp = sub.add_parser("vass-reach", help="configuration reachability in a VASS")
    common(sp, "VASS model file with initial/target configurations")
    sp.set_defaults(fn=_cmd_vass_reach)

    sp = sub.add_parser("bounds", help="print a closed-form bound report")
    sp.add_argument("family", choices=["ramsey", "pump", "abstraction", "balloon"])
    sp.add_argument("values", nargs="+", help="integer arguments of the bound")
    sp.add_argument("--report", help="write the JSON report (and a PNG figure) here")
    for flag, default in (("--km-nodes", 200_000), ("--bfs-nodes", 200_000),
                          ("--place-cutoff", 64), ("--balloon-budget", 2),
                          ("--depth", 20000), ("--jobs", 1)):
        sp.add_argument(flag, type=int, default=default, help=argparse.SUPPRESS)
    sp.set_defaults(fn=_cmd_bounds, k=None)

    sp = sub.add_parser("replay", help="re-validate a report's certificate")
    sp.add_argument("model", metavar="report", help="report file to re-validate")
    sp.set_defaults(fn=_cmd_replay)

    return p


def run_command(argv):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (FileNotFoundError, json.JSONDecodeError, KeyError, ValueError, AssertionError) as e:
        print(f"model error: {e}", file=sys.stderr)
        return 2
    except BudgetExceeded as e:
        print(f"unknown: budget exhausted in {e}", file=sys.stderr)
        return 3


def main(argv=None):
    return run_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
