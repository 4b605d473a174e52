"""Command-line front end: ``aiset-forge <command> <system-file> [names...]``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .adapt import adaptedness
from .aiset import INCONCLUSIVE, invertibility_search
from .crossing import BadPositionError, almost_inclusion, crossing, intersection_number, ordered, position_check
from .cubing import AntisymmetryError, build_complex, collect_walls, fixed_vertex_search, recover_set, \
    separating_vertices
from .dot import emit_dot
from .groups import BudgetExceeded, GroupError
from .regnbhd import BipartiteGraphOfGroups, NonDiscrete, NotRNReady, build_for_group, compute_cccs, \
    pretree_check, reduce, refinement_chain, rn_via_cubing, verify_refinement_chain, verify_rn_properties
from .subgroups import ends_estimate
from .system import SchemaError, System, load_fixture

REPORT_SCHEMA = "aiset-forge/report@1"
COMMANDS = ("ends", "adapted", "crossing", "inumber", "cubing", "ccc", "pretree", "regnbhd", "verify", "fixture")

EXIT_PASS, EXIT_MISMATCH, EXIT_INCONCLUSIVE, EXIT_INPUT = 0, 1, 2, 3


class InputError(Exception):
    pass


def _budgets(sysm: System, override: dict, command: str) -> dict:
    b = {"budget": 2, "cap": 1 << 16}
    b.update(sysm.budgets)
    b.update({k: v for k, v in override.items() if v is not None})
    if "radius" not in b:
        b["radius"] = 2 * b["budget"] + 2 if command in ("cubing", "ccc", "regnbhd", "verify") else 6
    return b


def _need(args, k, what):
    if len(args) != k:
        raise InputError(f"expected {k} name(s): {what}")


def _cmd_ends(S, args, b, opt):
    _need(args, 1, "subgroup")
    return ends_estimate(S.group, S.subgroup(args[0]), b["radius"])


def _cmd_adapted(S, args, b, opt):
    _need(args, 2, "set subgroup")
    (X,), H = S.select(args[:1]), S.subgroup(args[1])
    return adaptedness(X, H, b["radius"]).to_dict()


def _cmd_crossing(S, args, b, opt):
    _need(args, 2, "two sets")
    X, Y = S.select(args)
    R = b["radius"]
    out = crossing(X, Y, R).to_dict()
    out["leq_xy"] = almost_inclusion(X, Y, R).value
    out["leq_yx"] = almost_inclusion(Y, X, R).value
    out["position"] = position_check([X, Y], R, b["budget"]).to_dict()
    try:
        out["order"] = {"value": ordered(X, Y, R).value}
    except BadPositionError as exc:
        out["order"] = {"value": "refused", "reason": str(exc)}
    return out


def _cmd_inumber(S, args, b, opt):
    _need(args, 2, "two sets")
    X, Y = S.select(args)
    return intersection_number(X, Y, b["budget"], b.get("radius")).to_dict(S.group)


def _family(S, args):
    fam = S.select(args)
    if not fam:
        raise InputError("no sets declared")
    return fam


def _cmd_cubing(S, args, b, opt):
    fam = _family(S, args)
    G = S.group
    W = collect_walls(fam, b["budget"], b["radius"])
    C = build_complex(W, b["cap"])
    g = C.graph()
    degrees = sorted(d for _, d in g.degree())
    is_path = len(g) >= 2 and g.number_of_edges() == len(g) - 1 and degrees[-1] <= 2
    rec = []
    for p in range(len(W)):
        got, dom = recover_set(C, p)
        truth = {x for x in dom if W.walls[p].set.member(x)}
        rec.append(got == truth)
    out = {"walls": len(W), "vertices": len(C.vertices), "edges": len(C.edges), "squares": len(C.squares),
           "cubes3": len(C.cubes), "is_path": is_path, "separating_vertices": separating_vertices(C),
           "recovery_exact": all(rec),
           "invertibility": {X.name: invertibility_search(X, b["budget"], b["radius"]).to_dict(G) for X in fam},
           "complex": C.to_dict()}
    if opt.get("fix"):
        H = S.subgroup(opt["fix"])
        gens = [G.parse(w) for w in opt.get("fix_generators", [])] or None
        out["fixed_vertex"] = fixed_vertex_search(C, H, generators=gens).to_dict(W)
    return out, C


def _cmd_ccc(S, args, b, opt):
    fam = _family(S, args)
    W = collect_walls(fam, b["budget"], b["radius"])
    cccs, _ = compute_cccs(W)
    kinds = {}
    for c in cccs:
        kinds[c.kind] = kinds.get(c.kind, 0) + 1
    return {"count": len(cccs), "kinds": kinds, "all_isolated": all(c.isolated for c in cccs),
            "mixed": kinds.get("mixed", 0), "cccs": [c.to_dict(W) for c in cccs]}


def _cmd_pretree(S, args, b, opt):
    fam = _family(S, args)
    rep = pretree_check(fam, b["budget"], opt.get("pretree_radius"), candidates=opt.get("candidates", "powers"))
    out = rep.to_dict()
    out["discrete"] = {"no": "no", "yes": "yes"}.get(rep.discreteness.value, INCONCLUSIVE)
    out["axioms_pass"] = rep.axioms_pass
    w = rep.discreteness.witness
    out["chain_length"] = w["chain_length"] if isinstance(w, dict) else 0
    return out


def _gamma(S, args, b, opt):
    fam = S.select(args)
    kw = dict(translate_budget=b["budget"], R=b["radius"], subdivide=opt.get("subdivide", True))
    if not fam:
        return build_for_group(S.group, [])
    if opt.get("route") == "cubing":
        return rn_via_cubing(fam, **kw)
    return build_for_group(S.group, fam, **kw)


def _cmd_regnbhd(S, args, b, opt):
    gamma = _gamma(S, args, b, opt)
    red = reduce(gamma)
    prov = {k: v for k, v in gamma.provenance.items() if k in ("route", "translate_budget", "radius", "walls",
                                                                "parts", "stars", "unresolved")}
    return {"gamma": gamma.to_dict(), "reduced": red.to_dict(), "shape": red.shape(),
            "bipartite": red.is_bipartite(), "provenance": prov}, red


def _cmd_verify(S, args, b, opt):
    if "chain" in opt:
        n = int(opt["chain"])
        chain = refinement_chain(n)
        bad = verify_refinement_chain(chain, S.group)
        return {"chain_length": n, "mismatches": bad, "labels_verified": not bad,
                "graphs": [g.to_dict() for g in chain]}
    gamma = _gamma(S, args, b, opt)
    rep = verify_rn_properties(gamma)
    return {"pass": rep["pass"], "checks": rep, "shape": gamma.shape()}


_COMMANDS = {"ends": _cmd_ends, "adapted": _cmd_adapted, "crossing": _cmd_crossing, "inumber": _cmd_inumber,
             "cubing": _cmd_cubing, "ccc": _cmd_ccc, "pretree": _cmd_pretree, "regnbhd": _cmd_regnbhd,
             "verify": _cmd_verify}


def run(command: str, S: System, names=(), budgets: dict | None = None, options: dict | None = None,
        timing: bool = False) -> tuple[dict, object]:
    """Run one command; returns (report, drawable object or None)."""
    if command not in _COMMANDS:
        raise InputError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
    b = _budgets(S, budgets or {}, command)
    opt = dict(options or {})
    t0 = time.perf_counter()
    drawable = None
    status = "ok"
    try:
        res = _COMMANDS[command](S, list(names), b, opt)
        if isinstance(res, tuple):
            res, drawable = res
    except (NotRNReady, NonDiscrete, BadPositionError) as exc:
        status = "refused"
        res = {"refused": type(exc).__name__, "reason": str(exc),
               "witness": getattr(exc, "witness", None)}
    report = {"schema": REPORT_SCHEMA, "version": __version__, "command": command, "system": S.name,
              "args": list(names), "budgets": b, "options": opt, "status": status, "result": res}
    if timing:
        report["timing_s"] = round(time.perf_counter() - t0, 3)
    return json.loads(json.dumps(report, default=_default)), drawable


def _default(x):
    if isinstance(x, (set, frozenset)):
        return sorted(x, key=str)
    if isinstance(x, tuple):
        return list(x)
    if hasattr(x, "item"):
        return x.item()
    return str(x)


# -- expectations ------------------------------------------------------------

def _lookup(obj, path: str):
    for part in path.split("."):
        if isinstance(obj, list):
            obj = obj[int(part)]
        elif isinstance(obj, dict) and part in obj:
            obj = obj[part]
        else:
            raise KeyError(path)
    return obj


def _compare(actual, want) -> str:
    """'pass', 'mismatch' or 'inconclusive'."""
    if isinstance(want, dict) and set(want) <= {"min", "max", "in"} and want:
        if "in" in want:
            ok = actual in want["in"]
        else:
            ok = isinstance(actual, (int, float)) and want.get("min", actual) <= actual <= want.get("max", actual)
        return "pass" if ok else "mismatch"
    if actual == want:
        return "pass"
    if actual == INCONCLUSIVE and want != INCONCLUSIVE:
        return "inconclusive"
    return "mismatch"


def check_expectation(S: System, exp: dict) -> dict:
    if exp.get("provenance") not in ("PAPER", "TRIVIAL", "DERIVED"):
        raise SchemaError("untagged expectation refused", f"$.expectations[{exp.get('id', '?')}]")
    report, _ = run(exp["command"], S, exp.get("args", []), exp.get("budgets"), exp.get("options"))
    results = []
    for path, want in sorted(exp["expect"].items()):
        try:
            actual = _lookup(report, path)
            status = _compare(actual, want)
        except (KeyError, IndexError, ValueError):
            actual, status = None, "mismatch"
        results.append({"path": path, "expected": want, "actual": actual, "status": status})
    if "golden" in exp:
        gpath = (S.path.parent if S.path else Path(".")) / exp["golden"]
        golden = BipartiteGraphOfGroups.from_dict(json.loads(gpath.read_text()))
        try:
            got = BipartiteGraphOfGroups.from_dict(report["result"]["reduced"])
            same = golden.isomorphic(got)
        except (KeyError, TypeError):
            same = False
        results.append({"path": "result.reduced", "expected": f"golden:{exp['golden']}",
                        "actual": "isomorphic" if same else "different", "status": "pass" if same else "mismatch"})
    statuses = {r["status"] for r in results}
    overall = "mismatch" if "mismatch" in statuses else ("inconclusive" if "inconclusive" in statuses else "pass")
    return {"id": exp.get("id", exp["command"]), "command": exp["command"], "args": exp.get("args", []),
            "provenance": exp["provenance"], "source": exp.get("source"), "status": overall, "checks": results}


def run_fixture(S: System, only_command: str | None = None, names=None) -> dict:
    checks = []
    for exp in S.expectations:
        if only_command and (exp["command"] != only_command or list(exp.get("args", [])) != list(names or [])):
            continue
        checks.append(check_expectation(S, exp))
    return {"schema": REPORT_SCHEMA, "version": __version__, "command": "fixture", "system": S.name,
            "checks": checks, "status": _overall(checks)}


def _overall(checks) -> str:
    st = {c["status"] for c in checks}
    return "mismatch" if "mismatch" in st else ("inconclusive" if "inconclusive" in st else "pass")


def exit_code(status: str) -> int:
    return {"pass": EXIT_PASS, "mismatch": EXIT_MISMATCH, "inconclusive": EXIT_INCONCLUSIVE}[status]


# -- entry point -------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aiset-forge", description="Almost invariant sets, cubings and "
                                "algebraic regular neighbourhoods on catalog groups.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("system", help="system/fixture JSON file, or the name of a bundled fixture")
    p.add_argument("names", nargs="*", help="set or subgroup names, depending on the command")
    p.add_argument("--budget", type=int, help="translate budget (ball of translating elements)")
    p.add_argument("--radius", type=int, help="evaluation ball radius")
    p.add_argument("--cap", type=int, help="ultrafilter enumeration cap")
    p.add_argument("--dot", type=Path, help="write a DOT drawing (cubing, regnbhd)")
    p.add_argument("--json", type=Path, help="also write the report to this file")
    p.add_argument("--route", choices=["pretree", "cubing"], default="pretree", help="regnbhd/verify route")
    p.add_argument("--no-subdivide", action="store_true", help="skip the invertible-isolated subdivision")
    p.add_argument("--fix", help="cubing: subgroup whose fixed vertex is searched")
    p.add_argument("--chain", type=int, help="verify: replay the BS(4,2) refinement chain of this length")
    p.add_argument("--timing", action="store_true", help="embed wall-clock timing (reports stop being byte-stable)")
    return p


def main(argv=None) -> int:
    a = _parser().parse_args(argv)
    try:
        S = load_fixture(a.system)
        if a.command == "fixture":
            report = run_fixture(S)
            code = exit_code(report["status"])
        else:
            opt = {}
            if a.route != "pretree":
                opt["route"] = a.route
            if a.no_subdivide:
                opt["subdivide"] = False
            if a.fix:
                opt["fix"] = a.fix
            if a.chain is not None:
                opt["chain"] = a.chain
            budgets = {"budget": a.budget, "radius": a.radius, "cap": a.cap}
            report, drawable = run(a.command, S, a.names, budgets, opt, a.timing)
            code = EXIT_MISMATCH if report["status"] == "refused" else EXIT_PASS
            # file expectations apply only when the run used the file's own budgets
            if S.expectations and all(v is None for v in budgets.values()) and not opt:
                matching = run_fixture(S, a.command, a.names)
                if matching["checks"]:
                    report["expectations"] = matching["checks"]
                    code = exit_code(matching["status"])
            if a.dot:
                emit_dot(drawable, a.dot, S.name)
    except (SchemaError, InputError, FileNotFoundError, AntisymmetryError) as exc:
        print(f"aiset-forge: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (GroupError, BudgetExceeded) as exc:
        print(f"aiset-forge: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    sys.stdout.write(text)
    if a.json:
        a.json.write_text(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
