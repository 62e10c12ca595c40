"""Command-line front end: parse plant descriptions, run the stability
analyses, and emit verdicts, certificates, sampling reports, and
trajectory dumps.

Exit codes: 0 Stable / verification passed, 1 NotStable / verification
failed, 2 Indeterminate, 3 usage or input errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import certify, oracle, sos
from .certify import INDETERMINATE, NOT_STABLE, STABLE
from .model import ModelError, SisModel

EXIT_BY_VERDICT = {STABLE: 0, NOT_STABLE: 1, INDETERMINATE: 2}
EXIT_ERROR = 3

DEFAULT_GRID = 32
DEFAULT_SNAPSHOT_TIMES = (0.0, 3.0, 5.0, 20.0)


class CliError(Exception):
    """Bad flags or inputs; mapped to exit code 3."""


@dataclass
class RunConfig:
    """Validated per-invocation settings."""

    command: str
    model_path: str
    slack: Optional[Tuple[int, ...]] = None
    grid: Optional[Tuple[int, ...]] = None
    tolerances: dict = field(default_factory=dict)
    output_path: Optional[str] = None
    format: str = "text"
    # command-specific extras
    auto_slack: int = 0
    certificate_path: Optional[str] = None
    sites: Optional[Tuple[int, ...]] = None
    init_spec: Optional[str] = None
    t_end: float = 20.0
    dt: float = 1e-3
    record_dt: float = 0.01
    snapshot_times: Tuple[float, ...] = DEFAULT_SNAPSHOT_TIMES
    snapshot_prefix: Optional[str] = None

    def validate(self):
        if self.format not in ("text", "json"):
            raise CliError(f"unknown format {self.format!r}")
        if self.command == "certify" and not self.output_path:
            raise CliError("certify needs --output for the certificate file")
        if self.command == "verify" and not self.certificate_path:
            raise CliError("verify needs a certificate file")
        if self.command == "simulate":
            if not self.sites:
                raise CliError("simulate needs --sites (ring size per "
                               "direction)")
            if not self.output_path:
                raise CliError("simulate needs --output for the trajectory "
                               "CSV")
            if self.t_end <= 0 or self.dt <= 0 or self.record_dt <= 0:
                raise CliError("time parameters must be positive")
        return self


# ---------------------------------------------------------------------------
# model loading and identity
# ---------------------------------------------------------------------------


def parse_model(path: str) -> SisModel:
    """Load a plant description from a TOML file (exact-rational entries)."""
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read model file: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ModelError(f"{path}: not valid TOML ({exc})") from exc
    return SisModel.from_dict(doc)


def model_digest(m: SisModel) -> str:
    """Stable hash of the exact model data (layout-independent)."""
    parts = [f"n0={m.n0}"]
    for d in m.directions:
        parts.append(f"dir:{d.kind}:{d.n_pos}:{d.n_neg}:{d.period or 0}")
    for name, block in (("A_TT", m.A_TT), ("A_TS", m.A_TS),
                        ("A_ST", m.A_ST), ("A_SS", m.A_SS)):
        parts.append(name)
        for row in block:
            parts.append(";".join(f"{q.re}|{q.im}" for q in row))
    return hashlib.sha256("\n".join(parts).encode()).hexdigest()


# ---------------------------------------------------------------------------
# report plumbing
# ---------------------------------------------------------------------------


def _jsonable(obj):
    """Deterministic JSON-safe copy: tuples become lists, complex numbers
    become strings parseable by complex()."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return str(obj)
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return obj
    try:  # numpy scalars
        return _jsonable(obj.item())
    except AttributeError:
        return str(obj)


def _print_text(doc: dict, indent: int = 0, stream=None) -> None:
    stream = stream or sys.stdout
    pad = "  " * indent
    for key, value in doc.items():
        if isinstance(value, dict):
            print(f"{pad}{key}:", file=stream)
            _print_text(value, indent + 1, stream)
        elif isinstance(value, list) and any(isinstance(v, dict)
                                             for v in value):
            print(f"{pad}{key}:", file=stream)
            for item in value:
                print(f"{pad}  -", file=stream)
                _print_text(item, indent + 2, stream)
        elif isinstance(value, list):
            print(f"{pad}{key}: {', '.join(str(v) for v in value)}",
                  file=stream)
        else:
            print(f"{pad}{key}: {value}", file=stream)


def emit(doc: dict, cfg: RunConfig) -> None:
    doc = _jsonable(doc)
    if cfg.format == "json":
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        _print_text(doc)
    if cfg.output_path and cfg.command not in ("certify", "simulate"):
        with open(cfg.output_path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")


# ---------------------------------------------------------------------------
# analysis commands
# ---------------------------------------------------------------------------


def _run_analysis(m: SisModel, cfg: RunConfig):
    """Dispatch with optional componentwise slack escalation."""
    slack = cfg.slack if cfg.slack is not None \
        else tuple(0 for _ in range(m.L))
    attempts = []
    verdict = None
    for extra in range(cfg.auto_slack + 1):
        trial = tuple(s + extra for s in slack)
        t0 = time.perf_counter()
        verdict = certify.analyze(m, trial)
        attempts.append({
            "slack": list(trial),
            "verdict": verdict.status,
            "elapsed_s": round(time.perf_counter() - t0, 3),
        })
        if verdict.status != INDETERMINATE:
            break
    return verdict, attempts


def _analysis_doc(m: SisModel, verdict, attempts) -> dict:
    return {
        "model": m.name,
        "layout": [d.kind + (f"({d.period})" if d.period else "")
                   for d in m.directions],
        "verdict": verdict.status,
        "epsilon_star": verdict.epsilon_star,
        "reason": verdict.reason,
        "attempts": attempts,
    }


def cmd_analyze(cfg: RunConfig) -> int:
    m = parse_model(cfg.model_path)
    m.require_supported()
    verdict, attempts = _run_analysis(m, cfg)
    emit(_analysis_doc(m, verdict, attempts), cfg)
    return EXIT_BY_VERDICT[verdict.status]


def cmd_certify(cfg: RunConfig) -> int:
    m = parse_model(cfg.model_path)
    m.require_supported()
    verdict, attempts = _run_analysis(m, cfg)
    doc = _analysis_doc(m, verdict, attempts)
    if verdict.status != STABLE:
        doc["certificate_written"] = False
        emit(doc, cfg)
        print("no certificate: verdict is not Stable", file=sys.stderr)
        return EXIT_BY_VERDICT[verdict.status]

    payload = {
        "model_hash": model_digest(m),
        "model_name": m.name,
        "slack": attempts[-1]["slack"],
        "epsilon_star": verdict.epsilon_star,
    }
    if verdict.certificate is not None:
        all_infinite = all(d.kind == "infinite" for d in m.directions)
        payload["kind"] = "global" if all_infinite else "domain"
        if not all_infinite:
            payload["variable_order"] = verdict.reason["variable_order"]
        payload["certificate"] = json.loads(
            sos.certificate_to_json(verdict.certificate))
    elif "grid_minimum" in verdict.reason:
        payload["kind"] = "exact-grid"
        payload["grid_minimum"] = verdict.reason["grid_minimum"]
    else:
        payload["kind"] = "constant-rows"
        if "rows" in verdict.reason:
            payload["rows"] = verdict.reason["rows"]
    with open(cfg.output_path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")
    doc["certificate_written"] = True
    doc["certificate_path"] = cfg.output_path
    emit(doc, cfg)
    return 0


def _domain_targets(m: SisModel):
    """Rebuild the positivity targets of the mixed/periodic path without
    solving anything: (reorder, table, folded rows, refuted values,
    domain polynomials)."""
    work, order = m.infinite_first()
    table = certify.routh_table(certify.build_phi(
        certify.char_poly_K(certify.build_K(work))))
    F_list, refuted, _reduced = certify.fold_targets(work, table)
    num_infinite = sum(1 for d in work.directions if d.kind == "infinite")
    D_list = (sos.build_domain_polys(work.directions, num_infinite)
              if num_infinite < work.L else [])
    return work, order, table, F_list, refuted, D_list


def cmd_verify(cfg: RunConfig) -> int:
    m = parse_model(cfg.model_path)
    m.require_supported()
    try:
        with open(cfg.certificate_path) as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read certificate: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"certificate is not valid JSON: {exc}") from exc

    if payload.get("model_hash") != model_digest(m):
        raise CliError("certificate was issued for a different model "
                       "(hash mismatch)")
    kind = payload.get("kind")
    rtol = float(cfg.tolerances.get("rtol", 1e-6))
    ptol = float(cfg.tolerances.get("ptol", 1e-8))
    doc = {"model": m.name, "kind": kind,
           "certificate_path": cfg.certificate_path}

    if kind in ("global", "domain"):
        cert = sos.certificate_from_json(json.dumps(payload["certificate"]))
        if kind == "global":
            if any(d.kind != "infinite" for d in m.directions):
                raise CliError("global certificate for a non-infinite model")
            F_list, D_list = [certify.build_F_thm1(m)], []
        else:
            work, order, table, F_list, refuted, D_list = _domain_targets(m)
            if payload.get("variable_order") != list(order):
                raise CliError("certificate variable order does not match "
                               "the model")
            if table.nonpositive_set or refuted:
                raise CliError("model is refuted by its Routh table; "
                               "certificate cannot apply")
        rep = sos.verify_certificate(cert, F_list, D_list,
                                     rtol=rtol, ptol=ptol)
        margin = cert.epsilon - rep.l1_error
        doc.update({
            "valid": bool(rep.valid and margin > 0),
            "epsilon": cert.epsilon,
            "residual": rep.residual,
            "min_eig": rep.min_eig,
            "l1_error": rep.l1_error,
            "certified_lower_bound": margin,
        })
    elif kind == "exact-grid":
        work, order, table, _F, _r, _D = _domain_targets(m)
        if table.nonpositive_set or not table.nonconstant_polys:
            raise CliError("model does not match an exact-grid certificate")
        periods = [d.period for d in work.directions]
        value, point, _k = sos.finite_grid_positivity(
            table.nonconstant_polys, periods)
        stored = float(payload.get("grid_minimum", 0.0))
        doc.update({
            "valid": bool(value > 0
                          and abs(value - stored) <= 1e-9 * max(1.0, value)),
            "grid_minimum": value,
            "stored_minimum": stored,
        })
    elif kind == "constant-rows":
        _work, _order, table, F_list, refuted, _D = _domain_targets(m)
        ok = (not table.nonpositive_set and not refuted and not F_list)
        doc.update({
            "valid": bool(ok),
            "rows": [certify._const_repr(e) for e in table.ebar],
        })
    else:
        raise CliError(f"unknown certificate kind {kind!r}")

    emit(doc, cfg)
    return 0 if doc["valid"] else 1


# ---------------------------------------------------------------------------
# oracle commands
# ---------------------------------------------------------------------------


def cmd_sample(cfg: RunConfig) -> int:
    m = parse_model(cfg.model_path)
    m.require_supported()
    grid = cfg.grid if cfg.grid is not None \
        else tuple(DEFAULT_GRID for _ in range(m.L))
    if len(grid) != m.L:
        raise CliError(f"--grid needs {m.L} entries")
    tol = float(cfg.tolerances.get("tol", 1e-8))
    value, point = oracle.freq_sample_abscissa(m, grid, tol=tol)
    emit({
        "model": m.name,
        "grid": list(grid),
        "max_abscissa": value,
        "argmax": list(point),
        "negative_everywhere_sampled": bool(value < 0),
        "note": ("necessary stability evidence only; sufficient only when "
                 "every direction is periodic and sampled at its period"),
    }, cfg)
    return 0


def _parse_init(spec: Optional[str], L: int):
    """'k1,..,kL,c=v;...' triples; default: unit value, origin, state 0."""
    if not spec:
        return [(tuple(0 for _ in range(L)), 0, 1.0)]
    triples = []
    for item in spec.split(";"):
        item = item.strip()
        if not item:
            continue
        try:
            head, value = item.split("=")
            nums = [int(x) for x in head.split(",")]
            if len(nums) != L + 1:
                raise ValueError(f"need {L} site indices plus a state index")
            triples.append((tuple(nums[:L]), nums[L], float(value)))
        except ValueError as exc:
            raise CliError(f"bad --init item {item!r}: {exc}") from exc
    if not triples:
        raise CliError("--init given but no triples parsed")
    return triples


def cmd_simulate(cfg: RunConfig) -> int:
    m = parse_model(cfg.model_path)
    m.require_supported()
    if len(cfg.sites) != m.L:
        raise CliError(f"--sites needs {m.L} entries")
    ls = oracle.lift_finite_system(m, cfg.sites)
    x0 = oracle.initial_state(ls, _parse_init(cfg.init_spec, m.L))
    traj = oracle.simulate(ls, x0, t_end=cfg.t_end, dt=cfg.dt,
                           record_dt=cfg.record_dt)
    oracle.write_trajectory_csv(ls, traj, cfg.output_path)

    stem = cfg.snapshot_prefix
    if stem is None:
        stem = cfg.output_path
        if stem.endswith(".csv"):
            stem = stem[:-4]
    snapshots = {}
    for t in cfg.snapshot_times:
        if t > cfg.t_end + 1e-12:
            continue
        path = f"{stem}_t{t:g}.csv"
        oracle.write_snapshot_csv(ls, traj, t, path)
        idx = min(range(len(traj.times)), key=lambda i: abs(traj.times[i] - t))
        snapshots[f"{t:g}"] = {"path": path,
                               "norm": float(traj.norms[idx])}

    doc = {
        "model": m.name,
        "sites": list(cfg.sites),
        "state_dim": int(ls.Abig.shape[0]),
        "trajectory_path": cfg.output_path,
        "initial_norm": float(traj.norms[0]),
        "final_norm": float(traj.norms[-1]),
        "snapshots": snapshots,
    }
    if traj.norms[0] > 0 and traj.norms[-1] > 0:
        alpha, beta = oracle.decay_fit(traj.times, traj.norms)
        doc["fit"] = {"alpha": alpha, "beta": beta,
                      "decaying": bool(beta > 0)}
    emit(doc, cfg)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep exit codes: 2 is reserved for verdicts
        raise CliError(message)


def _int_tuple(text: str) -> Tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError as exc:
        raise CliError(f"expected comma-separated integers, got {text!r}") \
            from exc


def _float_tuple(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise CliError(f"expected comma-separated numbers, got {text!r}") \
            from exc


def build_parser() -> _Parser:
    p = _Parser(prog="siscert",
                description="Stability certification for spatially "
                            "interconnected systems")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, output_help):
        sp.add_argument("model", help="TOML model file")
        sp.add_argument("--format", choices=("text", "json"), default="text")
        sp.add_argument("--output", default=None, help=output_help)

    sp = sub.add_parser("analyze", help="decide stability")
    common(sp, "also write the JSON report here")
    sp.add_argument("--slack", type=_int_tuple, default=None,
                    help="per-direction certificate degree slack e1,e2,...")
    sp.add_argument("--auto-slack", type=int, default=0, metavar="MAX",
                    help="on Indeterminate, raise every slack component by "
                         "1 up to MAX times")

    sp = sub.add_parser("certify", help="analyze and write a certificate")
    common(sp, "certificate JSON path (required)")
    sp.add_argument("--slack", type=_int_tuple, default=None)
    sp.add_argument("--auto-slack", type=int, default=0, metavar="MAX")

    sp = sub.add_parser("verify", help="re-verify a certificate exactly")
    common(sp, "also write the JSON report here")
    sp.add_argument("certificate", help="certificate JSON file")
    sp.add_argument("--rtol", type=float, default=1e-6,
                    help="coefficient reconstruction tolerance")
    sp.add_argument("--ptol", type=float, default=1e-8,
                    help="Gram eigenvalue tolerance")

    sp = sub.add_parser("sample", help="frequency-sample the symbol")
    common(sp, "also write the JSON report here")
    sp.add_argument("--grid", type=_int_tuple, default=None,
                    help="per-direction sample counts n1,n2,...")
    sp.add_argument("--tol", type=float, default=1e-8,
                    help="abscissa bisection tolerance")

    sp = sub.add_parser("simulate", help="integrate a finite closure")
    common(sp, "trajectory CSV path (required)")
    sp.add_argument("--sites", type=_int_tuple, required=False, default=None,
                    help="ring size per direction R1,R2,...")
    sp.add_argument("--init", default=None,
                    help="initial condition 'k1,..,kL,c=v;...' "
                         "(default: unit at the origin, state 0)")
    sp.add_argument("--t-end", type=float, default=20.0)
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--record-dt", type=float, default=0.01)
    sp.add_argument("--snapshot-times", type=_float_tuple,
                    default=DEFAULT_SNAPSHOT_TIMES,
                    help="comma-separated times for field snapshots")
    sp.add_argument("--snapshot-prefix", default=None,
                    help="snapshot files go to PREFIX_t<t>.csv")
    return p


def config_from_args(args) -> RunConfig:
    cfg = RunConfig(
        command=args.command,
        model_path=args.model,
        format=args.format,
        output_path=args.output,
    )
    if args.command in ("analyze", "certify"):
        cfg.slack = args.slack
        cfg.auto_slack = max(0, int(args.auto_slack))
    if args.command == "verify":
        cfg.certificate_path = args.certificate
        cfg.tolerances = {"rtol": args.rtol, "ptol": args.ptol}
    if args.command == "sample":
        cfg.grid = args.grid
        cfg.tolerances = {"tol": args.tol}
    if args.command == "simulate":
        cfg.sites = args.sites
        cfg.init_spec = args.init
        cfg.t_end = args.t_end
        cfg.dt = args.dt
        cfg.record_dt = args.record_dt
        cfg.snapshot_times = tuple(args.snapshot_times)
        cfg.snapshot_prefix = args.snapshot_prefix
    return cfg.validate()


COMMANDS = {
    "analyze": cmd_analyze,
    "certify": cmd_certify,
    "verify": cmd_verify,
    "sample": cmd_sample,
    "simulate": cmd_simulate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = config_from_args(args)
        return COMMANDS[cfg.command](cfg)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ModelError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
