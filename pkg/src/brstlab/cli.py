"""Command-line front end: ``brstlab verify|pages|appendix-b|catalog|reduce``.

Reports are JSON (or aligned text) with every rational written as "num/den".
Exit codes: 0 all checks pass, 1 a mathematical check failed, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction

from .brst import TruncationSpec
from .catalog import AdmissibleLevel, ModuleDescriptor, predict_reduction, table_json
from .homology import predict, resolve_jobs, stabilize, verify
from .specseq import (
    c0_states, convergence_audit, detect_collapse, li_complex, mode_count_filtration,
    page, trivial_filtration,
)
from .structural import FactorKind, closed_form_betti, factor_differential, structural_betti

SCHEMA_VERSION = "brstlab-report/1"
CHECKS = ("d2", "grade", "lemma", "betti", "structural", "pages", "audit")
DEFAULT_CHECKS = ("d2", "grade", "lemma", "betti", "structural")
DEFAULTS = {"flow": 0, "max_grade": 4, "window": 2, "module_dims": {0: 1}, "max_excitations": 0,
            "mu_start": 0, "checks": list(DEFAULT_CHECKS), "format": "json", "jobs": None}

# JSON schema of a report; every subcommand shares the envelope.
REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "command", "config", "checks", "ok"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "command": {"enum": ["verify", "pages", "appendix-b", "catalog", "reduce"]},
        "config": {"type": "object"},
        "checks": {"type": "object", "additionalProperties": {"type": "boolean"}},
        "ok": {"type": "boolean"},
        "failures": {"type": "object"},
        "betti": {"type": "object", "additionalProperties": {"$ref": "#/$defs/table"}},
        "pages": {"type": "object"},
        "audit": {"type": "object"},
        "catalog": {"type": "object"},
        "reductions": {"type": "array"},
        "timings": {"type": "object"},
    },
    "$defs": {
        "table": {
            "type": "object",
            "required": ["entries", "artifacts"],
            "properties": {
                "entries": {"type": "array", "items": {"type": "array", "items": {"type": "integer"},
                                                       "minItems": 3, "maxItems": 3}},
                "artifacts": {"type": "array", "items": {"type": "array", "items": {"type": "integer"},
                                                         "minItems": 2, "maxItems": 2}},
            },
        },
    },
}


class ConfigError(ValueError):
    pass


def parse_module_dims(text: str) -> dict:
    """Lines "grade dim" with '#' comments."""
    dims = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ConfigError(f"module_dims line {lineno}: expected 'grade dim', got {line!r}")
        try:
            g, d = int(parts[0]), int(parts[1])
        except ValueError:
            raise ConfigError(f"module_dims line {lineno}: non-integer entry {line!r}") from None
        dims[g] = dims.get(g, 0) + d
    return dims


def load_module_dims(value) -> dict:
    if isinstance(value, dict):
        try:
            return {int(k): int(v) for k, v in value.items()}
        except (TypeError, ValueError):
            raise ConfigError(f"bad module_dims map {value!r}") from None
    value = str(value)
    if os.path.exists(value):
        with open(value) as fh:
            return parse_module_dims(fh.read())
    out = {}
    for item in value.split(","):
        if not item.strip():
            continue
        try:
            g, d = item.split(":")
            out[int(g)] = int(d)
        except ValueError:
            raise ConfigError(f"module_dims {value!r} is neither a file nor 'g:d,...'") from None
    return out


def effective_config(args) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cfg = dict(DEFAULTS)
    path = getattr(args, "config", None)
    if path:
        try:
            with open(path) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        cfg.update(loaded)
    for key in DEFAULTS:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    cfg["module_dims"] = load_module_dims(cfg["module_dims"])
    checks = cfg["checks"]
    if isinstance(checks, str):
        checks = [c for c in checks.split(",") if c]
    bad = [c for c in checks if c not in CHECKS]
    if bad:
        raise ConfigError(f"unknown checks {bad}; choose from {list(CHECKS)}")
    cfg["checks"] = [c for c in CHECKS if c in checks]
    if cfg["format"] not in ("json", "text"):
        raise ConfigError(f"unknown format {cfg['format']!r}")
    cfg["jobs"] = resolve_jobs(cfg["jobs"])
    return cfg


def spec_from(cfg: dict) -> TruncationSpec:
    try:
        return TruncationSpec(flow=int(cfg["flow"]), max_grade=int(cfg["max_grade"]),
                              window=int(cfg["window"]), module_dims=cfg["module_dims"],
                              max_excitations=int(cfg["max_excitations"]), mu_start=int(cfg["mu_start"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def _config_echo(cfg: dict) -> dict:
    out = {k: v for k, v in cfg.items() if k != "jobs"}
    out["module_dims"] = {str(g): d for g, d in sorted(cfg["module_dims"].items())}
    return out


def _envelope(command: str, cfg: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command, "config": _config_echo(cfg),
            "checks": {}, "ok": True}


class _Timer:
    def __init__(self, enabled: bool):
        self.enabled = enabled
        self.times: dict = {}

    def __call__(self, name: str):
        timer = self

        class _Phase:
            def __enter__(self):
                self.t = time.perf_counter()

            def __exit__(self, *exc):
                timer.times[name] = round(time.perf_counter() - self.t, 3)

        return _Phase()


def _pages_block(fc) -> dict:
    r_max, einf = detect_collapse(fc)
    e0 = page(fc, 0)
    e1 = page(fc, 1, with_differentials=False)
    d0 = []
    for (w, p, q), m in sorted(e0.differentials.items()):
        if m.is_zero():
            continue
        d0.append({"grade": w, "from": [p, q], "shape": list(m.shape),
                   "entries": [[i, j, f"{v.numerator}/{v.denominator}"] for i, j, v in m.triplets()]})
    dims = lambda pg: [[p, q, d] for (p, q), d in sorted(pg.dims.items()) if d]
    return {"filtration": fc.name, "r_max": r_max, "E0": dims(e0), "E1": dims(e1),
            "Einf": dims(einf), "d0": d0}


def run_verify(cfg: dict, timings: bool = False) -> tuple[dict, int]:
    spec = spec_from(cfg)
    report = _envelope("verify", cfg)
    checks = cfg["checks"]
    clock = _Timer(timings)
    with clock("verify"):
        rec = verify(spec, lemma="lemma" in checks, jobs=cfg["jobs"])
    results = {"d2": rec.d_squared_zero, "grade": rec.grade_preserved, "lemma": rec.lemma_equivalence,
               "betti": rec.betti_matches_prediction, "structural": rec.structural_path_agrees}
    report["checks"] = {c: results[c] for c in checks if c in results}
    report["failures"] = {k: v for k, v in rec.failures.items() if v}
    report["betti"] = {"raw": rec.raw.to_json(), "stabilized": rec.stabilized.to_json(),
                       "predicted": rec.predicted.to_json(), "structural": rec.structural.to_json()}
    if "pages" in checks or "audit" in checks:
        with clock("specseq"):
            ell = max(0, -spec.flow)
            fc = li_complex(spec.flow, spec.max_grade + ell * (ell + 1) // 2, spec.max_excitations)
            if "pages" in checks:
                block = _pages_block(fc)
                report["pages"] = block
                report["checks"]["pages"] = block["r_max"] <= 1
            if "audit" in checks:
                audit = convergence_audit(fc)
                report["audit"] = {"bounded_convergence": audit.bounded_convergence,
                                   "exhaustive": audit.exhaustive, "hausdorff": audit.hausdorff,
                                   "conformally_bounded": audit.conformally_bounded,
                                   "collapse_page": audit.collapse_page}
                report["checks"]["audit"] = audit.ok
    if timings:
        report["timings"] = clock.times
    report["ok"] = all(report["checks"].values())
    return report, 0 if report["ok"] else 1


def run_pages(cfg: dict, filtration: str = "li") -> tuple[dict, int]:
    spec = spec_from(cfg)
    report = _envelope("pages", cfg)
    report["config"]["filtration"] = filtration
    blocks = c0_states(spec.flow, spec.max_grade, spec.max_excitations)
    if filtration == "li":
        fc = li_complex(spec.flow, spec.max_grade, spec.max_excitations)
    elif filtration == "trivial":
        fc = trivial_filtration(blocks)
    elif filtration == "mode-count":
        fc = mode_count_filtration(blocks)
    else:
        raise ConfigError(f"unknown filtration {filtration!r}")
    report["pages"] = _pages_block(fc)
    audit = convergence_audit(fc)
    report["checks"] = {"audit": audit.ok}
    report["ok"] = audit.ok
    return report, 0 if report["ok"] else 1


def run_appendix_b(cfg: dict) -> tuple[dict, int]:
    spec = spec_from(cfg).replace(flow=0)
    report = _envelope("appendix-b", cfg)
    report["betti"] = {}
    for tag in ("gauged", "gauged_lattice_window", "cartan"):
        kind = FactorKind(tag)
        got = factor_differential(kind, spec).betti()
        report["betti"][tag] = got.to_json()
        report["checks"][tag] = got.same_values(closed_form_betti(kind))
    report["ok"] = all(report["checks"].values())
    return report, 0 if report["ok"] else 1


def run_catalog(u: int, v: int, cfg: dict) -> tuple[dict, int]:
    try:
        level = AdmissibleLevel(u, v)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    report = _envelope("catalog", cfg)
    report["config"].update({"u": u, "v": v})
    report["catalog"] = table_json(level)
    reductions = []
    if v > 1:
        generic = Fraction(1, 2 * u * v + 1)
        for r, s in level.labels():
            for kind in ("relaxed_E", "relaxed_Eminus", "relaxed_Eplus", "projective_P"):
                if kind == "projective_P" and s > v - 2:
                    continue
                for ell in range(-2, 3):
                    m = ModuleDescriptor(kind, r, s, ell, generic if kind == "relaxed_E" else None)
                    reductions.append({"kind": kind, "r": r, "s": s, "flow": ell,
                                       "result": str(predict_reduction(level, m))})
    report["reductions"] = reductions
    return report, 0


def run_reduce(cfg: dict) -> tuple[dict, int]:
    spec = spec_from(cfg)
    report = _envelope("reduce", cfg)
    _, stable = stabilize(spec, cfg["jobs"])
    predicted = predict(spec)
    report["betti"] = {"stabilized": stable.to_json(), "predicted": predicted.to_json(),
                       "structural": structural_betti(spec).to_json()}
    report["checks"] = {"betti": stable.same_values(predicted)}
    report["ok"] = report["checks"]["betti"]
    return report, 0 if report["ok"] else 1


def render_text(report: dict) -> str:
    lines = [f"{report['schema_version']} {report['command']}"]
    for k, v in report["config"].items():
        lines.append(f"  {k} = {v}")
    for name, ok in report["checks"].items():
        lines.append(f"check {name}: {'pass' if ok else 'FAIL'}")
    for name, table in report.get("betti", {}).items():
        entries = ", ".join(f"({p},{w})={d}" for p, w, d in table["entries"]) or "zero"
        arts = "".join(f" artifact({p},{w})" for p, w in table["artifacts"])
        lines.append(f"betti {name}: {entries}{arts}")
    if "pages" in report:
        pg = report["pages"]
        lines.append(f"pages ({pg['filtration']}): r_max = {pg['r_max']}")
        for key in ("E0", "E1", "Einf"):
            lines.append(f"  {key}: " + (" ".join(f"({p},{q})={d}" for p, q, d in pg[key]) or "zero"))
    if "catalog" in report:
        cat = report["catalog"]
        lines.append(f"k = {cat['k']}  c_vir = {cat['central_charges']['c_vir']}")
        for row in cat["rows"]:
            lines.append(f"  r={row['r']} s={row['s']} lambda={row['lambda']} Delta={row['Delta']} "
                         f"h={row['h']} id={tuple(row['id'])}")
    for red in report.get("reductions", []):
        lines.append(f"  {red['kind']}({red['r']},{red['s']}) flow {red['flow']}: {red['result']}")
    for name, t in report.get("timings", {}).items():
        lines.append(f"time {name}: {t}s")
    lines.append("ok" if report["ok"] else "FAILED")
    return "\n".join(lines) + "\n"


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="brstlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--flow", type=int)
        p.add_argument("--max-grade", dest="max_grade", type=int)
        p.add_argument("--window", type=int)
        p.add_argument("--module-dims", dest="module_dims",
                       help="file with 'grade dim' lines, or inline 'g:d,g:d'")
        p.add_argument("--max-excitations", dest="max_excitations", type=int)
        p.add_argument("--mu-start", dest="mu_start", type=int)
        p.add_argument("--format", choices=("json", "text"))
        p.add_argument("--jobs", type=int, help="worker processes (default $BRSTLAB_JOBS or 1)")
        p.add_argument("--output", "-o", help="write the report here instead of stdout")
        return p

    v = common(sub.add_parser("verify", help="run the complex checks and Betti comparisons"))
    v.add_argument("--checks", help=f"comma list from {','.join(CHECKS)}")
    v.add_argument("--timings", action="store_true", help="add wall times (makes output run-dependent)")
    p = common(sub.add_parser("pages", help="spectral sequence pages of C0"))
    p.add_argument("--filtration", choices=("li", "trivial", "mode-count"), default="li")
    common(sub.add_parser("appendix-b", help="gauged, gauged-lattice and Cartan complexes"))
    c = common(sub.add_parser("catalog", help="admissible-level tables"))
    c.add_argument("--u", type=int, required=True)
    c.add_argument("--v", type=int, required=True)
    common(sub.add_parser("reduce", help="predicted and computed reduction for given module dims"))
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = effective_config(args)
        if args.command == "verify":
            report, code = run_verify(cfg, args.timings)
        elif args.command == "pages":
            report, code = run_pages(cfg, args.filtration)
        elif args.command == "appendix-b":
            report, code = run_appendix_b(cfg)
        elif args.command == "catalog":
            report, code = run_catalog(args.u, args.v, cfg)
        else:
            report, code = run_reduce(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"brstlab: configuration error: {exc}", file=sys.stderr)
        return 2
    text = render_text(report) if cfg["format"] == "text" else json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if code == 1:
        print("brstlab: check failed: " + json.dumps(report.get("failures", {}), sort_keys=True), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
